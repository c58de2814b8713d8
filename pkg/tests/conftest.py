import numpy as np
import pytest

import trapaudit as ta


@pytest.fixture(scope="session")
def synth_scenario():
    """Reference synthetic scenario (seed 0, 128 px) shared across tests."""
    scenario, truth = ta.generate_synthetic(0, 128)
    return scenario, truth


@pytest.fixture(scope="session")
def scenario_dir(tmp_path_factory, synth_scenario):
    """The reference scenario saved to disk, for CLI and manifest tests."""
    scenario, truth = synth_scenario
    out = tmp_path_factory.mktemp("scene")
    manifest = ta.save_scenario(scenario, out)
    return {"dir": out, "manifest": manifest, "truth": truth}


def random_mask(rng: np.random.Generator, h: int, w: int, density: float) -> np.ndarray:
    return rng.random((h, w)) < density


# Verdict lines recorded by the acceptance tests; printed in the terminal
# summary because pytest's fd capture would swallow mid-test writes.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.line(line)
