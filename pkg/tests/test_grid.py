import math

import numpy as np
import pytest

from trapaudit import (
    BandNameError,
    BitMask,
    Geotransform,
    GridF32,
    ParameterError,
    RasterStack,
    ShapeError,
    gradient_magnitude,
    threshold,
)


def make_stack(arrays: dict, pixel_size=10.0, nodata=None) -> RasterStack:
    return RasterStack(
        geotransform=Geotransform(0.0, 1000.0, pixel_size=pixel_size),
        bands={k: GridF32(np.asarray(v, np.float32), nodata=nodata) for k, v in arrays.items()},
    )


class TestGeotransform:
    def test_pixel_centers(self):
        gt = Geotransform(100.0, 500.0, pixel_size=10.0)
        e, n = gt.pixel_centers(3, 2)
        assert e.tolist() == [105.0, 115.0, 125.0]
        assert n.tolist() == [495.0, 485.0]

    def test_extent(self):
        gt = Geotransform(0.0, 1000.0, pixel_size=10.0)
        assert gt.extent(4, 5) == (0.0, 950.0, 40.0, 1000.0)

    def test_rejects_bad_pixel_size(self):
        with pytest.raises(ParameterError):
            Geotransform(0.0, 0.0, pixel_size=0.0)
        with pytest.raises(ParameterError):
            Geotransform(0.0, 0.0, pixel_size=-3.0)
        with pytest.raises(ParameterError):
            Geotransform(math.nan, 0.0)


class TestGridF32:
    def test_values_read_only(self):
        g = GridF32(np.zeros((2, 2), np.float32))
        with pytest.raises(ValueError):
            g.values[0, 0] = 1.0

    def test_valid_mask_nodata_and_nan(self):
        g = GridF32(np.array([[1.0, -9999.0], [math.nan, 4.0]], np.float32), nodata=-9999.0)
        assert g.valid_mask().tolist() == [[True, False], [False, True]]

    def test_equality_with_nan(self):
        a = GridF32(np.array([[math.nan, 1.0]], np.float32))
        b = GridF32(np.array([[math.nan, 1.0]], np.float32))
        c = GridF32(np.array([[math.nan, 2.0]], np.float32))
        assert a == b
        assert a != c


class TestRasterStack:
    def test_band_lookup_error_lists_names(self):
        stack = make_stack({"red": np.zeros((2, 2)), "elevation": np.ones((2, 2))})
        with pytest.raises(BandNameError) as err:
            stack.band("green")
        msg = str(err.value)
        assert "green" in msg and "red" in msg and "elevation" in msg

    def test_rejects_bad_band_name(self):
        with pytest.raises(Exception):
            make_stack({"Red": np.zeros((2, 2))})

    def test_rejects_mismatched_shapes(self):
        with pytest.raises(ShapeError):
            make_stack({"a": np.zeros((2, 2)), "b": np.zeros((3, 2))})


class TestGradient:
    def test_planar_ramps_match_analytic_slope(self):
        # acceptance-pinned: 5 random slopes, interior within 1e-6 relative.
        # Slopes are random dyadic rationals and the pixel size is a power of
        # two, so the plane is exactly representable in the float32 band and
        # the check isolates the differencing math from storage rounding.
        rng = np.random.default_rng(11)
        ps = 8.0
        ys, xs = np.mgrid[0:32, 0:32].astype(np.float64)
        for _ in range(5):
            sx = int(rng.integers(-512, 513)) / 256.0
            sy = int(rng.integers(-512, 513)) / 256.0
            field = sx * xs * ps + sy * ys * ps
            stack = make_stack({"z": field}, pixel_size=ps)
            grad = gradient_magnitude(stack, "z").values
            want = math.hypot(sx, sy)
            interior = grad[1:-1, 1:-1]
            if want == 0.0:
                assert np.all(interior == 0.0)
            else:
                rel = np.abs(interior - want) / want
                assert rel.max() < 1e-6

    def test_quantized_ramps_stay_within_storage_error(self):
        # arbitrary slopes hit float32 storage rounding; bound scales with it
        rng = np.random.default_rng(12)
        ps = 10.0
        ys, xs = np.mgrid[0:32, 0:32].astype(np.float64)
        for _ in range(5):
            sx, sy = rng.uniform(-2.0, 2.0, 2)
            field = sx * xs * ps + sy * ys * ps
            stack = make_stack({"z": field}, pixel_size=ps)
            grad = gradient_magnitude(stack, "z").values
            want = math.hypot(sx, sy)
            if want > 0.01:
                rel = np.abs(grad[1:-1, 1:-1] - want) / want
                assert rel.max() < 5e-6

    def test_constant_field_is_exactly_zero(self):
        stack = make_stack({"z": np.full((16, 16), 7.25)})
        assert np.all(gradient_magnitude(stack, "z").values == 0.0)

    def test_one_sided_borders(self):
        ps = 10.0
        ys, xs = np.mgrid[0:8, 0:8].astype(np.float64)
        stack = make_stack({"z": 3.0 * xs * ps}, pixel_size=ps)
        grad = gradient_magnitude(stack, "z").values
        # a plane has the same one-sided and central differences everywhere
        assert np.allclose(grad, 3.0, rtol=1e-6)

    def test_nodata_poisons_neighbors(self):
        field = np.ones((5, 5)) * 2.0
        field[2, 2] = -1.0
        stack = make_stack({"z": field}, nodata=-1.0)
        grad = gradient_magnitude(stack, "z")
        assert grad.nodata == -1.0
        bad = grad.values == -1.0
        # the nodata pixel and its 4-neighbors carry the sentinel
        for r, c in [(2, 2), (1, 2), (3, 2), (2, 1), (2, 3)]:
            assert bad[r, c]
        assert not bad[0, 0]

    def test_unknown_band(self):
        stack = make_stack({"z": np.zeros((4, 4))})
        with pytest.raises(BandNameError):
            gradient_magnitude(stack, "nope")


class TestThreshold:
    def test_all_operators(self):
        g = GridF32(np.array([[1.0, 2.0, 3.0]], np.float32))
        assert threshold(g, "<", 2.0).data.tolist() == [[True, False, False]]
        assert threshold(g, "<=", 2.0).data.tolist() == [[True, True, False]]
        assert threshold(g, ">", 2.0).data.tolist() == [[False, False, True]]
        assert threshold(g, ">=", 2.0).data.tolist() == [[False, True, True]]

    def test_nodata_never_selected(self):
        g = GridF32(np.array([[5.0, -9999.0]], np.float32), nodata=-9999.0)
        assert threshold(g, "<", 100.0).data.tolist() == [[True, False]]

    def test_bad_operator_and_value(self):
        g = GridF32(np.zeros((1, 1), np.float32))
        with pytest.raises(ParameterError):
            threshold(g, "==", 0.0)
        with pytest.raises(ParameterError):
            threshold(g, "<", math.nan)


class TestBitMask:
    def test_count_and_shape(self):
        m = BitMask.full(3, 2, False)
        assert (m.width, m.height, m.count()) == (3, 2, 0)
        m2 = BitMask(np.ones((2, 3), bool))
        assert m2.count() == 6
        assert m.same_shape(m2)

    def test_rejects_non_2d(self):
        with pytest.raises(ShapeError):
            BitMask(np.zeros(4, bool))
