import math

import numpy as np
import pytest

from trapaudit.errors import GeometryError, ParameterError
from trapaudit.geometry import (
    AreaReport,
    ObfuscationDisk,
    Polygon,
    disk_mask,
    rasterize_polygon,
    searchable_area,
)
from trapaudit.grid import BitMask, Geotransform

from oracles import point_in_rings, random_convex_polygon


class TestPolygon:
    def test_rings_lists_exterior_then_holes(self):
        outer = [(0, 0), (10, 0), (10, 10), (0, 10)]
        hole = [(4, 4), (6, 4), (6, 6), (4, 6)]
        p = Polygon(outer, holes=[hole])
        rings = list(p.rings())
        assert len(rings) == 2
        assert list(rings[0]) == outer

    def test_bounds(self):
        p = Polygon([(1, 2), (5, -3), (2, 7)])
        assert p.bounds() == (1, -3, 5, 7)

    def test_too_few_vertices(self):
        with pytest.raises(GeometryError, match="3 vertices"):
            Polygon([(0, 0), (1, 1)])
        with pytest.raises(GeometryError, match="3 vertices"):
            Polygon([(0, 0), (5, 0), (5, 5)], holes=[[(1, 1), (2, 2)]])

    def test_non_finite_vertex(self):
        with pytest.raises(GeometryError, match="non-finite"):
            Polygon([(0, 0), (1, 0), (float("nan"), 1)])


class TestDisk:
    def test_radius_must_be_positive(self):
        with pytest.raises(ParameterError):
            ObfuscationDisk(0.0, 0.0, 0.0)
        with pytest.raises(ParameterError):
            ObfuscationDisk(0.0, 0.0, -5.0)

    @pytest.mark.parametrize("r_px", [50, 100, 300])
    def test_area_approaches_pi_r_squared(self, r_px):
        # acceptance-pinned: rasterized disk area within 2% of the analytic one
        ps = 10.0
        n = 2 * r_px + 9
        gt = Geotransform(0.0, n * ps, ps)
        cx, cy = gt.pixel_centers(n, n)
        disk = ObfuscationDisk(float(cx[n // 2]), float(cy[n // 2]), r_px * ps)
        mask = disk_mask(disk, gt, n, n)
        got = mask.count() * ps * ps
        want = math.pi * (r_px * ps) ** 2
        assert abs(got - want) / want < 0.02

    def test_boundary_pixels_use_center_distance(self):
        gt = Geotransform(0.0, 3.0, 1.0)
        # centers at 0.5, 1.5, 2.5; disk centered on the middle pixel
        disk = ObfuscationDisk(1.5, 1.5, 1.0)
        mask = disk_mask(disk, gt, 3, 3)
        want = np.array(
            [[False, True, False], [True, True, True], [False, True, False]]
        )
        assert np.array_equal(mask.data, want)


class TestRasterizePolygon:
    def test_matches_scalar_oracle_on_random_convex_polygons(self):
        # acceptance-pinned: exact agreement with an even-odd ray-cast oracle
        rng = np.random.default_rng(23)
        w = h = 40
        gt = Geotransform(0.0, h * 1.0, 1.0)
        eastings, northings = gt.pixel_centers(w, h)
        for _ in range(50):
            verts = random_convex_polygon(
                rng, center=(20.0, 20.0), radius=float(rng.uniform(5, 18)),
                n=int(rng.integers(3, 9)),
            )
            mask = rasterize_polygon(Polygon(verts), gt, w, h).data
            for i in range(h):
                for j in range(w):
                    want = point_in_rings(eastings[j], northings[i], [verts])
                    assert mask[i, j] == want

    def test_hole_subtracts(self):
        outer = [(0, 0), (10, 0), (10, 10), (0, 10)]
        hole = [(3, 3), (7, 3), (7, 7), (3, 7)]
        gt = Geotransform(0.0, 10.0, 1.0)
        full = rasterize_polygon(Polygon(outer), gt, 10, 10)
        holed = rasterize_polygon(Polygon(outer, holes=[hole]), gt, 10, 10)
        inner = rasterize_polygon(Polygon(hole), gt, 10, 10)
        assert full.count() == 100
        assert inner.count() == 16
        assert holed.count() == 100 - 16
        assert np.array_equal(holed.data, full.data & ~inner.data)

    def test_polygon_outside_raster_is_empty(self):
        poly = Polygon([(100, 100), (110, 100), (105, 110)])
        gt = Geotransform(0.0, 10.0, 1.0)
        assert rasterize_polygon(poly, gt, 10, 10).count() == 0

    def test_concave_polygon(self):
        # a U shape: the notch between the arms must stay unset
        poly = Polygon([(0, 0), (9, 0), (9, 9), (6, 9), (6, 3), (3, 3), (3, 9), (0, 9)])
        gt = Geotransform(0.0, 10.0, 1.0)
        mask = rasterize_polygon(poly, gt, 10, 10)
        ys, xs = Geotransform(0.0, 10.0, 1.0).pixel_centers(10, 10)
        assert not mask.data[3, 4]  # center (4.5, 6.5) sits in the notch
        assert mask.data[8, 1]  # (1.5, 1.5) is inside the left arm


class TestSearchableArea:
    def _mask(self, count, w=200, h=150):
        data = np.zeros((h, w), dtype=bool)
        data.ravel()[:count] = True
        return BitMask(data)

    def test_table_arithmetic(self):
        # acceptance-pinned numbers: counts at 10 m pixels to km^2 and reduction
        gt = Geotransform(0.0, 1500.0, 10.0)
        small = searchable_area(self._mask(2641), gt)
        assert small.area_km2 == 0.2641
        big = searchable_area(self._mask(20688), gt)
        assert big.area_km2 == 2.0688
        report = searchable_area(self._mask(2641), gt, baselines={"park": 2.0688})
        assert abs(report.reductions["park"] - 0.8723) < 0.0005

    def test_fields(self):
        gt = Geotransform(0.0, 1500.0, 10.0)
        r = searchable_area(self._mask(7), gt)
        assert r.pixel_count == 7
        assert r.pixel_area_m2 == 100.0
        assert r.area_m2 == 700.0
        assert r.area_km2 == 700.0 / 1e6
        assert r.baselines == {} and r.reductions == {}

    def test_reduction_is_not_clamped(self):
        gt = Geotransform(0.0, 1500.0, 10.0)
        r = searchable_area(self._mask(30000), gt, baselines={"tiny": 0.5})
        assert r.reductions["tiny"] < 0  # mask exceeds the baseline

    def test_rejects_nonpositive_baseline(self):
        gt = Geotransform(0.0, 1500.0, 10.0)
        with pytest.raises(ParameterError, match="baseline"):
            searchable_area(self._mask(1), gt, baselines={"bad": 0.0})
        with pytest.raises(ParameterError, match="baseline"):
            searchable_area(self._mask(1), gt, baselines={"bad": float("inf")})

    def test_to_dict_field_order_and_sorted_keys(self):
        r = AreaReport(
            pixel_count=1,
            pixel_area_m2=100.0,
            area_m2=100.0,
            area_km2=0.0001,
            baselines={"b": 2.0, "a": 1.0},
            reductions={"b": 0.5, "a": 0.2},
        )
        d = r.to_dict()
        assert list(d) == [
            "pixel_count",
            "pixel_area_m2",
            "area_m2",
            "area_km2",
            "baselines",
            "reductions",
        ]
        assert list(d["baselines"]) == ["a", "b"]
        assert list(d["reductions"]) == ["a", "b"]
