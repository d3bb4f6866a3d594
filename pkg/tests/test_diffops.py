import numpy as np
import pytest

from stormdiag.constants import EARTH
from stormdiag.gridops import ddx, ddy, regrid_bilinear, region_extremum
from stormdiag.grids import GridSpec, RegionBox
from stormdiag.synth import harmonic_field

from conftest import make_field, offset_global_grid, patch_grid


def _interior(spec, margin_deg=5.0):
    lats = spec.latitudes()
    return np.abs(lats) < 90.0 - margin_deg


class TestDdx:
    @pytest.mark.parametrize("l,m", [(3, 2), (8, 5), (12, 1)])
    def test_against_analytic_harmonic(self, l, m):
        grid = offset_global_grid(180, 360)
        h = harmonic_field(l, m, grid)
        got = ddx(h.field).values
        want = h.d_dx.values
        rows = _interior(grid, 10.0)
        # centred differences on a 1-degree grid: O(dlam^2) truncation
        err = np.nanmax(np.abs(got[rows] - want[rows]))
        scale = np.nanmax(np.abs(want[rows])) + 1e-30
        assert err <= 1e-2 * scale + 1e-12

    def test_periodic_wrap_on_global_grid(self):
        grid = offset_global_grid(16, 64)
        lam = np.radians(grid.longitudes())
        v = np.cos(lam)[None, :] * np.ones((grid.nlat, 1))
        f = make_field(grid, v, variable="z")
        d = ddx(f).values
        coslat = np.cos(np.radians(grid.latitudes()))[:, None]
        want = -np.sin(lam)[None, :] / (EARTH.a * coslat)
        rows = _interior(grid)
        # error has no seam spike at lon=0 because of the wrap
        assert np.nanmax(np.abs(d[rows] - want[rows])) < 3e-3 * np.nanmax(
            np.abs(want[rows]))

    def test_one_sided_on_patch(self):
        grid = patch_grid(lat_north=60, lat_south=40, lon_west=340,
                          lon_east=20, step=0.5)
        lon = np.radians((grid.longitudes() - grid.lon_start) % 360.0)
        v = np.ones((grid.nlat, 1)) * lon[None, :] ** 2
        f = make_field(grid, v, variable="z")
        d = ddx(f).values
        coslat = np.cos(np.radians(grid.latitudes()))[:, None]
        want = 2.0 * lon[None, :] / (EARTH.a * coslat)
        # quadratic is exact for a second-order stencil, incl. edges
        np.testing.assert_allclose(d, want, rtol=1e-9, atol=1e-16)


class TestDdy:
    @pytest.mark.parametrize("l,m", [(4, 0), (7, 3)])
    def test_against_analytic_harmonic(self, l, m):
        grid = offset_global_grid(180, 360)
        h = harmonic_field(l, m, grid)
        got = ddy(h.field).values
        want = h.d_dy.values
        rows = _interior(grid, 10.0)
        err = np.nanmax(np.abs(got[rows] - want[rows]))
        scale = np.nanmax(np.abs(want[rows])) + 1e-30
        assert err <= 1e-2 * scale + 1e-12

    def test_pole_rows_nan(self):
        grid = GridSpec(nlat=19, nlon=36, lat_start=90.0, lat_step=-10.0,
                        lon_start=0.0, lon_step=10.0, includes_poles=True,
                        global_lon=True)
        f = make_field(grid, np.random.default_rng(0).normal(size=grid.shape))
        assert np.isnan(ddy(f).values[0]).all()
        assert np.isnan(ddy(f).values[-1]).all()
        assert np.isnan(ddx(f).values[0]).all()

    def test_nan_propagates(self, small_grid):
        v = np.zeros(small_grid.shape)
        v[5, 5] = np.nan
        d = ddy(make_field(small_grid, v)).values
        assert np.isnan(d[4, 5]) and np.isnan(d[5, 5]) and np.isnan(d[6, 5])
        assert not np.isnan(d[5, 4])


class TestRegrid:
    def test_identity_is_bitwise(self, small_grid):
        v = np.random.default_rng(2).normal(size=small_grid.shape)
        f = make_field(small_grid, v)
        g = regrid_bilinear(f, small_grid)
        assert np.array_equal(g.values, v)

    def test_refinement_recovers_linear_field(self):
        coarse = patch_grid(lat_north=60, lat_south=40, lon_west=0,
                            lon_east=20, step=2.0)
        fine = patch_grid(lat_north=58, lat_south=42, lon_west=2,
                          lon_east=18, step=0.5)
        lats = coarse.latitudes()[:, None]
        lons = coarse.longitudes()[None, :]
        f = make_field(coarse, 3.0 * lats + 0.5 * lons)
        g = regrid_bilinear(f, fine)
        want = 3.0 * fine.latitudes()[:, None] + 0.5 * fine.longitudes()[None, :]
        np.testing.assert_allclose(g.values, want, rtol=1e-12)

    def test_global_lon_wrap(self):
        src = offset_global_grid(16, 36)
        dst = patch_grid(lat_north=40, lat_south=20, lon_west=355,
                         lon_east=5, step=1.0)
        lam = np.radians(src.longitudes())
        f = make_field(src, np.cos(lam)[None, :] * np.ones((src.nlat, 1)))
        g = regrid_bilinear(f, dst)
        want = np.cos(np.radians(dst.longitudes()))[None, :] * np.ones(
            (dst.nlat, 1))
        # bilinear truncation on a 10-degree source grid: ~(dlam^2/8)|cos''|
        np.testing.assert_allclose(g.values, want, atol=5e-3)

    def test_out_of_coverage_latitudes_rejected(self):
        src = patch_grid(lat_north=60, lat_south=40, lon_west=0,
                         lon_east=20, step=1.0)
        dst = patch_grid(lat_north=70, lat_south=50, lon_west=0,
                         lon_east=20, step=1.0)
        with pytest.raises(ValueError, match="latitude"):
            regrid_bilinear(make_field(src), dst)

    def test_nan_spreads_to_stencil(self):
        src = patch_grid(lat_north=60, lat_south=40, lon_west=0,
                         lon_east=20, step=2.0)
        dst = patch_grid(lat_north=59, lat_south=41, lon_west=1,
                         lon_east=19, step=2.0)
        v = np.ones(src.shape)
        v[5, 5] = np.nan
        g = regrid_bilinear(make_field(src, v), dst)
        assert np.isnan(g.values).any()
        assert np.isfinite(g.values).any()


class TestRegionExtremum:
    def test_exhaustive_scan_oracle(self, small_grid):
        rng = np.random.default_rng(3)
        v = rng.normal(size=small_grid.shape)
        f = make_field(small_grid, v)
        box = RegionBox(lon_west=20, lon_east=200, lat_south=-50, lat_north=70)
        lat, lon, val = region_extremum(f, box, "min")
        # brute force
        best = None
        for j, la in enumerate(small_grid.latitudes()):
            for k, lo in enumerate(small_grid.longitudes()):
                if -50 <= la <= 70 and 20 <= lo <= 200:
                    if best is None or v[j, k] < best[2]:
                        best = (la, lo, v[j, k])
        assert (lat, lon) == (best[0], best[1])
        assert val == pytest.approx(best[2])

    def test_tie_breaks_to_first_row_then_column(self, small_grid):
        v = np.ones(small_grid.shape)
        v[3, 4] = v[3, 9] = v[7, 2] = 0.0
        box = RegionBox(lon_west=0, lon_east=359, lat_south=-90, lat_north=90)
        lat, lon, _ = region_extremum(make_field(small_grid, v), box, "min")
        assert lat == small_grid.latitudes()[3]
        assert lon == small_grid.longitudes()[4]

    def test_all_nan_raises(self, small_grid):
        v = np.full(small_grid.shape, np.nan)
        box = RegionBox(lon_west=0, lon_east=359, lat_south=-90, lat_north=90)
        with pytest.raises(ValueError):
            region_extremum(make_field(small_grid, v), box, "min")
