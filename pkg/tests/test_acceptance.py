"""Acceptance gate: one test per headline criterion, each printing a
single PASS line with its runtime.  Oracles here are independent of the
library code paths they check (bisection root-finding, parcel-trajectory
integration, moist-adiabat descent)."""

import time

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from stormdiag.balance import (CycloneVelocity, balance_bundle,
                               contour_curvature, gradient_wind_speed,
                               motion_corrected_curvature)
from stormdiag.constants import EARTH
from stormdiag.derive import (relative_vorticity, saturation_vapor_pressure,
                              theta_w, wind_speed)
from stormdiag.grids import (Field, GridSpec, RegionBox, haversine_m,
                             load_dataset, parse_time, write_dataset)
from stormdiag.report import intercomparison
from stormdiag.spectral import analyze, coeff_count, m_offsets, \
    quadrature_weights, synthesize, truncate, SpectralField
from stormdiag.synth import VortexSpec, gaussian_low, gaussian_mslp, \
    harmonic_field, translated_center
from stormdiag.track import Track, TrackPoint, intensification, track_cyclone

from conftest import make_field, offset_global_grid, patch_grid


@pytest.fixture
def announce(capsys, request):
    start = time.monotonic()
    yield
    elapsed = time.monotonic() - start
    with capsys.disabled():
        name = request.node.name.replace("test_", "", 1)
        print(f"[PASS] {name} ({elapsed:.1f} s)")


def _tiny_grid(f_lat):
    lat = max(min(f_lat, 85.0), -85.0)
    return GridSpec(nlat=3, nlon=4, lat_start=lat + 1.0, lat_step=-1.0,
                    lon_start=0.0, lon_step=1.0)


class TestAcceptance:
    def test_gradient_wind_quadratic(self, announce):
        t0 = time.monotonic()
        rng = np.random.default_rng(2023)
        checked = 0
        while checked < 1000:
            f_lat = rng.uniform(-75.0, 75.0)
            if abs(f_lat) < 6.0:
                continue
            f = 2.0 * EARTH.omega * np.sin(np.radians(f_lat))
            k_val = rng.uniform(-1.0, 1.0) * 10.0 ** rng.uniform(-7, -5)
            vg_val = rng.uniform(0.5, 60.0)
            if f * f + 4.0 * k_val * f * vg_val < 0:
                continue
            grid = _tiny_grid(f_lat)
            vg = make_field(grid, np.full(grid.shape, vg_val),
                            variable="vg", units="m s-1")
            k = make_field(grid, np.full(grid.shape, k_val),
                           variable="curv", units="m-1")
            vgr, mask = gradient_wind_speed(vg, k, f_plane_lat=f_lat)
            if mask.values[0, 0] == 0.0:
                continue      # negative root branch; excluded by the mask
            x = float(vgr.values[0, 0])
            resid = abs(k_val * x * x + f * x - f * vg_val)
            assert resid <= 1e-6 * max(1.0, abs(f * vg_val))
            checked += 1

        # worked point against an independent bisection oracle
        f, k_val, vg_val = 1e-4, 1.0 / 3e5, 40.0
        f_lat = float(np.degrees(np.arcsin(f / (2.0 * EARTH.omega))))
        grid = _tiny_grid(f_lat)
        vg = make_field(grid, np.full(grid.shape, vg_val), variable="vg",
                        units="m s-1")
        k = make_field(grid, np.full(grid.shape, k_val), variable="curv",
                       units="m-1")
        vgr, _ = gradient_wind_speed(vg, k, f_plane_lat=f_lat)
        oracle = brentq(lambda x: k_val * x * x + f * x - f * vg_val,
                        0.0, vg_val, xtol=1e-12)
        assert oracle == pytest.approx(22.75, abs=0.01)
        assert abs(float(vgr.values[0, 0]) - oracle) < 0.01
        assert time.monotonic() - t0 < 1.0

    def test_balance_closure_synthetic_vortex(self, announce, tmp_path):
        t0 = time.monotonic()
        grid = patch_grid(lat_north=70.0, lat_south=30.0, lon_west=310.0,
                          lon_east=10.0, step=0.25)
        spec = VortexSpec(center_lat=50.0, center_lon=340.0,
                          amplitude=3000.0, radius_scale=400e3,
                          balance="gradient", f_mode="f-plane")
        low = gaussian_low(spec, grid, valid_time="2023-11-02T00:00:00Z")
        out = tmp_path / "ds"
        write_dataset([low.z, low.u, low.v], out)
        ds = load_dataset(out)
        b = balance_bundle(ds, "2023-11-02T00:00:00Z", 850.0,
                           CycloneVelocity(0.0, 0.0), smoothed=False,
                           smooth_lmax=None, f_plane_lat=50.0)
        r = haversine_m(50.0, 340.0, grid.latitudes()[:, None],
                        grid.longitudes()[None, :], radius=EARTH.a)
        cell_m = 0.25 * np.pi / 180.0 * EARTH.a
        sel = (b.mask.values == 1.0) & (r > 2.0 * cell_m)
        assert sel.sum() > 10_000
        assert np.nanmax(np.abs(b.diff.values[sel])) < 0.5
        cyclonic = sel & (b.K.values > 0)
        assert np.all(b.Vgr.values[cyclonic]
                      <= b.Vg.values[cyclonic] + 1e-9)
        assert time.monotonic() - t0 < 30.0

    def test_curvature_axisymmetric_and_motion_corrected(self, announce):
        t0 = time.monotonic()
        # contour curvature of the vortex geopotential vs 1/r
        grid = patch_grid(lat_north=70.0, lat_south=30.0, lon_west=310.0,
                          lon_east=10.0, step=0.25)
        spec = VortexSpec(center_lat=50.0, center_lon=340.0,
                          amplitude=3000.0, radius_scale=400e3)
        low = gaussian_low(spec, grid)
        k = contour_curvature(low.z, smooth_lmax=None, f_plane_lat=50.0)
        r = haversine_m(50.0, 340.0, grid.latitudes()[:, None],
                        grid.longitudes()[None, :], radius=EARTH.a)
        band = (r >= 300e3) & (r <= 1000e3)
        assert np.nanmax(np.abs(k.values[band] * r[band] - 1.0)) < 0.02

        # motion-corrected curvature vs parcel-trajectory integration on an
        # f-plane: planar steadily-translating gradient-balanced vortex
        f0 = 2.0 * EARTH.omega * np.sin(np.radians(50.0))
        A, L = 3000.0, 400e3
        c = CycloneVelocity(17.7, 6.4)

        def wind(x, y):
            rr = np.hypot(x, y)
            q = A / (L * L) * np.exp(-rr * rr / (2 * L * L))
            s = np.sqrt(f0 * f0 + 4.0 * q)
            v_t = rr * (s - f0) / 2.0
            if rr == 0:
                return 0.0, 0.0
            return -v_t * y / rr, v_t * x / rr      # CCW tangential

        def trajectory_curvature(x0, y0, tau=240.0):
            def rhs(t, xy):
                return wind(xy[0] - c.c_x * t, xy[1] - c.c_y * t)
            sol = solve_ivp(rhs, (-tau, tau), [x0 + c.c_x * -0.0, y0],
                            t_eval=[-tau, 0.0, tau], rtol=1e-10, atol=1e-6)
            # velocity and acceleration at t = 0 by central differences of
            # the velocity sampled along the integrated path
            v = np.array([rhs(t, sol.y[:, i])
                          for i, t in enumerate(sol.t)])
            vx, vy = v[1]
            ax = (v[2][0] - v[0][0]) / (2 * tau)
            ay = (v[2][1] - v[0][1]) / (2 * tau)
            sp2 = vx * vx + vy * vy
            return (vx * ay - vy * ax) / sp2 ** 1.5

        rng = np.random.default_rng(7)
        pts = [(rr * np.cos(az), rr * np.sin(az))
               for rr in np.linspace(300e3, 900e3, 5)
               for az in rng.uniform(0.0, 2 * np.pi, 4)]
        n = len(pts)
        tiny = GridSpec(nlat=n, nlon=4, lat_start=60.0, lat_step=-1.0,
                        lon_start=0.0, lon_step=1.0)
        uu = np.zeros(tiny.shape)
        vv = np.zeros(tiny.shape)
        kk = np.zeros(tiny.shape)
        for i, (x, y) in enumerate(pts):
            uu[i, :], vv[i, :] = wind(x, y)
            kk[i, :] = 1.0 / np.hypot(x, y)
        kf = make_field(tiny, kk, variable="curv", units="m-1")
        uf = make_field(tiny, uu, variable="u", units="m s-1")
        vf = make_field(tiny, vv, variable="v", units="m s-1")
        corrected = motion_corrected_curvature(kf, uf, vf, c)
        for i, (x, y) in enumerate(pts):
            oracle = trajectory_curvature(x, y)
            got = corrected.values[i, 0]
            assert abs(got - oracle) <= 0.05 * abs(oracle), (i, got, oracle)
        assert time.monotonic() - t0 < 60.0

    def test_spectral_truncation_quarter_degree(self, announce):
        t0 = time.monotonic()
        grid = offset_global_grid(720, 1440)
        lmax = 106
        rng = np.random.default_rng(19)
        coeffs = rng.normal(size=coeff_count(lmax)) \
            + 1j * rng.normal(size=coeff_count(lmax))
        offs = m_offsets(lmax)
        coeffs[offs[0]:offs[1]] = coeffs[offs[0]:offs[1]].real
        f = synthesize(SpectralField(lmax=lmax, coeffs=coeffs), grid)

        # round-trip on a bandlimited field
        back = analyze(f, lmax)
        rel = np.abs(back.coeffs - coeffs).max() / np.abs(coeffs).max()
        assert rel < 1e-8

        # a pure degree-120 harmonic is annihilated by T106
        y120 = harmonic_field(120, 40, grid).field
        assert np.abs(truncate(y120, 106).values).max() < 1e-6

        # idempotence and global-mean preservation
        once = truncate(f, 106)
        twice = truncate(once, 106)
        assert np.abs(twice.values - once.values).max() <= 1e-10

        w = quadrature_weights(grid)
        def gmean(v):
            return float(np.sum(w[:, None] * v) / (2.0 * grid.nlon))
        assert abs(gmean(once.values) - gmean(f.values)) <= 1e-10
        assert time.monotonic() - t0 < 120.0

    def test_bomb_metric(self, announce):
        pts = [TrackPoint(f"2023-11-0{1 + (6 * i) // 24}T"
                          f"{(6 * i) % 24:02d}:00:00Z", 48.0, 340.0 + i,
                          988.0 - 34.0 * i / 4.0) for i in range(5)]
        rep = intensification(Track(points=pts))
        assert rep.is_bomb
        assert rep.deepening_hPa_per_24h == pytest.approx(34.0)
        assert rep.bergerons == pytest.approx(1.651, abs=0.001)

    def test_tracking_translating_low(self, announce, tmp_path):
        grid = patch_grid(lat_north=70.0, lat_south=30.0, lon_west=300.0,
                          lon_east=30.0, step=0.5)
        spec = VortexSpec(center_lat=45.0, center_lon=315.0,
                          amplitude=3000.0, radius_scale=400e3,
                          translation=CycloneVelocity(17.7, 6.4))
        times = [f"2023-11-0{1 + h // 24}T{h % 24:02d}:00:00Z"
                 for h in range(0, 54, 6)]
        fields = []
        for i, iso in enumerate(times):
            t = i * 6 * 3600.0
            fields.append(gaussian_mslp(spec, grid, t=t, valid_time=iso,
                                        depth=4000.0))
            low = gaussian_low(spec, grid, t=t, valid_time=iso)
            fields.append(Field(grid, "u10", "sfc", iso, low.u.values,
                                "m s-1"))
            fields.append(Field(grid, "v10", "sfc", iso, low.v.values,
                                "m s-1"))
        out = tmp_path / "ds"
        write_dataset(fields, out)
        ds = load_dataset(out, label="ref")

        tr = track_cyclone(ds, RegionBox(305.0, 325.0, 38.0, 52.0),
                           times[0], times[-1])
        assert len(tr) == len(times)
        cell_m = 0.5 * np.pi / 180.0 * EARTH.a
        for i, p in enumerate(tr.points):
            clat, clon = translated_center(spec, i * 6 * 3600.0)
            assert haversine_m(p.lat, p.lon, clat, clon) <= np.sqrt(2) * cell_m

        rows = intercomparison({"ref": ds}, tr,
                               [parse_time(t) for t in times])
        assert all(r["position_error_km"] == 0.0 for r in rows)

    def test_vorticity_solid_body(self, announce):
        grid = offset_global_grid(720, 1440)
        omega_rot = 5e-5
        lats = grid.latitudes()
        uv = omega_rot * EARTH.a * np.cos(np.radians(lats))[:, None] \
            * np.ones((1, grid.nlon))
        u = make_field(grid, uv, variable="u", units="m s-1")
        v = make_field(grid, np.zeros(grid.shape), variable="v",
                       units="m s-1")
        zeta = relative_vorticity(u, v).values
        want = 2.0 * omega_rot * np.sin(np.radians(lats))[:, None]
        rows = np.abs(lats) < 89.0
        rel = np.abs(zeta[rows] - want[rows]) / np.abs(want[rows])
        assert np.nanmax(rel) < 1e-3

    def test_theta_w_identity_and_ode_oracle(self, announce):
        grid = GridSpec(nlat=3, nlon=4, lat_start=51.0, lat_step=-1.0,
                        lon_start=0.0, lon_step=1.0)

        # a parcel already saturated at 1000 hPa has theta_w equal to its
        # own temperature
        for t_k in np.linspace(255.0, 305.0, 11):
            t = make_field(grid, np.full(grid.shape, t_k), variable="t",
                           units="K")
            rh = make_field(grid, np.full(grid.shape, 100.0), variable="r",
                            units="%")
            tw = float(theta_w(t, rh, "rh", 1000.0).values[0, 0])
            assert abs(tw - t_k) < 0.25, t_k

        # moist-adiabat descent oracle
        RD, CPD, EPS = 287.04, 1005.7, 0.622

        def lv(t):
            return 2.501e6 - 2370.0 * (t - 273.15)

        def es(t):
            return saturation_vapor_pressure(t)

        def rs(t, p):
            e = es(t)
            return EPS * e / (p - e)

        def pseudoadiabat(p, t):
            r = rs(t[0], p)
            l = lv(t[0])
            num = RD * t[0] + l * r
            den = CPD + (l * l * r * EPS) / (RD * t[0] ** 2)
            return [num / den / p]

        def theta_w_oracle(t0, rh_pct, p0):
            e0 = rh_pct / 100.0 * es(t0)
            r0 = EPS * e0 / (p0 - e0)

            def undersat(p):
                t_dry = t0 * (p / p0) ** (RD / CPD)
                return rs(t_dry, p) - r0

            if undersat(p0) <= 0:
                p_lcl, t_lcl = p0, t0
            else:
                p_lcl = brentq(undersat, 60.0, p0, xtol=1e-8)
                t_lcl = t0 * (p_lcl / p0) ** (RD / CPD)
            if abs(p_lcl - 1000.0) < 1e-9:
                return t_lcl
            sol = solve_ivp(pseudoadiabat, (p_lcl, 1000.0), [t_lcl],
                            rtol=1e-9, atol=1e-9)
            return float(sol.y[0, -1])

        worst = 0.0
        for p in (700.0, 850.0, 1000.0):
            for t_k in np.linspace(260.0, 300.0, 9):
                for rh_pct in np.linspace(20.0, 100.0, 5):
                    t = make_field(grid, np.full(grid.shape, t_k),
                                   variable="t", units="K")
                    rh = make_field(grid, np.full(grid.shape, rh_pct),
                                    variable="r", units="%")
                    got = float(theta_w(t, rh, "rh", p).values[0, 0])
                    want = theta_w_oracle(t_k, rh_pct, p)
                    worst = max(worst, abs(got - want))
        assert worst < 0.3, worst

    @pytest.mark.skip(reason="requires externally ingested reanalysis "
                             "fields for 31 Oct - 2 Nov 2023; see README")
    def test_reanalysis_case_study(self):
        pass
