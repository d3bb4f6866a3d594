"""Analytic test-field generators with closed-form diagnostics.

Every generator is a pure, deterministic function of its arguments, and
each returns analytic reference closures alongside the sampled fields so
downstream numerics can be checked against independent ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np

from .balance import CycloneVelocity
from .constants import EARTH
from .grids import Field, GridSpec, haversine_m
from .spectral import (SpectralField, coeff_count, legendre_dtheta_table,
                       legendre_table, lm_index, m_offsets, synthesize)


@dataclass(frozen=True)
class VortexSpec:
    """Gaussian geopotential low with balanced tangential winds."""

    center_lat: float
    center_lon: float
    amplitude: float                  # geopotential depression [m2 s-2]
    radius_scale: float               # Gaussian length scale L [m]
    balance: str = "gradient"         # "geostrophic" | "gradient"
    translation: CycloneVelocity = dc_field(
        default_factory=lambda: CycloneVelocity(0.0, 0.0))
    f_mode: str = "f-plane"           # "f-plane" | "sphere"

    def __post_init__(self):
        if self.radius_scale <= 0 or self.amplitude <= 0:
            raise ValueError("radius_scale and amplitude must be positive")
        if not 10.0 < abs(self.center_lat) < 80.0:
            raise ValueError("vortex centre latitude must be in (10, 80) degrees")
        if self.balance not in ("geostrophic", "gradient"):
            raise ValueError(f"unknown balance mode {self.balance!r}")
        if self.f_mode not in ("f-plane", "sphere"):
            raise ValueError(f"unknown f_mode {self.f_mode!r}")


def translated_center(spec: VortexSpec, t_seconds, constants=EARTH):
    """Vortex centre (lat, lon) after t seconds of steady translation."""
    rad = np.degrees(1.0 / constants.a)
    lat = spec.center_lat + spec.translation.c_y * t_seconds * rad
    coslat = np.cos(np.radians(spec.center_lat))
    lon = (spec.center_lon + spec.translation.c_x * t_seconds * rad / coslat) % 360.0
    return lat, lon


def _unit_vectors_from_center(clat, clon, grid: GridSpec):
    """East/north components of the outward radial unit vector at each
    grid point, for the great circle from the vortex centre."""
    lat2 = np.radians(grid.latitudes())[:, None]
    lon2 = np.radians(grid.longitudes())[None, :]
    lat1, lon1 = np.radians(clat), np.radians(clon)
    # 3D unit vectors
    cx = np.cos(lat1) * np.cos(lon1)
    cy = np.cos(lat1) * np.sin(lon1)
    cz = np.sin(lat1)
    px = np.cos(lat2) * np.cos(lon2)
    py = np.cos(lat2) * np.sin(lon2)
    pz = np.sin(lat2) + 0.0 * lon2
    px, py, pz = np.broadcast_arrays(px, py, pz)
    # pole of the great circle, then tangent at P pointing away from C
    nx, ny, nz = cy * pz - cz * py, cz * px - cx * pz, cx * py - cy * px
    tx, ty, tz = ny * pz - nz * py, nz * px - nx * pz, nx * py - ny * px
    # local east/north basis at P
    ex, ey = -np.sin(lon2), np.cos(lon2)
    nxl = -np.sin(lat2) * np.cos(lon2)
    nyl = -np.sin(lat2) * np.sin(lon2)
    nzl = np.cos(lat2)
    t_e = tx * ex + ty * ey
    t_n = tx * nxl + ty * nyl + tz * nzl
    norm = np.hypot(t_e, t_n)
    with np.errstate(invalid="ignore", divide="ignore"):
        return t_e / norm, t_n / norm


@dataclass
class GaussianLow:
    """Sampled vortex fields plus analytic radial closures (r in metres)."""

    z: Field
    u: Field
    v: Field
    center: tuple
    f0: float
    vg_of_r: Callable
    v_of_r: Callable            # sampled wind magnitude (per balance mode)
    vgr_of_r: Callable
    k_of_r: Callable
    zeta_of_r: Callable


def gaussian_low(spec: VortexSpec, grid: GridSpec, t=0.0,
                 valid_time="2023-11-01T00:00:00Z", level=850.0,
                 background=0.0, constants=EARTH) -> GaussianLow:
    """Gaussian geopotential low with analytically balanced winds.

    Phi(r) = background - A exp(-r^2 / (2 L^2)) with great-circle r from
    the (possibly translated) centre.  In f-plane mode the closures are
    exact; in sphere mode winds use the local Coriolis parameter and the
    closures (built with the centre value f0) are approximate.
    """
    clat, clon = translated_center(spec, t, constants)
    a, L, A = constants.a, spec.radius_scale, spec.amplitude

    lat_margin = np.degrees(4.0 * L / a)
    lo, hi = sorted((grid.lat_start, grid.lat_end))
    if clat - lat_margin < lo or clat + lat_margin > hi or \
            abs(clat) + lat_margin > 89.0:
        raise ValueError("vortex footprint does not fit inside the grid")

    lats, lons = grid.latitudes(), grid.longitudes()
    r = haversine_m(clat, clon, lats[:, None], lons[None, :], radius=a)
    expfac = np.exp(-r * r / (2.0 * L * L))
    phi = background - A * expfac

    f0 = 2.0 * constants.omega * np.sin(np.radians(clat))
    if spec.f_mode == "f-plane":
        f = f0
    else:
        f = 2.0 * constants.omega * np.sin(np.radians(lats))[:, None]

    def vg_of_r(rr, ff=abs(f0)):
        rr = np.asarray(rr, np.float64)
        return A * rr / (L * L) * np.exp(-rr * rr / (2 * L * L)) / ff

    def _q(rr):
        return A / (L * L) * np.exp(-np.asarray(rr, np.float64) ** 2 / (2 * L * L))

    def vgr_of_r(rr, ff=abs(f0)):
        s = np.sqrt(ff * ff + 4.0 * _q(rr))
        return np.asarray(rr, np.float64) * (s - ff) / 2.0

    def k_of_r(rr):
        return 1.0 / np.asarray(rr, np.float64)

    if spec.balance == "geostrophic":
        with np.errstate(divide="ignore", invalid="ignore"):
            speed = A * r / (L * L) * expfac / np.abs(f)
        # sphere mode: equator rows blow up 1/f where the far-field
        # amplitude is already ~0; clamp to the physical limit
        speed = np.where(np.isfinite(speed), speed, 0.0)

        def zeta_of_r(rr, ff=abs(f0)):
            rr = np.asarray(rr, np.float64)
            return A / (ff * L * L) * (2.0 - rr * rr / (L * L)) * \
                np.exp(-rr * rr / (2 * L * L))

        v_of_r = vg_of_r
    else:
        q = A / (L * L) * expfac
        s = np.sqrt(f * f + 4.0 * q)
        speed = r * (s - np.abs(f)) / 2.0

        def zeta_of_r(rr, ff=abs(f0)):
            rr = np.asarray(rr, np.float64)
            qq = _q(rr)
            ss = np.sqrt(ff * ff + 4.0 * qq)
            return (ss - ff) - rr * rr * qq / (L * L * ss)

        v_of_r = vgr_of_r

    e_r, n_r = _unit_vectors_from_center(clat, clon, grid)
    sense = np.sign(f0)          # cyclonic: CCW in NH, CW in SH
    u_val = speed * (-n_r) * sense
    v_val = speed * e_r * sense
    at_center = ~np.isfinite(e_r)
    u_val[at_center] = 0.0
    v_val[at_center] = 0.0

    z = Field(grid, "z", level, valid_time, phi, "m2 s-2")
    u = Field(grid, "u", level, valid_time, u_val, "m s-1")
    v = Field(grid, "v", level, valid_time, v_val, "m s-1")
    return GaussianLow(z=z, u=u, v=v, center=(clat, clon), f0=f0,
                       vg_of_r=vg_of_r, v_of_r=v_of_r, vgr_of_r=vgr_of_r,
                       k_of_r=k_of_r, zeta_of_r=zeta_of_r)


def gaussian_mslp(spec: VortexSpec, grid: GridSpec, t=0.0,
                  valid_time="2023-11-01T00:00:00Z",
                  p0=101_325.0, depth=4_000.0, constants=EARTH) -> Field:
    """MSLP field [Pa] with a Gaussian depression at the vortex centre."""
    clat, clon = translated_center(spec, t, constants)
    r = haversine_m(clat, clon, grid.latitudes()[:, None],
                    grid.longitudes()[None, :], radius=constants.a)
    values = p0 - depth * np.exp(-r * r / (2.0 * spec.radius_scale ** 2))
    return Field(grid, "msl", "sfc", valid_time, values, "Pa")


@dataclass
class HarmonicField:
    """Sampled real spherical harmonic with analytic derivative fields."""

    field: Field
    d_dx: Field
    d_dy: Field


def harmonic_field(l, m, grid: GridSpec, constants=EARTH,
                   valid_time="1970-01-01T00:00:00Z") -> HarmonicField:
    """Real orthonormal spherical harmonic (cosine branch) on a grid.

    Unit squared integral over the sphere.  The returned d_dx and d_dy
    fields are the analytic zonal/meridional derivatives (with the
    1/(a cos lat) and 1/a metric factors); NaN at the poles.
    """
    if not 0 <= m <= l:
        raise ValueError(f"need 0 <= m <= l, got (l, m) = ({l}, {m})")
    lats, lons = grid.latitudes(), grid.longitudes()
    x = np.sin(np.radians(lats))
    tab = legendre_table(l, x)
    dtab = legendre_dtheta_table(l, x, tab)
    i = lm_index(l, l, m)
    norm = (np.sqrt(2.0) if m > 0 else 1.0) / np.sqrt(2.0 * np.pi)
    lam = np.radians(lons)[None, :]
    ang = np.cos(m * lam)
    n_col = tab[:, i][:, None]
    dn_col = dtab[:, i][:, None]

    values = norm * n_col * ang

    coslat = np.cos(np.radians(lats))[:, None]
    polar = np.abs(lats) >= 90.0 - 1e-9
    with np.errstate(invalid="ignore", divide="ignore"):
        dx = -norm * m * n_col * np.sin(m * lam) / (constants.a * coslat)
    # d/dlat of N(sin lat) = -dN/dtheta
    dy = -norm * dn_col * ang / constants.a
    dx[polar, :] = np.nan
    dy[polar, :] = np.nan

    f = Field(grid, f"y_{l}_{m}", "sfc", valid_time, values, "")
    return HarmonicField(
        field=f,
        d_dx=f.with_values(dx, variable=f"y_{l}_{m}_dx"),
        d_dy=f.with_values(dy, variable=f"y_{l}_{m}_dy"),
    )


def noisy_field(base: Field, noise_lmin: int, noise_amp: float, seed: int,
                noise_lmax=None) -> Field:
    """Base field plus seeded small-scale spherical-harmonic noise.

    The noise lives entirely at degrees l >= noise_lmin (> 106 required),
    so truncation at 106 removes it exactly up to quadrature error.  The
    noise RMS equals noise_amp times the RMS of the base field.
    """
    if noise_lmin <= 106:
        raise ValueError("noise_lmin must exceed 106")
    if noise_amp == 0.0:
        return base
    lmax = noise_lmax if noise_lmax is not None else noise_lmin + 20
    rng = np.random.default_rng(seed)
    coeffs = np.zeros(coeff_count(lmax), dtype=np.complex128)
    offs = m_offsets(lmax)
    for mm in range(lmax + 1):
        for ll in range(max(mm, noise_lmin), lmax + 1):
            idx = offs[mm] + ll - mm
            coeffs[idx] = rng.standard_normal() + 1j * rng.standard_normal()
    noise = synthesize(SpectralField(lmax=lmax, coeffs=coeffs), base.spec)
    nv = noise.values
    base_rms = np.sqrt(np.nanmean(np.asarray(base.values, np.float64) ** 2))
    noise_rms = np.sqrt(np.mean(nv ** 2))
    nv = nv * (noise_amp * base_rms / noise_rms)
    return base.with_values(np.asarray(base.values, np.float64) + nv)
