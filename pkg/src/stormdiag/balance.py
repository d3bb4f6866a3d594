"""Geostrophic/gradient-wind balance diagnostics.

Pipeline per time/level: geostrophic wind from the geopotential, contour
curvature in natural coordinates (from the T106-truncated geopotential),
a constant-propagation correction turning contour curvature into
trajectory curvature, then the gradient-wind quadratic with a validity
mask, and the full-minus-gradient difference field.

An optional f-plane mode (fixed Coriolis parameter) exists so the
synthetic vortex oracles close exactly; production runs use the local
Coriolis parameter from grid latitude.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .constants import EARTH, PhysicalConstants
from .derive import relative_vorticity, wind_speed
from .gridops import ddx, ddy
from .grids import Field, write_dataset
from .spectral import truncate

# Thresholds, recorded in output provenance.
MIN_LAT_DEG = 5.0          # equatorial mask for 1/f
MIN_SPEED = 0.5            # m/s; below this the flow direction is indeterminate
K_GEOSTROPHIC_EPS = 1e-9   # m-1; |K| below this falls back to the geostrophic limit


@dataclass(frozen=True)
class CycloneVelocity:
    """Constant propagation velocity of the cyclone, m/s east/north."""

    c_x: float
    c_y: float

    def __post_init__(self):
        if np.hypot(self.c_x, self.c_y) >= 60.0:
            raise ValueError("cyclone speed must be below 60 m/s")


def coriolis(spec, constants=EARTH, f_plane_lat=None, min_lat=MIN_LAT_DEG):
    """Coriolis parameter per latitude row, (nlat, 1).

    Rows with |lat| below min_lat (and the poles, where downstream
    derivatives are NaN anyway) come out NaN unless an f-plane latitude
    is given, in which case f is uniform.
    """
    if f_plane_lat is not None:
        f = np.full((spec.nlat, 1),
                    2.0 * constants.omega * np.sin(np.radians(f_plane_lat)))
        return f
    lat = spec.latitudes()
    f = 2.0 * constants.omega * np.sin(np.radians(lat))
    f[np.abs(lat) < min_lat] = np.nan
    return f[:, None]


def geostrophic_wind(phi: Field, constants=EARTH, f_plane_lat=None):
    """(u_g, v_g) from geopotential: u_g = -phi_y/f, v_g = phi_x/f."""
    f = coriolis(phi.spec, constants, f_plane_lat)
    ug = -ddy(phi, constants).values / f
    vg = ddx(phi, constants).values / f
    return (phi.with_values(ug, variable="u_g", units="m s-1"),
            phi.with_values(vg, variable="v_g", units="m s-1"))


def contour_curvature(phi: Field, smooth_lmax=106, constants=EARTH,
                      f_plane_lat=None, min_speed=MIN_SPEED) -> Field:
    """Curvature of geopotential contours in natural coordinates [m-1].

    K = (zeta_g + dVg/dn) / Vg with n the unit direction 90 degrees left
    of the geostrophic wind; positive for cyclonic (low-centre) flow in
    the northern hemisphere.  The geopotential is spectrally truncated
    first (pass smooth_lmax=None to skip, e.g. on non-global patches or
    pre-smoothed input).
    """
    if smooth_lmax is not None:
        phi = truncate(phi, smooth_lmax)
    ug, vg = geostrophic_wind(phi, constants, f_plane_lat)
    u, v = ug.values, vg.values
    speed = np.hypot(u, v)
    zeta = relative_vorticity(ug, vg, constants).values
    dvdx = ddx(phi.with_values(speed), constants).values
    dvdy = ddy(phi.with_values(speed), constants).values
    with np.errstate(invalid="ignore", divide="ignore"):
        dv_dn = (-v * dvdx + u * dvdy) / speed
        k = (zeta + dv_dn) / speed
    k[speed < min_speed] = np.nan
    return phi.with_values(k, variable="curv", units="m-1")


def motion_corrected_curvature(k: Field, ug: Field, vg: Field,
                               c: CycloneVelocity,
                               min_speed=MIN_SPEED) -> Field:
    """Trajectory curvature for a steadily translating pattern.

    K_traj = K_contour * (1 - c.s / Vg), with s the unit vector along the
    geostrophic wind.
    """
    u, v = np.asarray(ug.values, np.float64), np.asarray(vg.values, np.float64)
    speed2 = u * u + v * v
    with np.errstate(invalid="ignore", divide="ignore"):
        factor = 1.0 - (c.c_x * u + c.c_y * v) / speed2
    out = np.asarray(k.values, np.float64) * factor
    out[speed2 < min_speed ** 2] = np.nan
    return k.with_values(out)


def gradient_wind_speed(vg_speed: Field, k: Field, constants=EARTH,
                        f_plane_lat=None, min_lat=MIN_LAT_DEG,
                        k_eps=K_GEOSTROPHIC_EPS):
    """Solve K*Vgr^2 + f*Vgr - f*Vg = 0 for the regular root.

    Returns (Vgr, mask).  The root continuous with the K -> 0 geostrophic
    limit is taken; mask is 0 (and Vgr NaN) where the discriminant is
    negative, within min_lat of the equator, where the root is negative,
    or where inputs are NaN.
    """
    if vg_speed.spec != k.spec:
        raise ValueError("fields are on different grids")
    f = coriolis(vg_speed.spec, constants, f_plane_lat, min_lat)
    f = np.broadcast_to(f, vg_speed.spec.shape)
    vg = np.asarray(vg_speed.values, np.float64)
    kk = np.asarray(k.values, np.float64)
    disc = f * f + 4.0 * kk * f * vg
    with np.errstate(invalid="ignore", divide="ignore"):
        root = 2.0 * f * vg / (f + np.sign(f) * np.sqrt(disc))
    vgr = np.where(np.abs(kk) < k_eps, vg, root)
    bad = (disc < 0) | (vgr < 0) | np.isnan(vg) | np.isnan(kk) | np.isnan(f)
    vgr = np.where(bad, np.nan, vgr)
    mask = np.where(bad, 0.0, 1.0)
    return (vg_speed.with_values(vgr, variable="vgr", units="m s-1"),
            vg_speed.with_values(mask, variable="mask", units="1"))


@dataclass
class BalanceBundle:
    """Co-registered balance diagnostics for one time and level."""

    valid_time: object
    level: float
    V: Field                 # full wind speed
    Vg: Field                # geostrophic speed
    K: Field                 # motion-corrected curvature
    Vgr: Field               # gradient-wind speed
    diff: Field              # V - Vgr
    mask: Field              # 1 defined / 0 undefined
    smoothed: bool
    cyclone_velocity: CycloneVelocity
    provenance: dict

    def to_dataset(self, out_dir):
        """Write the bundle as fgrid fields plus a provenance JSON."""
        fields = [self.V, self.Vg, self.K, self.Vgr, self.diff, self.mask]
        write_dataset(fields, out_dir, append=True)
        path = os.path.join(out_dir, "provenance.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.provenance, fh, indent=1)
        return out_dir


def balance_bundle(dataset, valid_time, level, c: CycloneVelocity,
                   smoothed: bool, smooth_lmax=106,
                   constants: PhysicalConstants = EARTH,
                   f_plane_lat=None) -> BalanceBundle:
    """Full balance analysis from u, v, z at one time/level.

    With smoothed=True the wind components and geopotential are truncated
    at smooth_lmax first.  The curvature is always evaluated from the
    truncated geopotential (when smooth_lmax is not None), regardless of
    `smoothed`.
    """
    u = dataset.get("u", level, valid_time)
    v = dataset.get("v", level, valid_time)
    z = dataset.get("z", level, valid_time)

    z_t = truncate(z, smooth_lmax) if smooth_lmax is not None else z
    if smoothed:
        u, v, z = truncate(u, smooth_lmax), truncate(v, smooth_lmax), z_t

    speed = wind_speed(u, v)
    ug, vg = geostrophic_wind(z, constants, f_plane_lat)
    vg_speed = wind_speed(ug, vg)
    vg_speed = vg_speed.with_values(vg_speed.values, variable="vg")

    k_contour = contour_curvature(z_t, smooth_lmax=None,
                                  constants=constants, f_plane_lat=f_plane_lat)
    ug_t, vg_t = geostrophic_wind(z_t, constants, f_plane_lat)
    k = motion_corrected_curvature(k_contour, ug_t, vg_t, c)

    vgr, mask = gradient_wind_speed(vg_speed, k, constants, f_plane_lat)
    diff = speed.with_values(speed.values - vgr.values,
                             variable="diff", units="m s-1")
    provenance = {
        "valid_time": str(valid_time),
        "level_hPa": level,
        "smoothed": smoothed,
        "smooth_lmax": smooth_lmax,
        "cyclone_velocity": {"c_x": c.c_x, "c_y": c.c_y},
        "f_plane_lat": f_plane_lat,
        "constants": constants.as_dict(),
        "thresholds": {"min_lat_deg": MIN_LAT_DEG, "min_speed": MIN_SPEED,
                       "k_geostrophic_eps": K_GEOSTROPHIC_EPS},
    }
    return BalanceBundle(valid_time=valid_time, level=level, V=speed,
                         Vg=vg_speed, K=k, Vgr=vgr, diff=diff, mask=mask,
                         smoothed=smoothed, cyclone_velocity=c,
                         provenance=provenance)
