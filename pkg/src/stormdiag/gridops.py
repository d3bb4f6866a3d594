"""Spherical finite-difference operators, regridding and region extraction.

Derivatives are centred second-order stencils, one-sided second-order at
open boundaries, with periodic wrap in longitude on global grids.  Pole
rows come out as NaN; NaN inputs propagate and are never imputed.
"""

from __future__ import annotations

import numpy as np

from .constants import EARTH
from .grids import Field, GridSpec, RegionBox

_POLE_EPS = 1e-9


def _derivative_name(field, tag):
    # keep derivative outputs off the canonical-units registry
    return f"{tag}_{field.variable}"


def ddx(f: Field, constants=EARTH) -> Field:
    """Zonal derivative (1/(a cos(lat))) d/dlon of a field."""
    if f.spec.nlon < 3:
        raise ValueError("ddx needs at least 3 longitude columns")
    v = np.asarray(f.values, dtype=np.float64)
    dlam = np.radians(f.spec.lon_step)
    if f.spec.global_lon:
        dfdlam = (np.roll(v, -1, axis=1) - np.roll(v, 1, axis=1)) / (2.0 * dlam)
    else:
        lam = np.radians(f.spec.lon_step) * np.arange(f.spec.nlon)
        dfdlam = np.gradient(v, lam, axis=1, edge_order=2)
    lat = f.spec.latitudes()
    coslat = np.cos(np.radians(lat))
    polar = np.abs(lat) >= 90.0 - _POLE_EPS
    coslat[polar] = np.nan
    out = dfdlam / (constants.a * coslat[:, None])
    return f.with_values(out, variable=_derivative_name(f, "ddx"), units="")


def ddy(f: Field, constants=EARTH) -> Field:
    """Meridional derivative (1/a) d/dlat of a field."""
    v = np.asarray(f.values, dtype=np.float64)
    phi = np.radians(f.spec.latitudes())
    out = np.gradient(v, phi, axis=0, edge_order=2) / constants.a
    polar = np.abs(f.spec.latitudes()) >= 90.0 - _POLE_EPS
    out[polar, :] = np.nan
    return f.with_values(out, variable=_derivative_name(f, "ddy"), units="")


def regrid_bilinear(f: Field, target: GridSpec) -> Field:
    """Bilinear interpolation onto another regular lat-lon grid.

    Exact pass-through (bitwise) when target equals the source grid.  NaN
    reaches every target cell whose 2x2 source stencil touches NaN.
    """
    src = f.spec
    if target == src:
        return Field(target, f.variable, f.level, f.valid_time,
                     f.values.copy(), f.units)
    v = np.asarray(f.values, dtype=np.float64)

    tlat = target.latitudes()
    lat_lo = min(src.lat_start, src.lat_end) - 1e-9
    lat_hi = max(src.lat_start, src.lat_end) + 1e-9
    if tlat.min() < lat_lo or tlat.max() > lat_hi:
        raise ValueError("target latitudes outside source coverage")
    fj = (tlat - src.lat_start) / src.lat_step      # fractional row index
    j0 = np.clip(np.floor(fj).astype(int), 0, src.nlat - 2)
    wj = fj - j0

    tlon = target.longitudes()
    fl = ((tlon - src.lon_start) % 360.0) / src.lon_step
    if src.global_lon:
        k0 = np.floor(fl).astype(int) % src.nlon
        k1 = (k0 + 1) % src.nlon
        wk = fl - np.floor(fl)
    else:
        if fl.max() > src.nlon - 1 + 1e-9:
            raise ValueError("target longitudes outside source coverage")
        k0 = np.clip(np.floor(fl).astype(int), 0, src.nlon - 2)
        k1 = k0 + 1
        wk = fl - k0

    J0 = j0[:, None]
    WJ = wj[:, None]
    out = ((1 - WJ) * (1 - wk) * v[J0, k0]
           + (1 - WJ) * wk * v[J0, k1]
           + WJ * (1 - wk) * v[J0 + 1, k0]
           + WJ * wk * v[J0 + 1, k1])
    return Field(target, f.variable, f.level, f.valid_time, out, f.units)


def region_extremum(f: Field, box: RegionBox, mode: str):
    """Grid-point extremum of a field inside a box.

    Returns (lat, lon, value).  Ties break to the smallest row index then
    smallest column index, so results do not depend on traversal order.
    """
    if mode not in ("min", "max"):
        raise ValueError(f"mode must be 'min' or 'max', got {mode!r}")
    sel = box.mask(f.spec)
    if not sel.any():
        raise ValueError("box does not overlap the grid")
    v = np.where(sel, np.asarray(f.values, dtype=np.float64), np.nan)
    if np.isnan(v).all():
        raise ValueError("no non-NaN values inside the box")
    flat = np.nanargmin(v) if mode == "min" else np.nanargmax(v)
    j, k = np.unravel_index(flat, v.shape)
    return (float(f.spec.latitudes()[j]),
            float(f.spec.longitudes()[k]),
            float(v[j, k]))
