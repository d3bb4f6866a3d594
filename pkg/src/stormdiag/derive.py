"""Derived kinematic and thermodynamic fields.

Wind speed, relative vorticity on the sphere, pseudo-wet-bulb potential
temperature (Bolton equivalent potential temperature followed by the
Davies-Jones inversion) and relative humidity from specific humidity.
All operations are elementwise or local stencils; NaN propagates.
"""

from __future__ import annotations

import logging

import numpy as np

from .constants import EARTH
from .gridops import ddx, ddy
from .grids import Field

log = logging.getLogger(__name__)

EPSILON = 0.622          # Rd / Rv
KAPPA_D = 0.2854         # Rd / cpd


def _check_same_grid(a: Field, b: Field):
    if a.spec != b.spec:
        raise ValueError("fields are on different grids")
    if a.valid_time != b.valid_time or a.level != b.level:
        raise ValueError("fields are at different level/time")


def wind_speed(u: Field, v: Field) -> Field:
    """sqrt(u^2 + v^2), NaN wherever either component is NaN."""
    _check_same_grid(u, v)
    speed = np.hypot(np.asarray(u.values, np.float64),
                     np.asarray(v.values, np.float64))
    name = "ws10" if u.level == "sfc" else "ws"
    return u.with_values(speed, variable=name, units="m s-1")


def relative_vorticity(u: Field, v: Field, constants=EARTH) -> Field:
    """Vertical component of relative vorticity, full spherical form.

    zeta = (1/(a cos(lat))) * [dv/dlon - d(u cos(lat))/dlat]
    """
    _check_same_grid(u, v)
    coslat = np.cos(np.radians(u.spec.latitudes()))[:, None]
    term1 = ddx(v, constants).values
    ucos = u.with_values(np.asarray(u.values, np.float64) * coslat)
    term2 = ddy(ucos, constants).values / coslat
    return u.with_values(term1 - term2, variable="vo", units="s-1")


# ---------------------------------------------------------------------------
# Moist thermodynamics (arrays in, arrays out; temperatures in K,
# pressures in hPa, vapour pressures in hPa)

def saturation_vapor_pressure(t_k):
    """Saturation vapour pressure over water [hPa], Bolton fit."""
    tc = np.asarray(t_k, np.float64) - 273.15
    return 6.112 * np.exp(17.67 * tc / (tc + 243.5))


def saturation_mixing_ratio(t_k, p_hpa):
    es = saturation_vapor_pressure(t_k)
    return EPSILON * es / (p_hpa - es)


def theta_e_bolton(t_k, rh_pct, p_hpa):
    """Pseudoequivalent potential temperature [K] from T, RH and pressure."""
    t = np.asarray(t_k, np.float64)
    e = np.asarray(rh_pct, np.float64) / 100.0 * saturation_vapor_pressure(t)
    e = np.maximum(e, 1e-10)                      # rh -> 0 limit stays finite
    r = EPSILON * e / (p_hpa - e)
    t_lcl = 2840.0 / (3.5 * np.log(t) - np.log(e) - 4.805) + 55.0
    theta_l = (t * (1000.0 / (p_hpa - e)) ** KAPPA_D
               * (t / t_lcl) ** (0.28 * r))
    return theta_l * np.exp((3036.0 / t_lcl - 1.78) * r * (1.0 + 0.448 * r))


# Davies-Jones rational approximation for the inverse of theta_e(theta_w).
_DJ_NUM = (7.101574, -20.68208, 16.11182, 2.574631, -5.205688)
_DJ_DEN = (1.0, -3.552497, 3.781782, -0.6899655, -0.5929340)


def theta_w_from_theta_e(theta_e):
    """Wet-bulb potential temperature [K] from theta_e, Davies-Jones fit."""
    te = np.asarray(theta_e, np.float64)
    x = te / 273.15
    num = sum(c * x ** i for i, c in enumerate(_DJ_NUM))
    den = sum(c * x ** i for i, c in enumerate(_DJ_DEN))
    corr = np.exp(num / den)
    return np.where(te >= 173.15, te - corr, te)


def _validate_physical(t, rh=None, q=None):
    tv = np.asarray(t, np.float64)
    if np.any(tv <= 0):
        raise ValueError("temperature must be positive (K)")
    if rh is not None:
        rv = np.asarray(rh, np.float64)
        if np.any(rv < 0) or np.any(rv > 110.0):
            raise ValueError("relative humidity outside [0, 110] %")
    if q is not None:
        qv = np.asarray(q, np.float64)
        if np.any(qv < 0):
            raise ValueError("specific humidity must be non-negative")


def theta_w(t: Field, humidity: Field, humidity_kind: str, level) -> Field:
    """Pseudo-wet-bulb potential temperature field [K].

    humidity_kind selects the second input: 'rh' (%) or 'q' (kg/kg).
    """
    _check_same_grid(t, humidity)
    p = float(level)
    tv = np.asarray(t.values, np.float64)
    hv = np.asarray(humidity.values, np.float64)
    if humidity_kind == "rh":
        _validate_physical(tv, rh=hv)
        rh = hv
    elif humidity_kind == "q":
        _validate_physical(tv, q=hv)
        e = p * hv / (EPSILON + (1.0 - EPSILON) * hv)
        rh = 100.0 * e / saturation_vapor_pressure(tv)
    else:
        raise ValueError(f"humidity_kind must be 'rh' or 'q', got {humidity_kind!r}")
    te = theta_e_bolton(tv, rh, p)
    return t.with_values(theta_w_from_theta_e(te), variable="thw", units="K")


def rh_from_q(q: Field, t: Field, level) -> Field:
    """Relative humidity (%) w.r.t. water from specific humidity.

    Values are clipped to [0, 150]; clips are counted and logged, since
    reanalysis supersaturation artifacts are expected rather than fatal.
    """
    _check_same_grid(q, t)
    p = float(level)
    qv = np.asarray(q.values, np.float64)
    tv = np.asarray(t.values, np.float64)
    _validate_physical(tv, q=qv)
    e = p * qv / (EPSILON + (1.0 - EPSILON) * qv)
    rh = 100.0 * e / saturation_vapor_pressure(tv)
    n_clip = int(np.sum((rh < 0.0) | (rh > 150.0)))
    if n_clip:
        log.warning("rh_from_q clipped %d cells to [0, 150] %%", n_clip)
    rh = np.clip(rh, 0.0, 150.0)
    return q.with_values(rh, variable="r_derived", units="%")
