"""Spherical-harmonic analysis/synthesis and triangular truncation.

Transforms run on global regular lat-lon grids only: a per-row FFT in
longitude followed by Legendre quadrature in latitude.  Quadrature weights
are exact for the two supported global layouts (pole-inclusive rows at
theta_j = j*pi/n, or half-step offset rows), so bandlimited fields
round-trip to rounding error.  Harmonics are orthonormal over the sphere
(unit squared integral against the solid-angle measure); coefficients are
stored m-major for 0 <= m <= l <= lmax with real-field conjugate symmetry
implied for m < 0.

Degree 106 is the production default; direct Legendre summation is
entirely adequate at that size.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .grids import Field, GridSpec

SQRT2PI = np.sqrt(2.0 * np.pi)


def coeff_count(lmax):
    return (lmax + 1) * (lmax + 2) // 2


def m_offsets(lmax):
    """Start index of each order-m block in the m-major coefficient layout."""
    m = np.arange(lmax + 2)
    return m * (lmax + 1) - m * (m - 1) // 2


def lm_index(lmax, l, m):
    if not (0 <= m <= l <= lmax):
        raise ValueError(f"invalid (l, m) = ({l}, {m}) for lmax {lmax}")
    return m * (lmax + 1) - m * (m - 1) // 2 + (l - m)


def lm_arrays(lmax):
    """(l, m) per coefficient slot, in storage order."""
    ls, ms = [], []
    for m in range(lmax + 1):
        for l in range(m, lmax + 1):
            ls.append(l)
            ms.append(m)
    return np.array(ls), np.array(ms)


@dataclass
class SpectralField:
    """Triangular-truncation coefficient set for one real field."""

    lmax: int
    coeffs: np.ndarray           # complex, m-major, length coeff_count(lmax)
    norm: str = "orthonormal"

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if self.coeffs.shape != (coeff_count(self.lmax),):
            raise ValueError("coefficient count does not match lmax")

    def get(self, l, m):
        return self.coeffs[lm_index(self.lmax, l, m)]

    def dump_magnitudes(self, path):
        """Debug CSV of (l, m, |c|)."""
        ls, ms = lm_arrays(self.lmax)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["l", "m", "abs_coeff"])
            for l, m, c in zip(ls, ms, self.coeffs):
                w.writerow([l, m, abs(c)])


# ---------------------------------------------------------------------------
# Associated Legendre functions

def legendre_table(lmax, x):
    """Orthonormal associated Legendre functions N_lm(x).

    Normalised so that the integral of N_lm^2 over [-1, 1] is 1, with the
    Condon-Shortley phase.  Returns an array of shape (len(x), count) in
    the m-major layout.  The three-term recurrence normalises on the fly,
    so high degrees neither overflow nor underflow.
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    s = np.sqrt(np.maximum(0.0, 1.0 - x * x))
    n = x.size
    out = np.empty((n, coeff_count(lmax)))
    offs = m_offsets(lmax)
    sect = np.full(n, np.sqrt(0.5))              # N_00
    for m in range(lmax + 1):
        if m > 0:
            sect = -np.sqrt((2 * m + 1) / (2.0 * m)) * s * sect
        base = offs[m]
        out[:, base] = sect
        if m + 1 <= lmax:
            out[:, base + 1] = np.sqrt(2 * m + 3.0) * x * sect
        for l in range(m + 2, lmax + 1):
            a = np.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = np.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            out[:, base + l - m] = a * (
                x * out[:, base + l - 1 - m] - b * out[:, base + l - 2 - m]
            )
    return out


def legendre_dtheta_table(lmax, x, table=None):
    """d N_lm / d theta at x = cos(theta), same layout as legendre_table.

    Uses the degree-lowering identity; singular at the poles, where NaN is
    returned (consistent with the grid-space derivative operators).
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if table is None:
        table = legendre_table(lmax, x)
    s = np.sqrt(np.maximum(0.0, 1.0 - x * x))
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_s = np.where(s > 0, 1.0 / s, np.nan)
    out = np.empty_like(table)
    offs = m_offsets(lmax)
    for m in range(lmax + 1):
        base = offs[m]
        for l in range(m, lmax + 1):
            acc = l * x * table[:, base + l - m]
            if l > m:
                d = np.sqrt((2.0 * l + 1.0) * (l * l - m * m) / (2.0 * l - 1.0))
                acc = acc - d * table[:, base + l - 1 - m]
            out[:, base + l - m] = acc * inv_s
    return out


# ---------------------------------------------------------------------------
# Grid layout checks and quadrature

def colatitudes(spec: GridSpec):
    return np.radians(90.0 - spec.latitudes())


def _global_lat_layout(spec: GridSpec):
    """Classify the latitude layout: 'lobatto' (pole-inclusive) or 'offset'."""
    lats = spec.latitudes()
    n = spec.nlat
    if spec.includes_poles:
        ref = 90.0 - np.arange(n) * (180.0 / (n - 1))
        if np.allclose(lats, ref, atol=1e-9):
            return "lobatto"
    else:
        step = 180.0 / n
        ref = 90.0 - step / 2.0 - np.arange(n) * step
        if np.allclose(lats, ref, atol=1e-9):
            return "offset"
    raise ValueError(
        "spectral transforms need a global grid: equiangular latitudes "
        "either pole-to-pole or offset by half a step"
    )


def quadrature_weights(spec: GridSpec):
    """Latitude quadrature weights, exact for integrating polynomials in
    x = sin(lat) up to degree nlat-1 on the supported layouts.

    The weights solve the Chebyshev moment conditions
    sum_j w_j cos(k theta_j) = integral of T_k over [-1, 1]; on these
    theta layouts the system is a scaled DCT and is perfectly conditioned.
    """
    layout = _global_lat_layout(spec)
    theta = colatitudes(spec)
    n = spec.nlat
    kmax = n - 1
    k = np.arange(kmax + 1)
    moments = np.zeros(kmax + 1)
    even = k % 2 == 0
    moments[even] = 2.0 / (1.0 - k[even] ** 2)
    A = np.cos(np.outer(k, theta))
    if layout == "lobatto":
        w = np.linalg.solve(A, moments)
    else:
        w, *_ = np.linalg.lstsq(A, moments, rcond=None)
    return w


def _check_transform_grid(spec: GridSpec, lmax: int):
    if not spec.global_lon:
        raise ValueError("spectral transforms require a global grid")
    _global_lat_layout(spec)
    if spec.nlat < 2 * (lmax + 1):
        raise ValueError(
            f"nlat {spec.nlat} too small for lmax {lmax}: need >= {2 * (lmax + 1)}"
        )
    if spec.nlon < 2 * lmax + 1:
        raise ValueError(
            f"nlon {spec.nlon} too small for lmax {lmax}: need >= {2 * lmax + 1}"
        )


# ---------------------------------------------------------------------------
# Transforms

def analyze(f: Field, lmax: int) -> SpectralField:
    """Forward transform of a global, NaN-free field."""
    spec = f.spec
    _check_transform_grid(spec, lmax)
    v = np.asarray(f.values, dtype=np.float64)
    if np.isnan(v).any():
        raise ValueError("analyze refuses NaN input; fill or mask first")

    F = np.fft.rfft(v, axis=1)
    m = np.arange(lmax + 1)
    lam0 = np.radians(spec.lon_start)
    g = F[:, : lmax + 1] / spec.nlon * np.exp(-1j * m * lam0)  # (nlat, lmax+1)

    x = np.sin(np.radians(spec.latitudes()))
    table = legendre_table(lmax, x)                            # (nlat, ncoef)
    w = quadrature_weights(spec)
    wtable = table * w[:, None]
    offs = m_offsets(lmax)
    coeffs = np.empty(coeff_count(lmax), dtype=np.complex128)
    for mm in range(lmax + 1):
        sl = slice(offs[mm], offs[mm + 1])
        coeffs[sl] = SQRT2PI * (wtable[:, sl].T @ g[:, mm])
    return SpectralField(lmax=lmax, coeffs=coeffs)


def synthesize(s: SpectralField, target: GridSpec,
               variable="synth", level="sfc",
               valid_time="1970-01-01T00:00:00Z", units="") -> Field:
    """Inverse transform onto a global grid; output is real-valued."""
    if not target.global_lon:
        raise ValueError("synthesis target must be a global grid")
    _global_lat_layout(target)
    lmax = s.lmax
    x = np.sin(np.radians(target.latitudes()))
    table = legendre_table(lmax, x)
    offs = m_offsets(lmax)
    h = np.zeros((target.nlat, target.nlon // 2 + 1), dtype=np.complex128)
    lam0 = np.radians(target.lon_start)
    for mm in range(min(lmax, target.nlon // 2) + 1):
        sl = slice(offs[mm], offs[mm + 1])
        h[:, mm] = (table[:, sl] @ s.coeffs[sl]) / SQRT2PI * np.exp(1j * mm * lam0)
    values = np.fft.irfft(h * target.nlon, n=target.nlon, axis=1)
    return Field(target, variable, level, valid_time, values, units)


def truncate(f: Field, lmax: int = 106) -> Field:
    """Triangular truncation: drop all degrees above lmax."""
    s = analyze(f, lmax)
    out = synthesize(s, f.spec, variable=f.variable, level=f.level,
                     valid_time=f.valid_time, units=f.units)
    return out


def fill_pole_rows(f: Field) -> Field:
    """Replace all-NaN pole rows with the nearest defined row.

    Lets derivative outputs (NaN at the poles by construction) pass
    through the spectral transforms; callers re-mask afterwards.
    """
    v = np.array(f.values, dtype=np.float64)
    nan_rows = np.isnan(v).all(axis=1)
    good = np.flatnonzero(~nan_rows)
    if good.size == 0:
        raise ValueError("field has no defined rows")
    for j in np.flatnonzero(nan_rows):
        v[j, :] = v[good[np.argmin(np.abs(good - j))], :]
    if np.isnan(v).any():
        raise ValueError("NaN present outside all-NaN rows; cannot fill")
    if not nan_rows.any():
        return f
    return f.with_values(v)
