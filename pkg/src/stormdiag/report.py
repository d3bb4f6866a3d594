"""Quantitative summaries: conveyor-belt peak tables, multi-model
intercomparison and contour-level exports.

Output formats are plot-ready data, not plots: CSV for tables, JSON for
contour polylines.  All reductions use fixed traversal orders so tables
are reproducible bit-for-bit.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass

import numpy as np
from skimage import measure

from .constants import EARTH
from .derive import wind_speed
from .gridops import region_extremum
from .grids import Field, RegionBox, format_time, haversine_m

log = logging.getLogger(__name__)

# Contour-level conventions for the standard map products.
CONTOUR_CONVENTIONS = {
    "thw": [280.0, 282.5, 285.0, 287.5],                       # K
    "vo": [3e-4 + 2e-4 * k for k in range(7)],                 # s-1
    "r": [80.0],                                               # %
    "ws250": [65.0],                                           # m/s
}


@dataclass
class PeakSummary:
    source_label: str
    valid_time: object
    region_label: str            # "CCB" | "WCB"
    peak_V: float
    peak_Vg: float
    peak_Vgr: float
    at_V: tuple
    at_Vg: tuple
    at_Vgr: tuple


@dataclass
class ContourExport:
    variable: str
    levels: list
    polylines: dict              # level -> list of [(lat, lon), ...]


def _region_max(field: Field, box: RegionBox):
    """(value, (lat, lon)) or (nan, None) when the box holds no data."""
    try:
        lat, lon, val = region_extremum(field, box, "max")
        return val, (lat, lon)
    except ValueError:
        return float("nan"), None


def peak_table(bundles, boxes):
    """Peak V / Vg / Vgr per source and conveyor-belt region.

    bundles: mapping source label -> BalanceBundle (smoothed inputs);
    boxes: mapping region label (e.g. "CCB", "WCB") -> RegionBox.
    Returns a list of PeakSummary rows ordered by source then region.
    """
    rows = []
    for label in sorted(bundles):
        b = bundles[label]
        for region in sorted(boxes):
            box = boxes[region]
            peak_v, at_v = _region_max(b.V, box)
            peak_vg, at_vg = _region_max(b.Vg, box)
            peak_vgr, at_vgr = _region_max(b.Vgr, box)
            rows.append(PeakSummary(
                source_label=label, valid_time=b.valid_time,
                region_label=region, peak_V=peak_v, peak_Vg=peak_vg,
                peak_Vgr=peak_vgr, at_V=at_v, at_Vg=at_vg, at_Vgr=at_vgr,
            ))
    return rows


def intercomparison(datasets, track_ref, times, wind_radius_km=500.0,
                    search_radius_km=900.0, constants=EARTH):
    """Per-source central MSLP, near-centre peak wind and position error.

    datasets: mapping label -> Dataset.  track_ref supplies the reference
    centre at each time; the per-source centre is the MSLP minimum within
    search_radius_km of it.  Sources missing fields are reported and
    skipped; the rest are still processed.
    """
    ref_by_time = {p.valid_time: p for p in track_ref.points}
    rows = []
    for label in sorted(datasets):
        ds = datasets[label]
        for t in times:
            ref = ref_by_time.get(t)
            if ref is None:
                raise ValueError(f"reference track has no point at {t}")
            try:
                msl = ds.get("msl", "sfc", t)
                if ds.has("ws10", "sfc", t):
                    ws = ds.get("ws10", "sfc", t)
                else:
                    ws = wind_speed(ds.get("u10", "sfc", t),
                                    ds.get("v10", "sfc", t))
            except Exception as exc:
                log.warning("source %s missing fields at %s: %s", label, t, exc)
                rows.append({"source": label, "valid_time": t, "error": str(exc)})
                continue
            dist = haversine_m(ref.lat, ref.lon,
                               msl.spec.latitudes()[:, None],
                               msl.spec.longitudes()[None, :],
                               radius=constants.a)
            sel = dist <= search_radius_km * 1000.0
            v = np.where(sel, np.asarray(msl.values, np.float64), np.nan)
            j, k = np.unravel_index(np.nanargmin(v), v.shape)
            clat = float(msl.spec.latitudes()[j])
            clon = float(msl.spec.longitudes()[k])
            wdist = haversine_m(clat, clon,
                                ws.spec.latitudes()[:, None],
                                ws.spec.longitudes()[None, :],
                                radius=constants.a)
            wsel = wdist <= wind_radius_km * 1000.0
            wv = np.where(wsel, np.asarray(ws.values, np.float64), np.nan)
            rows.append({
                "source": label,
                "valid_time": t,
                "mslp_min_hPa": float(v[j, k]) / 100.0,
                "center_lat": clat,
                "center_lon": clon,
                "max_ws10_m_s": float(np.nanmax(wv)),
                "position_error_km": float(
                    haversine_m(ref.lat, ref.lon, clat, clon,
                                radius=constants.a) / 1000.0),
            })
    return rows


def contour_export(f: Field, convention: str) -> ContourExport:
    """Marching-squares polylines at the registry thresholds.

    Vertices are (lat, lon) pairs; ordering is deterministic (scan order
    of the underlying marching-squares pass).  NaN cells produce no
    segments.
    """
    if convention not in CONTOUR_CONVENTIONS:
        raise ValueError(f"unknown contour convention {convention!r}")
    levels = CONTOUR_CONVENTIONS[convention]
    spec = f.spec
    v = np.asarray(f.values, np.float64)
    polylines = {}
    for level in levels:
        lines = []
        for contour in measure.find_contours(v, level):
            lats = spec.lat_start + contour[:, 0] * spec.lat_step
            lons = (spec.lon_start + contour[:, 1] * spec.lon_step) % 360.0
            lines.append([(float(a), float(b)) for a, b in zip(lats, lons)])
        polylines[level] = lines
    return ContourExport(variable=f.variable, levels=list(levels),
                         polylines=polylines)


# ---------------------------------------------------------------------------
# Writers

def write_peak_table_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["source", "valid_time", "region",
                    "peak_V", "peak_Vg", "peak_Vgr",
                    "lat_V", "lon_V", "lat_Vg", "lon_Vg", "lat_Vgr", "lon_Vgr"])
        for r in rows:
            def _at(at):
                return ("", "") if at is None else at
            w.writerow([r.source_label, format_time(r.valid_time),
                        r.region_label,
                        _fmt(r.peak_V), _fmt(r.peak_Vg), _fmt(r.peak_Vgr),
                        *_at(r.at_V), *_at(r.at_Vg), *_at(r.at_Vgr)])


def write_intercomparison_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["source", "valid_time", "mslp_min_hPa", "center_lat",
                    "center_lon", "max_ws10_m_s", "position_error_km", "error"])
        for r in rows:
            w.writerow([r["source"], format_time(r["valid_time"]),
                        _fmt(r.get("mslp_min_hPa")), _fmt(r.get("center_lat")),
                        _fmt(r.get("center_lon")), _fmt(r.get("max_ws10_m_s")),
                        _fmt(r.get("position_error_km")), r.get("error", "")])


def write_contours_json(export: ContourExport, path):
    doc = {
        "variable": export.variable,
        "levels": export.levels,
        "polylines": {str(lv): lines for lv, lines in export.polylines.items()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float) and np.isnan(x):
        return ""
    return x
