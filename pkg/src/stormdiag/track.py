"""Cyclone tracking from MSLP minima, intensification metrics and
storm-relative jet/wind diagnostics.

The tracker follows the grid-point MSLP minimum: first inside a
first-guess box, then within a great-circle search radius of the previous
centre.  No sub-grid refinement is applied.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field as dc_field
from datetime import timedelta

import numpy as np

from .constants import EARTH
from .derive import wind_speed
from .gridops import region_extremum
from .grids import RegionBox, format_time, haversine_m, parse_time

log = logging.getLogger(__name__)

DEFAULT_SEARCH_RADIUS_KM = 900.0   # ~40 m/s over a 6-h step
MAX_SPEED_MS = 40.0


@dataclass
class TrackPoint:
    valid_time: object
    lat: float
    lon: float
    mslp_min: float          # hPa

    def __post_init__(self):
        self.valid_time = parse_time(self.valid_time)
        if not 850.0 < self.mslp_min < 1100.0:
            raise ValueError(
                f"mslp {self.mslp_min} hPa outside sanity bounds (850, 1100)"
            )


@dataclass
class Track:
    points: list
    source_label: str = ""
    max_speed_ms: float = MAX_SPEED_MS

    def __post_init__(self):
        times = [p.valid_time for p in self.points]
        if any(t1 >= t2 for t1, t2 in zip(times, times[1:])):
            raise ValueError("track times must be strictly increasing")
        steps = {t2 - t1 for t1, t2 in zip(times, times[1:])}
        if len(steps) > 1:
            raise ValueError("track points must be evenly spaced in time")
        for p1, p2 in zip(self.points, self.points[1:]):
            dt = (p2.valid_time - p1.valid_time).total_seconds()
            d = haversine_m(p1.lat, p1.lon, p2.lat, p2.lon)
            if d / dt > self.max_speed_ms:
                raise ValueError(
                    f"implied propagation speed {d / dt:.1f} m/s at "
                    f"{p2.valid_time} exceeds the {self.max_speed_ms} m/s gate"
                )

    def __len__(self):
        return len(self.points)

    def times(self):
        return [p.valid_time for p in self.points]


@dataclass
class IntensificationReport:
    deepening_hPa_per_24h: float
    reference_lat: float
    bergerons: float
    is_bomb: bool


def track_cyclone(dataset, first_guess: RegionBox, t0, t1,
                  search_radius_km=DEFAULT_SEARCH_RADIUS_KM,
                  constants=EARTH) -> Track:
    """Follow the MSLP minimum from t0 to t1 at grid-point precision."""
    t0, t1 = parse_time(t0), parse_time(t1)
    times = [t for t in dataset.times("msl", "sfc") if t0 <= t <= t1]
    if not times:
        raise ValueError(f"no msl fields between {t0} and {t1}")
    steps = {t2 - t1_ for t1_, t2 in zip(times, times[1:])}
    if len(steps) > 1:
        raise ValueError("msl fields are not evenly spaced in time")

    points = []
    for t in times:
        f = dataset.get("msl", "sfc", t)
        if not points:
            lat, lon, val = region_extremum(f, first_guess, "min")
        else:
            prev = points[-1]
            dist = haversine_m(prev.lat, prev.lon,
                               f.spec.latitudes()[:, None],
                               f.spec.longitudes()[None, :],
                               radius=constants.a)
            sel = dist <= search_radius_km * 1000.0
            v = np.where(sel, np.asarray(f.values, np.float64), np.nan)
            if np.isnan(v).all():
                log.warning("track terminated early at %s: no minimum "
                            "within %.0f km", t, search_radius_km)
                break
            j, k = np.unravel_index(np.nanargmin(v), v.shape)
            lat = float(f.spec.latitudes()[j])
            lon = float(f.spec.longitudes()[k])
            val = float(v[j, k])
        points.append(TrackPoint(valid_time=t, lat=lat, lon=lon,
                                 mslp_min=val / 100.0))
    return Track(points=points, source_label=dataset.label)


def intensification(track: Track, window_h=24.0) -> IntensificationReport:
    """Maximum deepening over sliding windows plus the bomb classification.

    bergerons normalises the 24-h-equivalent deepening by
    sin(lat)/sin(60); >= 1 marks explosive cyclogenesis.
    """
    window = timedelta(hours=window_h)
    pts = track.points
    span = pts[-1].valid_time - pts[0].valid_time if len(pts) > 1 else timedelta(0)
    if span < window:
        raise ValueError(f"track spans {span}, shorter than the "
                         f"{window_h} h window")
    best = None
    for i, p_i in enumerate(pts):
        for p_j in pts[i + 1:]:
            if p_j.valid_time - p_i.valid_time == window:
                deepening = p_i.mslp_min - p_j.mslp_min
                if best is None or deepening > best[0]:
                    best = (deepening, p_i, p_j)
    if best is None:
        raise ValueError("no point pair separated by the window length")
    deepening, p_i, p_j = best
    mid = p_i.valid_time + window / 2
    ref_lat = _lat_at_time(track, mid)
    per24 = deepening * 24.0 / window_h
    bergerons = per24 / (24.0 * np.sin(np.radians(abs(ref_lat)))
                         / np.sin(np.radians(60.0)))
    return IntensificationReport(
        deepening_hPa_per_24h=per24,
        reference_lat=ref_lat,
        bergerons=float(bergerons),
        is_bomb=bool(bergerons >= 1.0),
    )


def _lat_at_time(track: Track, when):
    pts = track.points
    for p1, p2 in zip(pts, pts[1:]):
        if p1.valid_time <= when <= p2.valid_time:
            dt = (p2.valid_time - p1.valid_time).total_seconds()
            w = (when - p1.valid_time).total_seconds() / dt
            return float((1 - w) * p1.lat + w * p2.lat)
    raise ValueError(f"{when} outside track time range")


def jet_max_at_track_longitude(dataset, track: Track, level=250.0,
                               lat_band=(20.0, 75.0)):
    """Jet maximum along the meridian at each track point's longitude.

    Returns a list of (valid_time, lat, lon, speed) rows.  Ties take the
    northernmost latitude.
    """
    rows = []
    for p in track.points:
        u = dataset.get("u", level, p.valid_time)
        v = dataset.get("v", level, p.valid_time)
        speed = wind_speed(u, v)
        lons = speed.spec.longitudes()
        k = int(np.argmin(np.abs(((lons - p.lon) + 180.0) % 360.0 - 180.0)))
        lats = speed.spec.latitudes()
        in_band = (lats >= lat_band[0]) & (lats <= lat_band[1])
        col = np.where(in_band, np.asarray(speed.values, np.float64)[:, k], np.nan)
        if np.isnan(col).all():
            raise ValueError(f"no values in the latitude band at {p.valid_time}")
        j = int(np.nanargmax(col))    # first occurrence = northernmost
        rows.append((p.valid_time, float(lats[j]), float(lons[k]),
                     float(col[j])))
    return rows


def intensity_timeseries(dataset, track: Track, wind_box_radius_km=500.0,
                         constants=EARTH):
    """Central MSLP and peak near-centre 10-m wind per track time.

    Returns a list of dict rows with keys valid_time, mslp_min_hPa,
    max_ws10_m_s.  Uses a ws10 field if present, else u10/v10.
    """
    rows = []
    for p in track.points:
        if dataset.has("ws10", "sfc", p.valid_time):
            ws = dataset.get("ws10", "sfc", p.valid_time)
        else:
            ws = wind_speed(dataset.get("u10", "sfc", p.valid_time),
                            dataset.get("v10", "sfc", p.valid_time))
        dist = haversine_m(p.lat, p.lon,
                           ws.spec.latitudes()[:, None],
                           ws.spec.longitudes()[None, :],
                           radius=constants.a)
        sel = dist <= wind_box_radius_km * 1000.0
        v = np.where(sel, np.asarray(ws.values, np.float64), np.nan)
        if np.isnan(v).all():
            raise ValueError(f"no wind values near the centre at {p.valid_time}")
        rows.append({
            "valid_time": p.valid_time,
            "mslp_min_hPa": p.mslp_min,
            "max_ws10_m_s": float(np.nanmax(v)),
        })
    return rows


# ---------------------------------------------------------------------------
# JSON interchange

def track_to_json(track: Track, report: IntensificationReport = None):
    doc = {
        "source_label": track.source_label,
        "points": [
            {"time": format_time(p.valid_time), "lat": p.lat, "lon": p.lon,
             "mslp_hPa": p.mslp_min}
            for p in track.points
        ],
    }
    if report is not None:
        doc["intensification"] = {
            "deepening_hPa_per_24h": report.deepening_hPa_per_24h,
            "reference_lat": report.reference_lat,
            "bergerons": report.bergerons,
            "is_bomb": report.is_bomb,
        }
    return doc


def track_from_json(doc) -> Track:
    points = [TrackPoint(valid_time=p["time"], lat=p["lat"], lon=p["lon"],
                         mslp_min=p["mslp_hPa"]) for p in doc["points"]]
    return Track(points=points, source_label=doc.get("source_label", ""))


def write_track(track: Track, path, report=None):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(track_to_json(track, report), fh, indent=1)


def read_track(path) -> Track:
    with open(path, encoding="utf-8") as fh:
        return track_from_json(json.load(fh))
