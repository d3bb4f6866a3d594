"""Grid/field data model, the fgrid on-disk format and dataset index.

An fgrid dataset is a directory holding ``manifest.json`` plus one raw
binary file per field: little-endian IEEE-754 binary32, row-major,
north-to-south rows and west-to-east columns, no header.  Missing data is
quiet NaN everywhere; nothing ever imputes it.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field as dc_field
from datetime import datetime, timezone

import numpy as np

# Canonical variable -> SI unit registry.  Derived products written back
# into datasets use the same table.
CANONICAL_UNITS = {
    "msl": "Pa",
    "u10": "m s-1",
    "v10": "m s-1",
    "u": "m s-1",
    "v": "m s-1",
    "z": "m2 s-2",
    "t": "K",
    "r": "%",
    "q": "kg kg-1",
    # derived
    "ws10": "m s-1",
    "ws": "m s-1",
    "vo": "s-1",
    "thw": "K",
    "r_derived": "%",
    # balance diagnostics
    "vg": "m s-1",
    "vgr": "m s-1",
    "curv": "m-1",
    "diff": "m s-1",
    "mask": "1",
}

SURFACE = "sfc"


class DatasetError(ValueError):
    """Malformed manifest or inconsistent fgrid dataset."""


def parse_time(value):
    """Parse an ISO-8601 instant to an aware UTC datetime."""
    if isinstance(value, datetime):
        dt = value
    else:
        dt = datetime.fromisoformat(str(value).replace("Z", "+00:00"))
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_time(dt):
    return parse_time(dt).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class GridSpec:
    """Regular latitude-longitude grid, rows north-to-south."""

    nlat: int
    nlon: int
    lat_start: float          # northernmost row [deg]
    lat_step: float           # negative, north-to-south [deg]
    lon_start: float          # in [0, 360) [deg]
    lon_step: float           # positive, eastward [deg]
    includes_poles: bool = False
    global_lon: bool = False

    def __post_init__(self):
        if self.nlat < 3 or self.nlon < 4:
            raise ValueError("grid too small: need nlat >= 3 and nlon >= 4")
        if self.lat_step >= 0:
            raise ValueError("lat_step must be negative (north-to-south)")
        if self.lon_step <= 0:
            raise ValueError("lon_step must be positive")
        if not (0.0 <= self.lon_start < 360.0):
            raise ValueError("lon_start must lie in [0, 360)")
        lat_end = self.lat_start + (self.nlat - 1) * self.lat_step
        if self.lat_start > 90.0 + 1e-9 or lat_end < -90.0 - 1e-9:
            raise ValueError("latitude rows must stay within [-90, 90]")
        if self.global_lon and abs(self.nlon * self.lon_step - 360.0) > 1e-9:
            raise ValueError("global_lon grid requires nlon * lon_step == 360")
        if self.includes_poles:
            if abs(self.lat_start - 90.0) > 1e-9 or abs(lat_end + 90.0) > 1e-9:
                raise ValueError("includes_poles requires rows from 90 to -90")

    @property
    def lat_end(self):
        return self.lat_start + (self.nlat - 1) * self.lat_step

    def latitudes(self):
        return self.lat_start + np.arange(self.nlat) * self.lat_step

    def longitudes(self):
        return (self.lon_start + np.arange(self.nlon) * self.lon_step) % 360.0

    @property
    def shape(self):
        return (self.nlat, self.nlon)

    def as_dict(self):
        return {
            "nlat": self.nlat,
            "nlon": self.nlon,
            "lat_start": self.lat_start,
            "lat_step": self.lat_step,
            "lon_start": self.lon_start,
            "lon_step": self.lon_step,
            "includes_poles": self.includes_poles,
            "global_lon": self.global_lon,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            nlat=int(d["nlat"]),
            nlon=int(d["nlon"]),
            lat_start=float(d["lat_start"]),
            lat_step=float(d["lat_step"]),
            lon_start=float(d["lon_start"]),
            lon_step=float(d["lon_step"]),
            includes_poles=bool(d["includes_poles"]),
            global_lon=bool(d["global_lon"]),
        )


@dataclass
class Field:
    """One scalar field on a GridSpec at a single level and time."""

    spec: GridSpec
    variable: str
    level: object            # pressure in hPa (float) or "sfc"
    valid_time: datetime
    values: np.ndarray       # (nlat, nlon), NaN = missing
    units: str

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != self.spec.shape:
            raise ValueError(
                f"values shape {self.values.shape} does not match grid "
                f"{self.spec.shape}"
            )
        self.valid_time = parse_time(self.valid_time)
        if self.level != SURFACE:
            self.level = float(self.level)
        canonical = CANONICAL_UNITS.get(self.variable)
        if canonical is not None and self.units != canonical:
            raise ValueError(
                f"variable {self.variable!r} must carry units "
                f"{canonical!r}, got {self.units!r}"
            )
        finite_ok = np.isfinite(self.values) | np.isnan(self.values)
        if not finite_ok.all():
            raise ValueError("non-NaN values must be finite")

    @property
    def key(self):
        return (self.variable, self.level, self.valid_time)

    def with_values(self, values, variable=None, units=None):
        """Copy of this field carrying new values (and optionally a new name)."""
        return Field(
            spec=self.spec,
            variable=self.variable if variable is None else variable,
            level=self.level,
            valid_time=self.valid_time,
            values=values,
            units=self.units if units is None else units,
        )


@dataclass(frozen=True)
class RegionBox:
    """Lat-lon box; the longitude interval is interpreted modulo 360."""

    lon_west: float
    lon_east: float
    lat_south: float
    lat_north: float

    def __post_init__(self):
        if self.lat_south >= self.lat_north:
            raise ValueError("lat_south must be < lat_north")

    def lon_mask(self, lons):
        west = self.lon_west % 360.0
        east = self.lon_east % 360.0
        lons = np.asarray(lons) % 360.0
        if west <= east:
            return (lons >= west) & (lons <= east)
        return (lons >= west) | (lons <= east)  # wraps the dateline

    def lat_mask(self, lats):
        lats = np.asarray(lats)
        return (lats >= self.lat_south) & (lats <= self.lat_north)

    def mask(self, spec):
        """Boolean (nlat, nlon) selection mask on the given grid."""
        return np.outer(self.lat_mask(spec.latitudes()),
                        np.ones(spec.nlon, bool)) & self.lon_mask(spec.longitudes())


def haversine_m(lat1, lon1, lat2, lon2, radius=6_371_229.0):
    """Great-circle distance in metres between points in degrees."""
    p1, p2 = np.radians(lat1), np.radians(lat2)
    dphi = p2 - p1
    dlam = np.radians(np.asarray(lon2) - np.asarray(lon1))
    h = np.sin(dphi / 2.0) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dlam / 2.0) ** 2
    return 2.0 * radius * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))


# ---------------------------------------------------------------------------
# fgrid I/O

def write_payload(path, values):
    """Write raw little-endian binary32 payload, row-major."""
    np.ascontiguousarray(values, dtype="<f4").tofile(path)


def read_payload(path, spec):
    data = np.fromfile(path, dtype="<f4")
    if data.size != spec.nlat * spec.nlon:
        raise DatasetError(
            f"{path}: expected {spec.nlat * spec.nlon} values, got {data.size}"
        )
    return data.reshape(spec.shape)


def _level_json(level):
    return level if level == SURFACE else float(level)


def field_filename(field):
    lev = "sfc" if field.level == SURFACE else f"{field.level:g}"
    stamp = field.valid_time.strftime("%Y%m%dT%H%M")
    return f"{field.variable}_{lev}_{stamp}.f32"


def manifest_entry(field, filename):
    return {
        "variable": field.variable,
        "level_hPa": _level_json(field.level),
        "valid_time": format_time(field.valid_time),
        "file": filename,
        "units": field.units,
        "grid": field.spec.as_dict(),
    }


def write_dataset(fields, out_dir, append=False):
    """Write fields (and manifest.json) as an fgrid dataset directory.

    With append=True, existing manifest entries are kept and extended.
    """
    os.makedirs(out_dir, exist_ok=True)
    manifest_path = os.path.join(out_dir, "manifest.json")
    entries = []
    if append and os.path.exists(manifest_path):
        with open(manifest_path, encoding="utf-8") as fh:
            entries = json.load(fh)["fields"]
    seen = {(e["variable"], e["level_hPa"], e["valid_time"]) for e in entries}
    for f in fields:
        name = field_filename(f)
        entry = manifest_entry(f, name)
        k = (entry["variable"], entry["level_hPa"], entry["valid_time"])
        if k in seen:
            raise DatasetError(f"duplicate field key {k}")
        seen.add(k)
        write_payload(os.path.join(out_dir, name), f.values)
        entries.append(entry)
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump({"fields": entries}, fh, indent=1)
    return manifest_path


class Dataset:
    """Manifest-indexed collection of fields, loaded lazily from disk.

    Fields are immutable after load; all access is read-only, so instances
    may be shared freely across parallel workers.
    """

    def __init__(self, root, entries, label=None):
        self.root = root
        self.label = label or os.path.basename(os.path.abspath(root))
        self._entries = {}
        self._cache = {}
        for e in entries:
            key = self._entry_key(e)
            if key in self._entries:
                raise DatasetError(f"duplicate manifest key {key}")
            self._entries[key] = e

    @staticmethod
    def _entry_key(entry):
        level = entry["level_hPa"]
        if level != SURFACE:
            level = float(level)
        return (entry["variable"], level, parse_time(entry["valid_time"]))

    def __len__(self):
        return len(self._entries)

    def keys(self):
        return sorted(self._entries, key=lambda k: (k[0], str(k[1]), k[2]))

    def has(self, variable, level, valid_time):
        return self._norm_key(variable, level, valid_time) in self._entries

    @staticmethod
    def _norm_key(variable, level, valid_time):
        if level != SURFACE:
            level = float(level)
        return (variable, level, parse_time(valid_time))

    def times(self, variable, level):
        key_lv = self._norm_key(variable, level, datetime.now(timezone.utc))[:2]
        return sorted(t for (v, l, t) in self._entries if (v, l) == key_lv)

    def get(self, variable, level, valid_time):
        key = self._norm_key(variable, level, valid_time)
        if key not in self._entries:
            raise DatasetError(f"no field for key {key} in {self.root}")
        if key not in self._cache:
            e = self._entries[key]
            spec = GridSpec.from_dict(e["grid"])
            values = read_payload(os.path.join(self.root, e["file"]), spec)
            self._cache[key] = Field(
                spec=spec,
                variable=e["variable"],
                level=key[1],
                valid_time=key[2],
                values=values,
                units=e["units"],
            )
        return self._cache[key]


def load_dataset(manifest_path, label=None):
    """Load an fgrid dataset, validating every referenced payload up front."""
    if os.path.isdir(manifest_path):
        manifest_path = os.path.join(manifest_path, "manifest.json")
    if not os.path.exists(manifest_path):
        raise DatasetError(f"manifest not found: {manifest_path}")
    root = os.path.dirname(os.path.abspath(manifest_path))
    try:
        with open(manifest_path, encoding="utf-8") as fh:
            doc = json.load(fh)
        entries = doc["fields"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DatasetError(f"malformed manifest {manifest_path}: {exc}") from exc
    for e in entries:
        try:
            spec = GridSpec.from_dict(e["grid"])
            key = Dataset._entry_key(e)
        except (KeyError, ValueError) as exc:
            raise DatasetError(
                f"malformed manifest entry {e.get('file', '?')}: {exc}"
            ) from exc
        path = os.path.join(root, e["file"])
        if not os.path.exists(path):
            raise DatasetError(f"field file missing for key {key}: {path}")
        expect = 4 * spec.nlat * spec.nlon
        actual = os.path.getsize(path)
        if actual != expect:
            raise DatasetError(
                f"field file length mismatch for key {key}: {path} has "
                f"{actual} bytes, expected {expect}"
            )
    return Dataset(root, entries, label=label)
