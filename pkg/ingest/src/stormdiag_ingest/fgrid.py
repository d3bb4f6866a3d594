"""Minimal fgrid dataset writer/reader.

Format contract (shared with the analysis toolkit, not imported from it):
a directory with ``manifest.json`` listing fields, and one raw
little-endian IEEE-754 binary32 payload per field, row-major, rows
north-to-south, columns west-to-east, no header.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

SURFACE = "sfc"


class IngestError(ValueError):
    pass


def format_time(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class Grid:
    """Regular lat-lon grid in fgrid orientation (lat_step < 0)."""

    nlat: int
    nlon: int
    lat_start: float
    lat_step: float
    lon_start: float
    lon_step: float
    includes_poles: bool
    global_lon: bool

    def as_dict(self):
        return {
            "nlat": self.nlat, "nlon": self.nlon,
            "lat_start": self.lat_start, "lat_step": self.lat_step,
            "lon_start": self.lon_start, "lon_step": self.lon_step,
            "includes_poles": self.includes_poles,
            "global_lon": self.global_lon,
        }


def grid_from_axes(lats, lons):
    """Grid metadata from 1-D coordinate arrays (either row order).

    Returns (grid, flipped): flipped is True when the source rows run
    south-to-north and payloads must be reversed along axis 0.
    """
    lats = np.asarray(lats, dtype=np.float64)
    lons = np.asarray(lons, dtype=np.float64)
    if lats.ndim != 1 or lons.ndim != 1 or lats.size < 2 or lons.size < 2:
        raise IngestError("latitude/longitude axes must be 1-D with >= 2 points")
    dlat = np.diff(lats)
    dlon = np.diff(lons)
    if not np.allclose(dlat, dlat[0], atol=1e-6) or \
            not np.allclose(dlon, dlon[0], atol=1e-6):
        raise IngestError("only regular lat-lon grids are supported")
    flipped = dlat[0] > 0
    if flipped:
        lats = lats[::-1]
    lat_step = float(lats[1] - lats[0])
    lon_step = float(dlon[0])
    if lon_step <= 0:
        raise IngestError("longitudes must increase eastward")
    includes_poles = bool(abs(lats[0] - 90.0) < 1e-6
                          and abs(lats[-1] + 90.0) < 1e-6)
    global_lon = bool(abs(lons.size * lon_step - 360.0) < 1e-6)
    return Grid(
        nlat=int(lats.size), nlon=int(lons.size),
        lat_start=float(lats[0]), lat_step=lat_step,
        lon_start=float(lons[0]) % 360.0, lon_step=lon_step,
        includes_poles=includes_poles, global_lon=global_lon,
    ), bool(flipped)


def payload_name(variable, level, when: datetime) -> str:
    lev = SURFACE if level == SURFACE else f"{float(level):g}"
    return f"{variable}_{lev}_{when.strftime('%Y%m%dT%H%M')}.f32"


def write_dataset(records, out_dir):
    """Write (variable, level, time, units, grid, values) records.

    Records are written in the order given; duplicate keys are an error.
    """
    os.makedirs(out_dir, exist_ok=True)
    entries = []
    seen = set()
    for variable, level, when, units, grid, values in records:
        values = np.ascontiguousarray(values, dtype="<f4")
        if values.shape != (grid.nlat, grid.nlon):
            raise IngestError(
                f"payload shape {values.shape} does not match grid "
                f"({grid.nlat}, {grid.nlon})"
            )
        key = (variable, SURFACE if level == SURFACE else float(level),
               format_time(when))
        if key in seen:
            raise IngestError(f"duplicate field key {key}")
        seen.add(key)
        name = payload_name(variable, level, when)
        values.tofile(os.path.join(out_dir, name))
        entries.append({
            "variable": variable,
            "level_hPa": key[1],
            "valid_time": key[2],
            "file": name,
            "units": units,
            "grid": grid.as_dict(),
        })
    manifest = os.path.join(out_dir, "manifest.json")
    with open(manifest, "w", encoding="utf-8") as fh:
        json.dump({"fields": entries}, fh, indent=1)
    return manifest


def load_manifest(dataset_dir):
    path = os.path.join(dataset_dir, "manifest.json")
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)["fields"]


def read_payload(dataset_dir, entry):
    g = entry["grid"]
    data = np.fromfile(os.path.join(dataset_dir, entry["file"]), dtype="<f4")
    if data.size != g["nlat"] * g["nlon"]:
        raise IngestError(f"{entry['file']}: payload length mismatch")
    return data.reshape((g["nlat"], g["nlon"]))
