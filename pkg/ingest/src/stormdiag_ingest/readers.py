"""Source-file readers: NetCDF classic, NetCDF4/HDF5, GRIB (optional).

Each reader yields RawField records (one per variable/level/time slice)
with coordinate axes exactly as stored in the source.  File type is
sniffed from magic bytes, not the extension.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

import numpy as np

from .fgrid import IngestError

LAT_NAMES = ("latitude", "lat")
LON_NAMES = ("longitude", "lon")
TIME_NAMES = ("time", "valid_time")
LEVEL_NAMES = ("level", "pressure_level", "isobaricInhPa", "plev", "lev")

_TIME_UNITS_RE = re.compile(
    r"^(seconds|minutes|hours|days)\s+since\s+(\d{4}-\d{2}-\d{2})"
    r"[ T]?(\d{2}:\d{2}(:\d{2})?(\.\d+)?)?"
)

_TIME_STEP = {"seconds": 1.0, "minutes": 60.0, "hours": 3600.0,
              "days": 86400.0}


@dataclass
class RawField:
    source_name: str
    level: object               # float hPa or "sfc"
    valid_time: datetime
    lats: np.ndarray            # 1-D, source order
    lons: np.ndarray            # 1-D, source order
    values: np.ndarray          # (nlat, nlon), source row order
    units: str                  # source units attribute ("" if absent)


def decode_times(raw, units):
    """CF-style numeric time axis to aware UTC datetimes."""
    m = _TIME_UNITS_RE.match(units.strip())
    if not m:
        raise IngestError(f"unsupported time units {units!r}")
    step, date, clock = m.group(1), m.group(2), m.group(3) or "00:00:00"
    if len(clock) == 5:
        clock += ":00"
    clock = clock.split(".")[0]
    epoch = datetime.strptime(f"{date} {clock}", "%Y-%m-%d %H:%M:%S")
    epoch = epoch.replace(tzinfo=timezone.utc)
    return [epoch + timedelta(seconds=float(v) * _TIME_STEP[step])
            for v in np.asarray(raw).ravel()]


def _attr_str(value):
    if isinstance(value, bytes):
        return value.decode("utf-8", "replace")
    return str(value)


def _pick(names, available):
    for n in names:
        if n in available:
            return n
    return None


def sniff_format(path):
    with open(path, "rb") as fh:
        magic = fh.read(8)
    if magic[:3] == b"CDF":
        return "netcdf3"
    if magic[:4] == b"\x89HDF":
        return "hdf5"
    if magic[:4] == b"GRIB":
        return "grib"
    raise IngestError(f"unrecognised file format: {path}")


def read_fields(path):
    """Yield RawField records from one source file."""
    kind = sniff_format(path)
    if kind == "netcdf3":
        yield from _read_netcdf3(path)
    elif kind == "hdf5":
        yield from _read_hdf5(path)
    else:
        yield from _read_grib(path)


def _iter_slices(name, data, dims, coords, times, units):
    """Split an (time[, level], lat, lon) array into RawField records."""
    lat_dim = _pick(LAT_NAMES, dims)
    lon_dim = _pick(LON_NAMES, dims)
    time_dim = _pick(TIME_NAMES, dims)
    level_dim = _pick(LEVEL_NAMES, dims)
    if lat_dim is None or lon_dim is None:
        return
    expect = [d for d in (time_dim, level_dim, lat_dim, lon_dim)
              if d is not None]
    if list(dims) != expect:
        raise IngestError(
            f"variable {name!r} has dimension order {dims}; expected {expect}"
        )
    data = np.asarray(data)
    if time_dim is None:
        data = data[np.newaxis]
        ts = [None]
    else:
        ts = times
    if level_dim is None:
        data = data[:, np.newaxis]
        levels = ["sfc"]
    else:
        levels = [float(v) for v in np.asarray(coords[level_dim]).ravel()]
    lats = np.asarray(coords[lat_dim], dtype=np.float64)
    lons = np.asarray(coords[lon_dim], dtype=np.float64)
    for i, when in enumerate(ts):
        if when is None:
            raise IngestError(
                f"variable {name!r} has no time axis; a valid_time is required"
            )
        for j, level in enumerate(levels):
            yield RawField(source_name=name, level=level, valid_time=when,
                           lats=lats, lons=lons, values=data[i, j],
                           units=units)


def _apply_packing(values, attrs):
    """CF scale_factor/add_offset/_FillValue decoding."""
    v = np.asarray(values, dtype=np.float64)
    fill = attrs.get("_FillValue", attrs.get("missing_value"))
    if fill is not None:
        v = np.where(np.asarray(values) == np.asarray(fill), np.nan, v)
    scale = attrs.get("scale_factor")
    offset = attrs.get("add_offset")
    if scale is not None or offset is not None:
        v = v * float(scale if scale is not None else 1.0) \
            + float(offset if offset is not None else 0.0)
    return v


def _read_netcdf3(path):
    from scipy.io import netcdf_file
    with netcdf_file(path, "r", mmap=False) as nc:
        coords = {}
        times = None
        for cname in LAT_NAMES + LON_NAMES + LEVEL_NAMES:
            if cname in nc.variables:
                coords[cname] = nc.variables[cname][:].copy()
        tname = _pick(TIME_NAMES, nc.variables)
        if tname is not None:
            tvar = nc.variables[tname]
            times = decode_times(tvar[:], _attr_str(tvar.units))
        for name, var in nc.variables.items():
            if name in coords or name == tname:
                continue
            attrs = {k: getattr(var, k) for k in
                     ("scale_factor", "add_offset", "_FillValue",
                      "missing_value") if hasattr(var, k)}
            units = _attr_str(getattr(var, "units", b""))
            data = _apply_packing(var[:].copy(), attrs)
            yield from _iter_slices(name, data, var.dimensions, coords,
                                    times, units)


def _read_hdf5(path):
    try:
        import h5py
    except ImportError as exc:       # pragma: no cover
        raise IngestError(
            "reading NetCDF4/HDF5 files requires the h5py package"
        ) from exc
    with h5py.File(path, "r") as f:
        coords = {}
        times = None
        names = list(f.keys())
        for cname in LAT_NAMES + LON_NAMES + LEVEL_NAMES:
            if cname in f:
                coords[cname] = f[cname][()]
        tname = _pick(TIME_NAMES, names)
        if tname is not None:
            times = decode_times(f[tname][()],
                                 _attr_str(f[tname].attrs["units"]))
        for name in names:
            ds = f[name]
            if name in coords or name == tname or ds.ndim < 2:
                continue
            dims = tuple(
                _attr_str(dim.label) or (dim[0].name.split("/")[-1]
                                         if len(dim) else "")
                for dim in ds.dims
            )
            attrs = {k: ds.attrs[k] for k in
                     ("scale_factor", "add_offset", "_FillValue",
                      "missing_value") if k in ds.attrs}
            units = _attr_str(ds.attrs.get("units", ""))
            data = _apply_packing(ds[()], attrs)
            yield from _iter_slices(name, data, dims, coords, times, units)


def _read_grib(path):
    try:
        import cfgrib  # noqa: F401
    except ImportError as exc:
        raise IngestError(
            "GRIB input requires the optional cfgrib package, which is not "
            "installed; convert the file to NetCDF or install cfgrib"
        ) from exc
    import cfgrib
    for msgs in cfgrib.open_datasets(path):
        for name, da in msgs.data_vars.items():
            dims = tuple(da.dims)
            coords = {d: msgs.coords[d].values for d in dims
                      if d in msgs.coords}
            tname = _pick(TIME_NAMES, dims)
            times = None
            if tname is not None:
                times = [datetime.fromtimestamp(
                    t.astype("datetime64[s]").astype(int), tz=timezone.utc)
                    for t in np.atleast_1d(msgs.coords[tname].values)]
            units = str(da.attrs.get("units", ""))
            yield from _iter_slices(name, da.values, dims, coords, times,
                                    units)
