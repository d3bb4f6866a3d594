"""Standalone converter from archive files (NetCDF, optionally GRIB) to
fgrid datasets.

Deliberately independent of the analysis toolkit: the only shared contract
is the fgrid on-disk format (manifest.json plus raw little-endian binary32
payloads, rows north-to-south)."""

__version__ = "0.1.0"
