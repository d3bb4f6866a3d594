"""Conversion pipeline: source files -> one fgrid dataset directory.

No interpolation ever happens here: the output grid geometry equals the
source geometry, except that south-to-north sources have their rows
flipped to the fgrid north-to-south convention.
"""

from __future__ import annotations

import logging

import numpy as np

from .fgrid import IngestError, grid_from_axes, write_dataset
from .maps import VariableMap
from .readers import read_fields

log = logging.getLogger(__name__)


def convert(source_files, variable_map: VariableMap, out_dir):
    """Convert mapped variables from source_files into an fgrid dataset.

    Returns the manifest path.  All fields must share one grid; source
    variables without a mapping are skipped (logged), mapped variables
    missing from every file are an error.
    """
    records = []
    ref_grid = None
    seen_sources = set()
    skipped = set()
    for path in source_files:
        for raw in read_fields(str(path)):
            if not variable_map.wants(raw.source_name):
                skipped.add(raw.source_name)
                continue
            mapped = variable_map.lookup(raw.source_name)
            grid, flipped = grid_from_axes(raw.lats, raw.lons)
            if ref_grid is None:
                ref_grid = grid
            elif grid != ref_grid:
                raise IngestError(
                    f"inconsistent grids within one dataset: "
                    f"{raw.source_name} at {raw.valid_time} is on "
                    f"{grid.as_dict()}, expected {ref_grid.as_dict()}"
                )
            values = np.asarray(raw.values)
            if values.shape != (grid.nlat, grid.nlon):
                raise IngestError(
                    f"{raw.source_name}: payload shape {values.shape} does "
                    f"not match axes ({grid.nlat}, {grid.nlon})"
                )
            if flipped:
                values = values[::-1, :]
            values = mapped.apply(values)
            seen_sources.add(raw.source_name)
            records.append((mapped.canonical, raw.level, raw.valid_time,
                            mapped.units, grid, values))
    missing = set(variable_map.variables) - seen_sources
    if missing:
        raise IngestError(
            f"mapped source variables absent from input: {sorted(missing)}"
        )
    if skipped:
        log.info("skipped unmapped source variables: %s", sorted(skipped))
    records.sort(key=lambda r: (r[0], str(r[1]), r[2]))
    return write_dataset(records, out_dir)
