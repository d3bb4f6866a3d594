"""stormdiag-ingest command-line entry point."""

from __future__ import annotations

import argparse
import logging
import sys

from .convert import convert
from .fgrid import IngestError
from .maps import VariableMap


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    p = argparse.ArgumentParser(
        prog="stormdiag-ingest",
        description="Convert NetCDF (and optionally GRIB) archive files "
                    "into an fgrid dataset directory")
    p.add_argument("--in", dest="inputs", nargs="+", required=True,
                   metavar="FILE", help="source files")
    p.add_argument("--map", dest="var_map", required=True,
                   help="variable-map JSON (source name -> canonical name "
                        "+ affine unit conversion)")
    p.add_argument("--out", required=True, help="output dataset directory")
    args = p.parse_args(argv)

    try:
        vmap = VariableMap.from_json(args.var_map)
        manifest = convert(args.inputs, vmap, args.out)
    except IngestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {manifest}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
