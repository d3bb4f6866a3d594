"""Command-line interface: synth / track / balance / report subcommands."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import balance, report, synth, track as track_mod
from .grids import Field, RegionBox, load_dataset, parse_time, write_dataset

log = logging.getLogger("stormdiag")


def _parse_box(text):
    w, e, s, n = (float(x) for x in text.split(","))
    return RegionBox(lon_west=w, lon_east=e, lat_south=s, lat_north=n)


def _grid_from_params(d):
    from .grids import GridSpec
    return GridSpec.from_dict(d)


def cmd_synth(args):
    with open(args.params, encoding="utf-8") as fh:
        params = json.load(fh)
    grid = _grid_from_params(params["grid"])
    fields = []
    if args.case == "gaussian-low":
        vortex = _vortex_from_params(params["vortex"])
        times = params["times"]
        t0 = parse_time(times[0])
        level = params.get("level", 850.0)
        for iso in times:
            t = (parse_time(iso) - t0).total_seconds()
            low = synth.gaussian_low(vortex, grid, t=t, valid_time=iso,
                                     level=level)
            fields += [low.z, low.u, low.v]
            if params.get("with_surface_winds", True):
                fields.append(Field(grid, "u10", "sfc", iso, low.u.values,
                                    "m s-1"))
                fields.append(Field(grid, "v10", "sfc", iso, low.v.values,
                                    "m s-1"))
            if params.get("with_mslp", True):
                m = params.get("mslp", {})
                fields.append(synth.gaussian_mslp(
                    vortex, grid, t=t, valid_time=iso,
                    p0=m.get("p0", 101_325.0), depth=m.get("depth", 4_000.0)))
    elif args.case == "harmonic":
        h = synth.harmonic_field(params["l"], params["m"], grid)
        fields.append(h.field)
    elif args.case == "noisy":
        vortex = _vortex_from_params(params["vortex"])
        low = synth.gaussian_low(vortex, grid,
                                 valid_time=params.get("time",
                                                       "2023-11-01T00:00:00Z"))
        noisy = synth.noisy_field(low.z, params["noise_lmin"],
                                  params["noise_amp"], params["seed"])
        fields += [noisy, low.u, low.v]
    else:
        raise SystemExit(f"unknown synth case {args.case!r}")
    write_dataset(fields, args.out)
    print(f"wrote {len(fields)} fields to {args.out}")
    return 0


def _vortex_from_params(d):
    trans = d.get("translation", {"c_x": 0.0, "c_y": 0.0})
    return synth.VortexSpec(
        center_lat=d["center_lat"], center_lon=d["center_lon"],
        amplitude=d["amplitude"], radius_scale=d["radius_scale"],
        balance=d.get("balance", "gradient"),
        translation=balance.CycloneVelocity(trans["c_x"], trans["c_y"]),
        f_mode=d.get("f_mode", "f-plane"),
    )


def cmd_track(args):
    ds = load_dataset(args.dataset)
    tr = track_mod.track_cyclone(ds, _parse_box(args.first_guess),
                                 args.t0, args.t1,
                                 search_radius_km=args.search_radius_km)
    rep = None
    span_h = (tr.points[-1].valid_time - tr.points[0].valid_time
              ).total_seconds() / 3600.0 if len(tr) > 1 else 0.0
    if span_h >= 24.0:
        rep = track_mod.intensification(tr)
    track_mod.write_track(tr, args.out, rep)
    print(f"wrote track with {len(tr)} points to {args.out}")
    return 0


def cmd_balance(args):
    ds = load_dataset(args.dataset)
    cx, cy = (float(x) for x in args.cyclone_velocity.split(","))
    lmax = args.truncation if args.truncation > 0 else None
    bundle = balance.balance_bundle(
        ds, parse_time(args.time), args.level,
        balance.CycloneVelocity(cx, cy), smoothed=args.smoothed,
        smooth_lmax=lmax)
    bundle.to_dataset(args.out)
    print(f"wrote balance bundle to {args.out}")
    return 0


def cmd_report(args):
    with open(args.config, encoding="utf-8") as fh:
        cfg = json.load(fh)
    os.makedirs(args.out, exist_ok=True)
    datasets, failed = {}, []
    for label, path in cfg["datasets"].items():
        try:
            datasets[label] = load_dataset(path, label=label)
        except Exception as exc:
            log.error("dataset %s failed to load: %s", label, exc)
            failed.append(label)
    times = [parse_time(t) for t in cfg["times"]]

    ref_label = cfg["reference"]
    tr_cfg = cfg["track"]
    ref_track = track_mod.track_cyclone(
        datasets[ref_label], RegionBox(*tr_cfg["first_guess"]),
        tr_cfg["t0"], tr_cfg["t1"])
    rows = report.intercomparison(datasets, ref_track, times)
    report.write_intercomparison_csv(
        rows, os.path.join(args.out, "intercomparison.csv"))

    if "boxes" in cfg:
        boxes = {k: RegionBox(*v) for k, v in cfg["boxes"].items()}
        cv = cfg.get("cyclone_velocity", [0.0, 0.0])
        bundles = {}
        for label, ds in datasets.items():
            try:
                bundles[label] = balance.balance_bundle(
                    ds, times[0], cfg.get("level", 850.0),
                    balance.CycloneVelocity(*cv),
                    smoothed=cfg.get("smoothed", True),
                    smooth_lmax=cfg.get("truncation", 106))
            except Exception as exc:
                log.error("balance bundle for %s failed: %s", label, exc)
                if label not in failed:
                    failed.append(label)
        report.write_peak_table_csv(
            report.peak_table(bundles, boxes),
            os.path.join(args.out, "peak_table.csv"))

    for spec in cfg.get("contours", []):
        ds = datasets[spec["dataset"]]
        f = ds.get(spec["variable"], spec.get("level", "sfc"),
                   parse_time(spec["time"]))
        export = report.contour_export(f, spec["convention"])
        name = f"contours_{spec['variable']}_{spec['convention']}.json"
        report.write_contours_json(export, os.path.join(args.out, name))

    per_source_rows = {r["source"]: [] for r in rows}
    for r in rows:
        per_source_rows[r["source"]].append(r)
    for label, rs in per_source_rows.items():
        if rs and all("error" in r for r in rs):
            if label not in failed:
                failed.append(label)
    if failed:
        log.error("sources failed entirely: %s", ", ".join(sorted(failed)))
        return 1
    return 0


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    p = argparse.ArgumentParser(prog="stormdiag",
                                description="Storm-centric cyclone diagnostics")
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("synth", help="generate synthetic fgrid datasets")
    ps.add_argument("--case", required=True,
                    choices=["gaussian-low", "harmonic", "noisy"])
    ps.add_argument("--params", required=True, help="JSON parameter file")
    ps.add_argument("--out", required=True)
    ps.set_defaults(func=cmd_synth)

    pt = sub.add_parser("track", help="track the MSLP minimum")
    pt.add_argument("--dataset", required=True)
    pt.add_argument("--first-guess", required=True, metavar="W,E,S,N")
    pt.add_argument("--t0", required=True)
    pt.add_argument("--t1", required=True)
    pt.add_argument("--search-radius-km", type=float,
                    default=track_mod.DEFAULT_SEARCH_RADIUS_KM)
    pt.add_argument("--out", required=True)
    pt.set_defaults(func=cmd_track)

    pb = sub.add_parser("balance", help="balance diagnostics for one time/level")
    pb.add_argument("--dataset", required=True)
    pb.add_argument("--time", required=True)
    pb.add_argument("--level", type=float, default=850.0)
    pb.add_argument("--cyclone-velocity", default="0,0", metavar="CX,CY")
    pb.add_argument("--truncation", type=int, default=106,
                    help="triangular truncation degree; <= 0 disables "
                         "spectral smoothing (required on regional patches)")
    pb.add_argument("--smoothed", action="store_true")
    pb.add_argument("--out", required=True)
    pb.set_defaults(func=cmd_balance)

    pr = sub.add_parser("report", help="multi-model comparison tables")
    pr.add_argument("--config", required=True)
    pr.add_argument("--out", required=True)
    pr.set_defaults(func=cmd_report)

    args = p.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
