"""Command-line interface.

Commands: analyze, region, simulate, allocate.
Exit codes: 0 success, 1 input error, 2 infeasibility (empty region or
infeasible allocation).
"""
from __future__ import annotations

import argparse
import sys

from .config import ConfigError, load_config
from .csvio import fmt
from .model import CombinatorialOverflow, StepTooLarge
from .pipeline import (StageFailure, cmd_allocate_run, cmd_analyze_run,
                       cmd_region_run, cmd_simulate_run)


def _common(parser):
    parser.add_argument("--config", required=True, help="JSON config path")
    parser.add_argument("--out", default=None,
                        help="output directory (default from config)")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads for region scans")


def build_parser():
    p = argparse.ArgumentParser(
        prog="dvppres",
        description="Robust DVPP virtual-inertia/damping sizing and "
                    "power-reserve planning")
    sub = p.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="full pipeline: worst case, region, "
                                        "selection, allocation, reserves")
    _common(pa)
    pa.add_argument("--resolution", type=int, default=None)

    pr = sub.add_parser("region", help="rasterize the feasible region")
    _common(pr)
    pr.add_argument("--resolution", type=int, default=None)

    ps = sub.add_parser("simulate", help="time-domain oracle trace")
    _common(ps)
    ps.add_argument("--scenario", default="worst",
                    help="worst | <enumeration index> | none")
    ps.add_argument("--dt", type=float, default=None,
                    help="integration step [s], default t_sg/100")

    pl = sub.add_parser("allocate", help="selection + allocation + reserves")
    _common(pl)
    pl.add_argument("--resolution", type=int, default=None)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print("input error: %s" % exc, file=sys.stderr)
        return 1
    out_dir = args.out if args.out is not None else cfg.output.directory

    try:
        if args.command == "analyze":
            manifest, sel, alloc = cmd_analyze_run(
                cfg, out_dir, args.resolution, args.threads)
            rp = alloc.reserve_pair
            print("selected: h_re=%s d_re=%s" % (fmt(sel.h_re), fmt(sel.d_re)))
            print("allocation cost: %s" % fmt(alloc.cost))
            print("reserves: r_up=%s r_down=%s (|r_down|=%s)"
                  % (fmt(rp.r_up), fmt(rp.r_down), fmt(abs(rp.r_down))))
        elif args.command == "region":
            manifest, region = cmd_region_run(
                cfg, out_dir, args.resolution, args.threads)
            print("feasible cells: %d / %d"
                  % (int(region.feasible.sum()), region.feasible.size))
        elif args.command == "simulate":
            manifest, trace = cmd_simulate_run(
                cfg, out_dir, args.scenario, args.dt)
            f = cfg.grid.f_base
            print("trace max |delta_f|: %s Hz"
                  % fmt(float(abs(trace.delta_f).max() * f)))
        elif args.command == "allocate":
            manifest, alloc = cmd_allocate_run(
                cfg, out_dir, args.resolution, args.threads)
            rp = alloc.reserve_pair
            print("allocation cost: %s" % fmt(alloc.cost))
            print("reserves: r_up=%s |r_down|=%s"
                  % (fmt(rp.r_up), fmt(abs(rp.r_down))))
        else:  # pragma: no cover
            return 1
    except StageFailure as exc:
        print("error in stage %s: %s" % (exc.stage, exc), file=sys.stderr)
        return exc.exit_code
    except (CombinatorialOverflow, StepTooLarge, ValueError) as exc:
        print("input error: %s" % exc, file=sys.stderr)
        return 1
    print("outputs written to %s" % out_dir)
    return 0


if __name__ == "__main__":
    sys.exit(main())
