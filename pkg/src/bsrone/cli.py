"""Command-line harness: ``bsrone <experiment> [flags]``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from typing import List, Optional

from .experiments import (
    EXPERIMENTS,
    SimConfig,
    default_config,
    replay,
    run_stability,
    RUNNERS,
    write_outputs,
)
from .selection import AttributeVector, rank, score

log = logging.getLogger("bsrone")


def _power_of_two(text: str) -> int:
    v = int(text)
    if v < 1 or v & (v - 1):
        raise argparse.ArgumentTypeError(f"{text} is not a power of two")
    return v


def _resolve(args: argparse.Namespace) -> SimConfig:
    cfg = default_config(args.command)
    if args.config:
        with open(args.config) as fh:
            cfg = SimConfig.from_ini(fh.read(), base=cfg)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.steps is not None:
        if args.command == "stability":
            changes["cohorts"] = args.steps
        else:
            changes["steps"] = args.steps
    if args.cluster_size is not None:
        exp = args.cluster_size.bit_length() - 1
        if args.command in ("join-overhead", "leave-overhead", "fault"):
            changes["cluster_sizes"] = (args.cluster_size,)
        changes["cluster_exp"] = exp
    if args.section_size is not None:
        changes["section_exp"] = args.section_size.bit_length() - 1
    return cfg.replace(**changes)


def _experiment(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    if args.print_config:
        sys.stdout.write(cfg.to_ini())
        return 0
    if args.command == "stability":
        m = run_stability(cfg, trace=args.trace)
    else:
        m = RUNNERS[args.command](cfg)
    for note in m.notes:
        log.warning("%s", note)
    if args.out:
        for path in write_outputs(m, args.out, csv_out=args.csv or not args.json, json_out=args.json):
            log.info("wrote %s", path)
    else:
        if args.json and not args.csv:
            json.dump(m.summary(), sys.stdout, indent=2, sort_keys=True, default=list)
            sys.stdout.write("\n")
        else:
            sys.stdout.write(m.to_csv())
    return 0


def _topsis(args: argparse.Namespace) -> int:
    cfg = default_config("join-overhead")
    if args.config:
        with open(args.config) as fh:
            cfg = SimConfig.from_ini(fh.read(), base=cfg)
    if args.print_config:
        sys.stdout.write(cfg.to_ini())
        return 0
    if not args.candidates:
        raise SystemExit("topsis needs a candidate file")
    ids: List[str] = []
    cands: List[AttributeVector] = []
    with open(args.candidates, newline="") as fh:
        for i, row in enumerate(csv.DictReader(fh)):
            ids.append(row.get("id") or str(i))
            cands.append(AttributeVector(float(row["bandwidth"]), float(row["time_on_network"]),
                                         int(row["id_exchanges"]), int(row["willingness"])))
    C = score(cands, cfg.criteria_weights(), cfg.criteria_bounds(), cfg.weighted)
    order = rank(C)
    if args.json:
        json.dump([{"id": ids[i], "closeness": float(C[i]), "rank": r + 1}
                   for r, i in enumerate(order)], sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["rank", "id", "closeness"])
        for r, i in enumerate(order):
            w.writerow([r + 1, ids[i], repr(float(C[i]))])
    return 0


def _replay(args: argparse.Namespace) -> int:
    with open(args.trace_file) as fh:
        report = replay(fh)
    print(f"replayed {report.events} events, {len(report.mismatches)} mismatches")
    for i, want, got in report.mismatches[:10]:
        print(f"  event {i}: recorded {want} replayed {got}")
    return 0 if report.ok else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="run seed (non-negative integer)")
    common.add_argument("--config", help="INI file with a [sim] section")
    common.add_argument("--out", help="directory for output files")
    common.add_argument("--csv", action="store_true", help="write CSV (default)")
    common.add_argument("--json", action="store_true", help="write a JSON summary")
    common.add_argument("--cluster-size", type=_power_of_two)
    common.add_argument("--section-size", type=_power_of_two)
    common.add_argument("--steps", type=int, help="steps (cohorts for stability)")
    common.add_argument("--print-config", action="store_true",
                        help="print the resolved config and exit")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="bsrone", description="Cluster overlay simulator")
    sub = p.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        sp = sub.add_parser(name, parents=[common])
        if name == "stability":
            sp.add_argument("--trace", action="store_true",
                            help="also write a JSON-lines event trace (needs --out)")
        sp.set_defaults(func=_experiment, trace=False)
    tp = sub.add_parser("topsis", parents=[common], help="rank candidates from a CSV file")
    tp.add_argument("candidates", nargs="?",
                    help="CSV with bandwidth,time_on_network,id_exchanges,willingness[,id]")
    tp.set_defaults(func=_topsis)
    rp = sub.add_parser("replay", help="re-run an event trace and compare signals")
    rp.add_argument("trace_file")
    rp.add_argument("-v", "--verbose", action="store_true")
    rp.set_defaults(func=_replay)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
