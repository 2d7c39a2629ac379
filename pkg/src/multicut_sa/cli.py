"""Command line entry points.

    bench run --config <file> --out <dir> [--workers k] [--master-seed s]
    bench table --in <dir>
    verify all --out <dir> [--seed s] [--quick]

``python -m multicut_sa bench ...`` and ``python -m multicut_sa verify ...``
are equivalent to the installed ``bench`` and ``verify`` commands.
"""

import argparse
import os
import sys

from . import bench, verify


def _bench_parser():
    p = argparse.ArgumentParser(prog="bench", description="Seeded benchmark grid.")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the grid described by a config file")
    run.add_argument("--config", required=True)
    run.add_argument("--out", required=True)
    run.add_argument("--workers", type=int, default=None)
    run.add_argument("--master-seed", type=int, default=None)
    table = sub.add_parser("table", help="render tables from a previous run")
    table.add_argument("--in", dest="in_dir", required=True)
    return p


def bench_main(argv=None):
    args = _bench_parser().parse_args(argv)
    if args.command == "run":
        try:
            cfg = bench.load_config(args.config)
            if args.master_seed is not None:
                cfg.master_seed = args.master_seed
            if args.workers is not None:
                cfg.workers = args.workers
            cfg.validate()
        except (OSError, bench.ConfigError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        rows = bench.run_bench(cfg)
        outputs = bench.write_outputs(rows, args.out, cfg)
        print(outputs["table.md"])
        failed = [r for r in rows if r.status != "ok"]
        for r in failed:
            print(f"{r.algorithm} {r.instance} N={r.N} seed={r.seed}: {r.status}", file=sys.stderr)
        print(f"{len(rows)} runs, {len(failed)} failed; outputs in {args.out}")
        return 0 if not failed else 1
    rows = bench.read_rows(args.in_dir)
    md, _, agg = bench.render_table(rows)
    with open(os.path.join(args.in_dir, "table.md"), "w") as fh:
        fh.write(md)
    with open(os.path.join(args.in_dir, "summary.csv"), "w") as fh:
        fh.write(agg)
    print(md)
    return 0 if bench.all_ok(rows) else 1


def _verify_parser():
    p = argparse.ArgumentParser(prog="verify", description="Monte Carlo bound checks.")
    sub = p.add_subparsers(dest="command", required=True)
    a = sub.add_parser("all", help="run every check and write a pass/fail table")
    a.add_argument("--out", required=True)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--quick", action="store_true", help="smaller sample sizes")
    return p


def verify_main(argv=None):
    args = _verify_parser().parse_args(argv)
    results = verify.run_all_checks(args.seed, quick=args.quick)
    os.makedirs(args.out, exist_ok=True)
    table = verify.format_checks(results)
    with open(os.path.join(args.out, "checks.md"), "w") as fh:
        fh.write(table)
    with open(os.path.join(args.out, "checks.csv"), "w") as fh:
        fh.write(verify.checks_csv(results))
    print(table)
    return 0 if all(r.passed for r in results) else 1


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv or argv[0] not in ("bench", "verify"):
        print("usage: python -m multicut_sa {bench,verify} ...", file=sys.stderr)
        return 2
    return (bench_main if argv[0] == "bench" else verify_main)(argv[1:])
