"""Command-line interface: build, query, verify, tradeoff, bench."""

from __future__ import annotations

import argparse
import csv
import json
import os
import random
import statistics
import sys
import time
from typing import Sequence

from .core import NEG_INF, BudgetError, BuildError, IntegrityError, ParameterError
from .ingest import read_keys
from .oracle import KeySet, exhaustive_equiv, sample_queries, sampled_equiv, EXHAUSTIVE_MAX_BITS
from .strategy import BUDGET_C, BuildConfig, build
from .structfile import load, save
from .tradeoff import CSV_HEADER, TradeoffParams, csv_row, sweep

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_MISMATCH = 3
EXIT_INTEGRITY = 4


def _resolve_seed(flag: int | None) -> int:
    if flag is not None:
        return flag
    env = os.environ.get("PRED_SEED")
    if env is None:
        return 0
    try:
        return int(env, 0)
    except ValueError:
        raise ParameterError(f"PRED_SEED is not an integer: {env!r}") from None


def _int(text: str) -> int:
    return int(text, 0)


def _load_keyset(path: str, fmt: str, key_bits: int) -> KeySet:
    return KeySet(read_keys(path, fmt, key_bits), key_bits)


def cmd_build(args) -> int:
    seed = _resolve_seed(args.seed)
    Y = _load_keyset(args.keys, args.format, args.key_bits)
    cfg = BuildConfig(len(Y), args.key_bits, args.word_bits, args.space)
    t0 = time.perf_counter()
    s = build(Y, cfg, seed=seed, branch=args.branch)
    secs = time.perf_counter() - t0
    save(s, args.out)
    print(f"n={cfg.n} a_raw={cfg.a_raw} a={cfg.a} branch={s.branch} ({s.family}) "
          f"bits_used={s.bits_used} budget={cfg.budget_bits} (C={BUDGET_C}) "
          f"seed={seed} build_seconds={secs:.3f}")
    return EXIT_OK


def _format_answer(ans, hex_out: bool) -> str:
    if ans is NEG_INF:
        return "-inf"
    return hex(ans) if hex_out else str(ans)


def cmd_query(args) -> int:
    s = load(args.structure)
    x = _int(args.x)
    ans, stats = s.query(x)
    line = _format_answer(ans, args.x.strip().lower().startswith("0x"))
    if args.stats:
        line += f" probes={stats.probes} depth={stats.depth}"
    print(line)
    return EXIT_OK


def cmd_verify(args) -> int:
    s = load(args.structure)
    Y = _load_keyset(args.keys, args.format, s.cfg.key_bits)
    if len(Y) != s.cfg.n:
        print(f"key file has {len(Y)} keys but the structure was built from {s.cfg.n}")
        return EXIT_MISMATCH
    if args.exhaustive:
        if s.cfg.key_bits > EXHAUSTIVE_MAX_BITS:
            raise ParameterError(f"--exhaustive needs key_bits <= {EXHAUSTIVE_MAX_BITS}; use --samples")
        report = exhaustive_equiv(s, Y)
    else:
        report = sampled_equiv(s, Y, args.samples, _resolve_seed(args.seed))
    bound = s.predicted_depth()
    print(f"{len(report.mismatches)} mismatches over {report.queries} queries")
    print(f"max probes={report.max_probes} max depth={report.max_depth} predicted depth bound={bound}")
    depth_ok = report.max_depth <= bound
    print("depth OK" if depth_ok else "depth EXCEEDED")
    if report.mismatches:
        for x, want, got in report.mismatches[:20]:
            print(f"  x={x} expected={want} got={got}")
        return EXIT_MISMATCH
    return EXIT_OK if depth_ok else EXIT_MISMATCH


def _parse_sweep(text: str) -> tuple[str, list[int]]:
    """PARAM=lo:hi:step, inclusive; a step written xK multiplies instead of adding."""
    try:
        name, rng = text.split("=", 1)
        lo, hi, step = rng.split(":")
        lo_i, hi_i = _int(lo), _int(hi)
        if step.startswith("x"):
            factor = _int(step[1:])
            if factor < 2 or lo_i < 1:
                raise ValueError
            values = []
            v = lo_i
            while v <= hi_i:
                values.append(v)
                v *= factor
        else:
            inc = _int(step)
            if inc < 1:
                raise ValueError
            values = list(range(lo_i, hi_i + 1, inc))
    except ValueError:
        raise ParameterError(f"bad sweep {text!r}; expected PARAM=lo:hi:step") from None
    if not values:
        raise ParameterError(f"sweep {text!r} is empty")
    return name.strip(), values


def cmd_tradeoff(args) -> int:
    base = TradeoffParams(args.n, args.key_bits, args.word_bits, args.space)
    points = [base]
    if args.sweep:
        name, values = _parse_sweep(args.sweep)
        points = sweep(base, name, values)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for p in points:
        writer.writerow(csv_row(p))
    return EXIT_OK


def _percentile(values: Sequence[float], pct: float) -> float:
    ordered = sorted(values)
    idx = min(len(ordered) - 1, max(0, int(round(pct / 100 * len(ordered) + 0.5)) - 1))
    return ordered[idx]


def bench_rows(Y: KeySet, cfg: BuildConfig, branches: list[int], queries: int, seed: int) -> list[dict]:
    xs = sample_queries(Y, queries, seed)
    rows = []
    for b in branches:
        s = build(Y, cfg, seed=seed, branch=b, enforce_budget=False)
        probes, times = [], []
        clock = time.perf_counter
        for x in xs:
            t0 = clock()
            _, stats = s.query(x)
            times.append(clock() - t0)
            probes.append(stats.probes)
        rows.append({
            "branch": b, "family": s.family,
            "median_probes": statistics.median(probes), "p99_probes": _percentile(probes, 99),
            "median_us": statistics.median(times) * 1e6, "p99_us": _percentile(times, 99) * 1e6,
            "bits_used": s.bits_used,
        })
    return rows


def cmd_bench(args) -> int:
    seed = _resolve_seed(args.seed)
    Y = _load_keyset(args.keys, args.format, args.key_bits)
    space = args.space if args.space is not None else 4 * max(len(Y), 1)
    cfg = BuildConfig(len(Y), args.key_bits, args.word_bits, space)
    try:
        branches = [int(b) for b in args.branches.split(",") if b.strip()]
    except ValueError:
        raise ParameterError(f"bad branch list {args.branches!r}") from None
    rows = bench_rows(Y, cfg, branches, args.queries, seed)
    cols = ["branch", "family", "median_probes", "p99_probes", "median_us", "p99_us", "bits_used"]
    if args.csv:
        writer = csv.DictWriter(sys.stdout, fieldnames=cols, lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: _cell(r[k]) for k in cols})
        return EXIT_OK
    table = [cols] + [[_cell(r[k]) for k in cols] for r in rows]
    widths = [max(len(row[i]) for row in table) for i in range(len(cols))]
    for row in table:
        print("  ".join(cell.rjust(width) for cell, width in zip(row, widths)))
    return EXIT_OK


def _cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.2f}"
    return str(v)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="predsearch", description="Static predecessor search structures.")
    sub = parser.add_subparsers(dest="command", required=True)

    def key_args(p, required_bits=True):
        p.add_argument("--keys", required=True, help="key file")
        p.add_argument("--format", default="text", help="text (default) or raw:BYTES")
        if required_bits:
            p.add_argument("--key-bits", type=int, required=True)

    p = sub.add_parser("build", help="build a structure and write it to a file")
    key_args(p)
    p.add_argument("--word-bits", type=int, required=True)
    p.add_argument("--space", type=int, required=True, help="space budget S in words")
    p.add_argument("--branch", type=int, choices=(1, 2, 3, 4))
    p.add_argument("--seed", type=_int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("query", help="answer one predecessor query")
    p.add_argument("--structure", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--stats", action="store_true")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("verify", help="compare a structure against binary search")
    p.add_argument("--structure", required=True)
    key_args(p, required_bits=False)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--exhaustive", action="store_true")
    mode.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=_int)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("tradeoff", help="evaluate the optimal search-time formula as CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--key-bits", type=int, required=True)
    p.add_argument("--word-bits", type=int, required=True)
    p.add_argument("--space", type=int, required=True)
    p.add_argument("--sweep", help="PARAM=lo:hi:step (step xK multiplies)")
    p.set_defaults(func=cmd_tradeoff)

    p = sub.add_parser("bench", help="probe counts and wall time per branch")
    key_args(p)
    p.add_argument("--word-bits", type=int, default=64)
    p.add_argument("--space", type=int, help="space budget S in words (default 4n)")
    p.add_argument("--queries", type=int, default=10_000)
    p.add_argument("--seed", type=_int)
    p.add_argument("--branches", default="1,2,3,4")
    p.add_argument("--csv", action="store_true")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except IntegrityError as exc:
        print(f"integrity error: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY
    except BudgetError as exc:
        print(f"build error: {exc}", file=sys.stderr)
        print("audit: " + json.dumps(exc.audit, sort_keys=True, default=str), file=sys.stderr)
        return EXIT_VALIDATION
    except (ParameterError, BuildError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
