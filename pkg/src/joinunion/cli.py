"""Command line: gen, sample, oracle, verify, bench.

Exit codes: 0 success or verification pass, 1 verification failure,
2 configuration or input error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .bench import BENCH_FIELDS, bench, run_sampler, sweep, warmup_vs_full, write_rows, write_sample
from .errors import CapacityError, ConfigError, JoinUnionError, MembershipError
from .gen import PRESETS, SHAPES, GenSpec, build, build_preset, write_workload
from .oracle import oracle
from .relation import parse_scalar
from .verify import verify
from .workload import ESTIMATORS, MODES, SamplerConfig, WorkloadConfig, build_specs, load_workload

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _sampler_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--workload", required=True, help="workload JSON file")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--n", type=int, help="sample size")
    p.add_argument("--seed", type=int)
    p.add_argument("--phi", type=int, help="walks between backtracks (online mode)")
    p.add_argument("--gamma", type=float, help="confidence target for refinement (online mode)")
    p.add_argument("--weight-mode", choices=("exact", "olken"))
    p.add_argument("--estimator", choices=ESTIMATORS)
    p.add_argument("--no-reuse", action="store_true", help="disable walk reuse (online mode)")
    p.add_argument("--distinct", action="store_true", help="deduplicate the final sample")
    p.add_argument("--out", default=".", help="output directory")


def _config(args) -> WorkloadConfig:
    cfg = load_workload(args.workload)
    over = {k: v for k, v in {"mode": args.mode, "n": args.n, "seed": args.seed, "phi": args.phi,
                              "gamma": args.gamma, "weight_mode": args.weight_mode,
                              "estimator": args.estimator}.items() if v is not None}
    if getattr(args, "no_reuse", False):
        over["reuse"] = False
    cfg.sampler = replace(cfg.sampler, **over)
    cfg.sampler.validate()
    return cfg


def _sample(cfg, specs, distinct: bool, out: Path):
    rep, params = run_sampler(specs, cfg.sampler)
    if distinct:
        rep = rep.distinct()
    out.mkdir(parents=True, exist_ok=True)
    write_sample(out / "sample.csv", rep)
    stats = {"config": cfg.sampler.__dict__, "counters": rep.counters, "parameters": rep.trace,
             "rows": len(rep.rows), "distinct": distinct}
    (out / "stats.json").write_text(json.dumps(stats, indent=2, sort_keys=True) + "\n")
    (out / "timing.json").write_text(json.dumps(rep.timing, indent=2, sort_keys=True) + "\n")
    return rep, params


def cmd_gen(args) -> int:
    if args.preset:
        rels, joins = build_preset(args.preset, args.scale, args.seed, args.overlap, args.skew)
    else:
        shape = tuple(args.shape.split(",")) if "," in args.shape else args.shape
        spec = GenSpec(args.scale, args.overlap, args.skew, args.joins, shape, args.attributes)
        rels, joins = build(spec, args.seed)
    write_workload(rels, joins, args.out, SamplerConfig(seed=args.seed))
    print(f"wrote {len(rels)} relations and {len(joins)} joins to {Path(args.out) / 'workload.json'}")
    return EXIT_OK


def cmd_sample(args) -> int:
    cfg = _config(args)
    specs = build_specs(cfg)
    rep, _ = _sample(cfg, specs, args.distinct, Path(args.out))
    print(f"sampled {len(rep.rows)} rows into {Path(args.out) / 'sample.csv'}")
    return EXIT_OK


def _oracle_dict(o) -> dict:
    return {
        "sizes": o.sizes,
        "union_size": o.union_size,
        "overlaps": {"&".join(sorted(d)): v for d, v in sorted(o.overlaps.items(), key=lambda kv: (len(kv[0]), sorted(kv[0])))},
        "k_overlap": {j: {str(k): v for k, v in row.items()} for j, row in o.table.items()},
        "cover_order": list(o.ordering),
        "cover_sizes": o.cover,
    }


def cmd_oracle(args) -> int:
    cfg = load_workload(args.workload)
    specs = build_specs(cfg)
    o = oracle(specs, row_cap=cfg.oracle.row_cap)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "oracle.json").write_text(json.dumps(_oracle_dict(o), indent=2) + "\n")
    print(f"|U| = {o.union_size}; sizes {o.sizes}")
    return EXIT_OK


def _read_sample(path) -> list:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        next(r, None)
        return [tuple(parse_scalar(x) for x in row) for row in r]


def cmd_verify(args) -> int:
    cfg = _config(args)
    if not cfg.oracle.enabled:
        raise ConfigError("verification needs the oracle enabled in the workload")
    specs = build_specs(cfg)
    out = Path(args.out)
    params = None
    if args.sample:
        rows = _read_sample(args.sample)
    else:
        rep, params = _sample(cfg, specs, args.distinct, out)
        rows = rep.rows
    o = oracle(specs, row_cap=cfg.oracle.row_cap)
    kwargs = {}
    if params is not None:
        kwargs = {"estimated_sizes": params.sizes, "estimated_union": params.union_size, "exact_sizes": o.sizes}
    try:
        v = verify(rows, o.union, args.alpha, **kwargs)
    except MembershipError as exc:
        print(f"FAIL: {exc}")
        return EXIT_FAIL
    out.mkdir(parents=True, exist_ok=True)
    (out / "verdict.json").write_text(json.dumps(v.to_dict(), indent=2) + "\n")
    c = v.chi_square
    print(f"{'PASS' if v.passed else 'FAIL'}: chi-square {c.statistic:.2f} on {c.dof} dof, p = {c.p_value:.4f}")
    return EXIT_OK if v.passed else EXIT_FAIL


def cmd_bench(args) -> int:
    cfg = _config(args)
    specs = build_specs(cfg)
    name = Path(args.workload).parent.name or "workload"
    modes = args.modes.split(",") if args.modes else [cfg.sampler.mode]
    ns = [int(x) for x in args.sizes.split(",")] if args.sizes else [cfg.sampler.n]
    seeds = range(cfg.sampler.seed, cfg.sampler.seed + args.seeds)
    reuse = (True, False) if args.compare_reuse else (cfg.sampler.reuse,)
    rows = bench(specs, name, sweep(cfg.sampler, modes, ns, seeds, reuse))
    out = Path(args.out)
    write_rows(out / "bench.csv", rows, BENCH_FIELDS)
    if args.warmup:
        t = warmup_vs_full(specs)
        write_rows(out / "warmup.csv", [dict(workload=name, **t)])
        print(f"warm-up {t['warmup_s']:.3f}s vs full join {t['full_join_s']:.3f}s ({t['speedup']:.1f}x)")
    print(f"wrote {len(rows)} rows to {out / 'bench.csv'}")
    return EXIT_OK


def parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="joinunion", description="Uniform sampling over unions of joins.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic workload")
    g.add_argument("--preset", choices=PRESETS)
    g.add_argument("--scale", type=int, default=100, help="tuples per join variant")
    g.add_argument("--overlap", type=float, default=0.5, help="share of common base data in [0, 1]")
    g.add_argument("--skew", type=float, default=0.0, help="Zipf exponent of key values")
    g.add_argument("--joins", type=int, default=3)
    g.add_argument("--shape", default="chain", help=f"one of {SHAPES}, or a comma list per join")
    g.add_argument("--attributes", type=int, default=6)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("sample", help="draw a sample from the union")
    _sampler_flags(s)
    s.set_defaults(func=cmd_sample)

    o = sub.add_parser("oracle", help="exact union statistics by full joins")
    o.add_argument("--workload", required=True)
    o.add_argument("--out", default=".")
    o.set_defaults(func=cmd_oracle)

    v = sub.add_parser("verify", help="sample and test uniformity against the oracle")
    _sampler_flags(v)
    v.add_argument("--sample", help="verify an existing sample CSV instead of sampling")
    v.add_argument("--alpha", type=float, default=0.01)
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("bench", help="time sampler runs and emit CSV rows")
    _sampler_flags(b)
    b.add_argument("--modes", help="comma list of modes")
    b.add_argument("--sizes", help="comma list of sample sizes")
    b.add_argument("--seeds", type=int, default=1)
    b.add_argument("--compare-reuse", action="store_true")
    b.add_argument("--warmup", action="store_true", help="also time histogram warm-up against the full join")
    b.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, CapacityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except JoinUnionError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
