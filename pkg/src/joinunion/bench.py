"""Running a configured sampler end to end, and timing runs as CSV rows."""

from __future__ import annotations

import csv
import time
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from .oracle import oracle as run_oracle
from .params import Parameters, from_overlaps, histogram_parameters, walk_parameters
from .sampler import JoinSampler, WeightMode, as_rng
from .union import (
    SampleReport,
    sample_disjoint_union,
    sample_online_union,
    sample_set_union,
    sample_set_union_bernoulli,
)
from .workload import SamplerConfig

BENCH_FIELDS = ("workload", "mode", "estimator", "weight_mode", "reuse", "n", "seed", "warmup_s", "accept_s",
                "reject_s", "total_s", "accepted", "draws", "draws_per_sample", "fresh", "reused", "walks",
                "backtracks", "revisions", "rejected_duplicate", "union_estimate")


def make_samplers(specs: Sequence, weight_mode: str = "exact") -> list:
    return [JoinSampler(s, weight_mode) for s in specs]


def estimate(samplers: Sequence[JoinSampler], estimator: str, rng) -> Parameters:
    """Union parameters by histogram bounds, random walks, or exact enumeration."""
    if estimator == "histogram":
        return histogram_parameters(samplers)
    if estimator == "walk":
        exact = all(s.weights.mode is WeightMode.EXACT for s in samplers)
        return walk_parameters(samplers, rng, exact_sizes=exact)
    if estimator == "exact":
        t0 = time.perf_counter()
        o = run_oracle([s.spec for s in samplers])
        p = from_overlaps(o.ids, o.overlaps, "exact")
        p.timing["estimate"] = time.perf_counter() - t0
        return p
    raise ValueError(f"unknown estimator {estimator!r}")


def run_sampler(specs: Sequence, cfg: SamplerConfig, samplers: Sequence[JoinSampler] | None = None) -> tuple:
    """Sample per ``cfg``; returns the report and the parameters used to start."""
    rng = as_rng(cfg.seed)
    samplers = list(samplers) if samplers is not None else make_samplers(specs, cfg.weight_mode)
    t0 = time.perf_counter()
    if cfg.mode == "disjoint":
        sizes = {s.id: s.size_estimate() for s in samplers}
        warm = time.perf_counter() - t0
        rep = sample_disjoint_union(samplers, cfg.n, rng, sizes)
        rep.timing["warmup"] = warm
        return rep, None
    if cfg.mode == "online":
        src = cfg.parameter_source
        initial = None if src == "histogram" else estimate(samplers, src, rng)
        rep = sample_online_union(samplers, cfg.n, cfg.phi, cfg.gamma, rng, initial=initial, reuse=cfg.reuse)
        if initial is not None:
            rep.timing["warmup"] += time.perf_counter() - t0
        return rep, initial
    params = estimate(samplers, cfg.parameter_source, rng)
    warm = time.perf_counter() - t0
    if cfg.mode == "bernoulli":
        rep = sample_set_union_bernoulli(samplers, cfg.n, rng, params.sizes, params.union_size, params.cover.ordering)
    else:
        rep = sample_set_union(samplers, cfg.n, rng, params)
    rep.timing["warmup"] = warm
    rep.trace.insert(0, params.summary())
    return rep, params


def write_sample(path, report: SampleReport) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(report.schema)
        w.writerows(report.rows)


def bench_row(name: str, cfg: SamplerConfig, report: SampleReport, total: float) -> dict:
    c = report.counters
    union = report.trace[-1]["union_size"] if report.trace else ""
    return {
        "workload": name, "mode": cfg.mode, "estimator": cfg.parameter_source, "weight_mode": cfg.weight_mode,
        "reuse": cfg.reuse, "n": cfg.n, "seed": cfg.seed,
        "warmup_s": report.timing["warmup"], "accept_s": report.timing["accept"],
        "reject_s": report.timing["reject"], "total_s": total, "accepted": c["accepted"],
        "draws": c["draws"], "draws_per_sample": c["draws"] / max(c["accepted"], 1),
        "fresh": c["fresh"], "reused": c["reused"], "walks": c["walks"], "backtracks": c["backtracks"],
        "revisions": c["revisions"], "rejected_duplicate": c["rejected_duplicate"], "union_estimate": union,
    }


def bench(specs: Sequence, name: str, configs: Sequence[SamplerConfig]) -> list:
    """One CSV row per sampler configuration."""
    rows = []
    for cfg in configs:
        t0 = time.perf_counter()
        rep, _ = run_sampler(specs, cfg)
        rows.append(bench_row(name, cfg, rep, time.perf_counter() - t0))
    return rows


def sweep(base: SamplerConfig, modes: Sequence[str], ns: Sequence[int], seeds: Sequence[int],
          reuse: Sequence[bool] = (True,)) -> list:
    return [replace(base, mode=m, n=n, seed=s, reuse=r) for m in modes for n in ns for s in seeds
            for r in (reuse if m == "online" else (base.reuse,))]


def warmup_vs_full(specs: Sequence) -> dict:
    """Histogram parameter estimation time against the full-join oracle on the same relations.

    Both start from relations without indexes; the estimate builds its own histograms.
    """
    t0 = time.perf_counter()
    params = histogram_parameters(specs)
    warm = time.perf_counter() - t0
    t0 = time.perf_counter()
    o = run_oracle(specs)
    full = time.perf_counter() - t0
    return {"warmup_s": warm, "full_join_s": full, "speedup": full / warm if warm else float("inf"),
            "union_estimate": params.union_size, "union_exact": o.union_size}


def write_rows(path, rows: Sequence[dict], fields: Sequence[str] | None = None) -> None:
    fields = list(fields or (rows[0].keys() if rows else BENCH_FIELDS))
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        w.writerows(rows)
