"""Chi-square p-values of every union sampler and estimator over seeded workloads.

    python scripts/uniformity_sweep.py --seeds 5 --out results/uniformity.csv
"""

import argparse
import random
import time

from _common import pick
from joinunion.bench import estimate, write_rows
from joinunion.oracle import oracle
from joinunion.sampler import JoinSampler
from joinunion.union import sample_disjoint_union, sample_online_union, sample_set_union, sample_set_union_bernoulli
from joinunion.verify import chi_square_uniform

RUNS = [("disjoint", None), ("bernoulli", "exact"), ("cover", "exact"), ("cover", "walk"),
        ("cover", "histogram"), ("online", "histogram")]


def run(samplers, mode, estimator, n, rng):
    if mode == "disjoint":
        return sample_disjoint_union(samplers, n, rng)
    if mode == "online":
        return sample_online_union(samplers, n, 500, 0.9, rng)
    p = estimate(samplers, estimator, rng)
    if mode == "bernoulli":
        return sample_set_union_bernoulli(samplers, n, rng, p.sizes, p.union_size, p.cover.ordering)
    return sample_set_union(samplers, n, rng, p, check=False)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--workloads", help="comma list; default all")
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--factor", type=int, default=100, help="sample size as a multiple of |U|")
    ap.add_argument("--out", default="results/uniformity.csv")
    args = ap.parse_args()
    rows = []
    for name, specs in pick(args.workloads).items():
        o = oracle(specs)
        n = args.factor * o.union_size
        for mode, est in RUNS:
            for seed in range(args.seeds):
                t0 = time.perf_counter()
                rep = run([JoinSampler(s) for s in specs], mode, est, n, random.Random(seed))
                c = chi_square_uniform(rep.rows, o.union)
                rows.append({"workload": name, "union": o.union_size, "mode": mode, "estimator": est or "",
                             "seed": seed, "n": n, "p_value": c.p_value, "passed": c.passed,
                             "draws": rep.counters["draws"], "seconds": time.perf_counter() - t0})
                print(f"{name:8s} {mode:9s} {est or '-':9s} seed {seed}: p = {c.p_value:.4f}")
    write_rows(args.out, rows)


if __name__ == "__main__":
    main()
