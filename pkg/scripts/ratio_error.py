"""Relative error of estimated |J_j| / |U| against the oracle, per estimator.

    python scripts/ratio_error.py --seeds 5 --out results/ratio_error.csv
"""

import argparse
import random

from _common import pick
from joinunion.bench import estimate, write_rows
from joinunion.oracle import oracle
from joinunion.sampler import JoinSampler
from joinunion.verify import ratio_table


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--workloads")
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--weight-mode", default="exact", choices=("exact", "olken"))
    ap.add_argument("--out", default="results/ratio_error.csv")
    args = ap.parse_args()
    rows = []
    for name, specs in pick(args.workloads).items():
        o = oracle(specs)
        samplers = [JoinSampler(s, args.weight_mode) for s in specs]
        for est in ("histogram", "walk"):
            for seed in range(args.seeds if est == "walk" else 1):
                p = estimate(samplers, est, random.Random(seed))
                for r in ratio_table(p.sizes, o.sizes, p.union_size, o.union_size):
                    rows.append({"workload": name, "estimator": est, "seed": seed, "union_estimate": p.union_size,
                                 "union_exact": o.union_size, **r})
                worst = max(r["relative_error"] for r in rows[-len(specs):])
                print(f"{name:8s} {est:9s} seed {seed}: |U| {p.union_size:.1f} vs {o.union_size}, "
                      f"worst ratio error {worst:.2%}")
    write_rows(args.out, rows)


if __name__ == "__main__":
    main()
