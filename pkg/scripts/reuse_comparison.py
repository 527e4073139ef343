"""Fresh join-sampler draws of the online sampler with and without walk reuse.

    python scripts/reuse_comparison.py --seeds 5 --out results/reuse.csv
"""

import argparse
import random
import time

from _common import pick
from joinunion.bench import write_rows
from joinunion.oracle import oracle
from joinunion.sampler import JoinSampler
from joinunion.union import sample_online_union
from joinunion.verify import chi_square_uniform


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--workloads")
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--phi", type=int, default=500)
    ap.add_argument("--gamma", type=float, default=0.9)
    ap.add_argument("--out", default="results/reuse.csv")
    args = ap.parse_args()
    rows = []
    for name, specs in pick(args.workloads).items():
        o = oracle(specs)
        n = 100 * o.union_size
        for seed in range(args.seeds):
            for reuse in (True, False):
                t0 = time.perf_counter()
                rep = sample_online_union([JoinSampler(s) for s in specs], n, args.phi, args.gamma,
                                          random.Random(seed), reuse=reuse)
                c = rep.counters
                rows.append({"workload": name, "seed": seed, "reuse": reuse, "n": n, "fresh": c["fresh"],
                             "reused": c["reused"], "walks": c["walks"], "backtracks": c["backtracks"],
                             "p_value": chi_square_uniform(rep.rows, o.union).p_value,
                             "seconds": time.perf_counter() - t0})
            on, off = rows[-2], rows[-1]
            print(f"{name:8s} seed {seed}: fresh {on['fresh']} with reuse vs {off['fresh']} without")
    write_rows(args.out, rows)


if __name__ == "__main__":
    main()
