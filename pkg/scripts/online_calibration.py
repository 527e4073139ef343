"""Share of online-sampler runs failing chi-square at 0.01 on small random workloads.

With few draws the walk budget is small, so this measures how parameter noise
shows up in the sample. A calibrated sampler fails about 1% of runs.

    python scripts/online_calibration.py --workloads 20 --runs 5
"""

import argparse
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from helpers import overlapping_chains  # noqa: E402
from joinunion.bench import write_rows  # noqa: E402
from joinunion.oracle import oracle  # noqa: E402
from joinunion.params import from_overlaps  # noqa: E402
from joinunion.sampler import JoinSampler  # noqa: E402
from joinunion.union import sample_online_union, sample_set_union  # noqa: E402
from joinunion.verify import chi_square_uniform  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--workloads", type=int, default=20)
    ap.add_argument("--runs", type=int, default=5)
    ap.add_argument("--retention", default="thin", choices=("thin", "duplicate"))
    ap.add_argument("--out", default="results/online_calibration.csv")
    args = ap.parse_args()
    rows = []
    for w in range(1, args.workloads + 1):
        specs = overlapping_chains(w, n=3)
        o = oracle(specs)
        exact = from_overlaps(o.ids, o.overlaps, "exact")
        for s in range(args.runs):
            n = 100 * o.union_size
            for variant in ("cover-exact", "online-reuse", "online-no-reuse"):
                samplers = [JoinSampler(x) for x in specs]
                rng = random.Random(1000 + s)
                if variant == "cover-exact":
                    rep = sample_set_union(samplers, n, rng, exact)
                else:
                    rep = sample_online_union(samplers, n, 500, 0.9, rng, reuse=variant == "online-reuse",
                                              retention=args.retention)
                p = chi_square_uniform(rep.rows, o.union).p_value
                rows.append({"workload": w, "union": o.union_size, "run": s, "variant": variant, "p_value": p})
    for variant in ("cover-exact", "online-reuse", "online-no-reuse"):
        ps = [r["p_value"] for r in rows if r["variant"] == variant]
        print(f"{variant:16s} {sum(p < 0.01 for p in ps)}/{len(ps)} runs below 0.01")
    write_rows(args.out, rows)


if __name__ == "__main__":
    main()
