"""Histogram warm-up time against the full-join oracle on the five-chain preset.

    python scripts/warmup_timing.py --scales 1000,10000,100000 --out results/warmup.csv
"""

import argparse

from joinunion.bench import warmup_vs_full, write_rows
from joinunion.gen import preset_specs


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--preset", default="uq1")
    ap.add_argument("--scales", default="1000,10000,100000")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results/warmup.csv")
    args = ap.parse_args()
    rows = []
    for scale in (int(x) for x in args.scales.split(",")):
        specs = preset_specs(args.preset, scale, seed=args.seed)
        t = warmup_vs_full(specs)
        rows.append({"preset": args.preset, "scale": scale, **t})
        print(f"scale {scale}: warm-up {t['warmup_s']:.3f}s, full join {t['full_join_s']:.3f}s, "
              f"{t['speedup']:.1f}x; |U| estimate {t['union_estimate']:.0f} vs {t['union_exact']}")
    write_rows(args.out, rows)


if __name__ == "__main__":
    main()
