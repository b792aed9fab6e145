#!/usr/bin/env python3
"""Ablation experiment: mean gold-span recall per configuration variant on
generated needle-in-a-haystack cases. Writes CSV to stdout or --out."""

import argparse
import sys

from pagecomp.config import CompressionConfig
from pagecomp.haystack import (
    VARIANT_PRESETS,
    ablation_run,
    gen_haystack,
    write_ablation_csv,
)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument(
        "--variants",
        default="full,flash_only,flow_only,anchor_only",
        help=f"comma-separated presets from: {', '.join(sorted(VARIANT_PRESETS))}",
    )
    ap.add_argument("--cases", type=int, default=200)
    ap.add_argument("--length", type=int, default=16384)
    ap.add_argument("--needles", type=int, default=1)
    ap.add_argument("--kind", choices=("single", "multi", "freq"), default="single")
    ap.add_argument("--budget", type=int, default=3000)
    ap.add_argument("--embedding", default="hash:64:0")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    config = CompressionConfig(budget=args.budget, embedding=args.embedding)
    variants = {name: VARIANT_PRESETS[name] for name in args.variants.split(",")}
    cases = [
        gen_haystack(seed=args.seed + i, length=args.length, needles=args.needles, kind=args.kind)
        for i in range(args.cases)
    ]
    rows = ablation_run(config, variants, cases)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            write_ablation_csv(rows, fh)
    else:
        write_ablation_csv(rows, sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
