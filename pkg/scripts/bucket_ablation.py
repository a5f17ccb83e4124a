#!/usr/bin/env python3
"""Bucket-size ablation: how few documents per month still locate the cutoff.

Scores a large synthetic corpus once, then re-aggregates the relative curve
from per-month subsamples of decreasing size and reports whether each size
keeps the full-series argmin.
"""

import argparse

from cutoffprobe import (
    DriftSpec,
    DumpSpec,
    count_lm_train,
    generate_corpus,
    generate_dump,
    month_at,
    relative_curve,
    score_corpus,
    subsample_curves,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--topics", type=int, default=300)
    ap.add_argument("--months", type=int, default=24)
    ap.add_argument("--tokens-per-doc", type=int, default=400)
    ap.add_argument("--drift-rate", type=float, default=0.05)
    ap.add_argument("--vocab-size", type=int, default=2000)
    ap.add_argument("--dump-month", type=int, default=8)
    ap.add_argument("--docs", type=int, default=600)
    ap.add_argument("--sizes", default="250,100,50,25")
    ap.add_argument("--seeds", type=int, default=5)
    args = ap.parse_args()

    sizes = [int(s) for s in args.sizes.split(",")]
    hits = {size: 0 for size in sizes}
    for seed in range(args.seeds):
        corpus = generate_corpus(
            DriftSpec(
                topics=args.topics,
                months=args.months,
                tokens_per_doc=args.tokens_per_doc,
                drift_rate=args.drift_rate,
                vocab_size=args.vocab_size,
                seed=seed,
            )
        )
        dump = generate_dump(
            corpus,
            DumpSpec(mixture={month_at(args.dump_month): 1.0}, docs=args.docs, seed=seed + 50),
        )
        provider = count_lm_train([d.text for d in dump], n=3, alpha=0.1)
        series = score_corpus(provider, corpus, max_tokens=512, jobs=1)
        full = relative_curve(series)
        full_argmin = full.months[full.values.index(0.0)]
        curves = subsample_curves(series, sizes=sizes, seed=seed + 90)
        row = []
        for size in sizes:
            curve = curves[size]
            argmin = curve.months[curve.values.index(0.0)]
            ok = argmin == full_argmin
            hits[size] += ok
            row.append(f"{size}:{argmin}{'' if ok else '!'}")
        print(f"seed {seed}: full argmin {full_argmin} | " + "  ".join(row))

    print()
    print(f"{'size':>6}  argmin preserved")
    for size in sizes:
        print(f"{size:>6}  {hits[size]}/{args.seeds}")


if __name__ == "__main__":
    main()
