#!/usr/bin/env python3
"""Validation accuracy as a function of the text-reduction width.

Trains one combined-embedding model per width (several seeds each) and
reports mean validation top-1; the width equal to the raw text dimensionality
runs without a reduction layer, so the curve shows what the trainable
reduction buys. Mirrors the dimensionality-tuning protocol at synthetic scale.

Usage: python scripts/sweep_text_dim.py [--values 2,4,6,8] [--repeats 3]
"""

import argparse
from pathlib import Path

from zslsign.experiment import RunConfig, sweep_text_dim
from zslsign.synth import SynthSpec, generate


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/sweep")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--values", default="2,4,6,8")
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    spec = SynthSpec(seed=args.seed)
    dataset, _ = generate(spec)
    cfg = RunConfig(
        embedding="combined",
        epochs=400,
        learning_rate=0.5,
        lam=1e-3,
        seed=args.seed,
        repeats=args.repeats,
    )
    values = [int(v) for v in args.values.split(",")]
    rows = sweep_text_dim(dataset, cfg, values)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv = out / "sweep_d_t.csv"
    csv.write_text(
        "d_t,mean_val_top1,stddev\n"
        + "\n".join(f"{v},{mean!r},{std!r}" for v, mean, std in rows)
        + "\n",
        encoding="utf-8",
    )
    print(f"{'d_t':>5s} {'val top-1':>10s} {'stddev':>8s}")
    for v, mean, std in rows:
        marker = "  <- raw text width, no reduction" if v == spec.text_dim else ""
        print(f"{v:5d} {mean:10.1f} {std:8.1f}{marker}")
    print(f"wrote {csv}")


if __name__ == "__main__":
    main()
