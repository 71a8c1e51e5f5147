"""Generate the bundled 64-dimensional two-class dataset.

Two Gaussian blobs with per-coordinate mean gaps drawn once from a seeded
RNG, 40 points per class, values rounded to 4 decimals so the CSV is small
and byte-stable.  Run from the repository root:

    python3 tools/gen_synth64.py [--seed 7] [--out src/advcert/datasets/synth64.csv]
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from advcert.data import LabeledDataset, save_dataset_csv  # noqa: E402

DIM = 64
PER_CLASS = 40
SIGMA = 0.25


def make_dataset(seed: int) -> LabeledDataset:
    rng = np.random.default_rng(seed)
    gaps = rng.uniform(0.2, 0.4, size=DIM)
    center = rng.uniform(0.4, 0.6, size=DIM)
    mu_pos = center + gaps / 2.0
    mu_neg = center - gaps / 2.0
    pos = rng.normal(mu_pos, SIGMA, size=(PER_CLASS, DIM))
    neg = rng.normal(mu_neg, SIGMA, size=(PER_CLASS, DIM))
    points = np.round(np.vstack([pos, neg]), 4)
    labels = np.concatenate([np.ones(PER_CLASS, dtype=int),
                             -np.ones(PER_CLASS, dtype=int)])
    return LabeledDataset(points, labels)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument(
        "--out",
        default=str(Path(__file__).resolve().parents[1] / "src" / "advcert"
                    / "datasets" / "synth64.csv"),
    )
    args = parser.parse_args()
    ds = make_dataset(args.seed)
    save_dataset_csv(ds, args.out)
    print(f"wrote {ds.size} x {ds.points.shape[1]} dataset to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
