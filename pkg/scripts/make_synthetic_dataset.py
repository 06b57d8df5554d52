#!/usr/bin/env python3
"""Write a synthetic benchmark dataset as CSV.

Kinds:
- graded: binary features of decreasing informativeness, rows duplicated
  (usefulness-curve anchor: sub-samples train near-identical trees)
- deceptive: one informative feature, one decoy and coin features
  (evolution-control sensitivity experiments)

The label is written as the last column, named "class".

Usage:
    python scripts/make_synthetic_dataset.py --kind graded --output data/graded.csv
    fsbench curve-usefulness --data data/graded.csv --label class --n0 30 --ratio 2
"""

import logging
from pathlib import Path

from pipeline.bench.synthetic import deceptive_dataset, graded_dataset, write_dataset_csv

logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s")
logger = logging.getLogger(__name__)


if __name__ == "__main__":
    import argparse

    parser = argparse.ArgumentParser(description="Generate a synthetic benchmark dataset")
    parser.add_argument(
        "--kind",
        choices=("graded", "deceptive"),
        default="graded",
        help="Dataset construction",
    )
    parser.add_argument(
        "--output",
        type=Path,
        default=Path("data/synthetic.csv"),
        help="Output CSV file path",
    )
    parser.add_argument(
        "--rows",
        type=int,
        default=None,
        help="Distinct rows for graded (default 300), total rows for deceptive (default 2000)",
    )
    parser.add_argument(
        "--duplicates",
        type=int,
        default=10,
        help="Copies of each distinct row (graded only)",
    )
    parser.add_argument("--seed", type=int, default=0, help="Generator seed")

    args = parser.parse_args()

    if args.kind == "graded":
        dataset = graded_dataset(
            n_base=args.rows or 300, duplicates=args.duplicates, seed=args.seed
        )
    else:
        dataset = deceptive_dataset(n=args.rows or 2000, seed=args.seed)

    write_dataset_csv(dataset, args.output)
    names = ", ".join(dataset.feature_names)
    logger.info(f"{args.kind} dataset: {dataset.n} rows, features {names}")
