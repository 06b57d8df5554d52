"""Synthetic datasets with known structure for benchmark anchors.

- graded_dataset: binary features of decreasing informativeness, rows
  duplicated so that sub-samples train trees close to full-data trees.
- deceptive_dataset / deceptive_instance_mask: a small group of rows on
  which a useless feature looks perfect and the truly informative feature is
  inverted; a meta-model trained on that group converges to false optima.
- onemax: the bit-counting sanity fitness for the engines.
"""

import logging
from collections.abc import Sequence
from pathlib import Path

import numpy as np
import pandas as pd

from services.data.schema import BitMask, Dataset
from services.shared.errors import DataError

logger = logging.getLogger(__name__)


def onemax(g: BitMask) -> float:
    """Fraction of set bits."""
    return float(np.count_nonzero(g)) / len(g)


def graded_dataset(
    n_base: int = 300,
    duplicates: int = 10,
    flip_rates: Sequence[float] = (0.1, 0.2, 0.3),
    n_noise: int = 2,
    seed: int | None = 0,
) -> Dataset:
    """Binary dataset whose features agree with the label at graded rates.

    Column "exact" equals the label, column "flip<p>" equals it with a
    fraction p of rows flipped, and "noise<i>" columns are independent coins.
    Each of the n_base rows appears `duplicates` times, consecutively.

    Raises:
        ValueError: n_base < 2 or duplicates < 1
    """
    if n_base < 2 or duplicates < 1:
        raise ValueError("Need n_base >= 2 and duplicates >= 1")
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 2, size=n_base)
    labels[:2] = (0, 1)

    columns = [labels.copy()]
    names = ["exact"]
    for p in flip_rates:
        columns.append(labels ^ (rng.random(n_base) < p))
        names.append(f"flip{round(p * 100)}")
    for i in range(n_noise):
        columns.append(rng.integers(0, 2, size=n_base))
        names.append(f"noise{i}")

    values = np.column_stack(columns).astype(np.float64)
    return Dataset(
        values=np.repeat(values, duplicates, axis=0),
        labels=np.repeat(labels, duplicates),
        feature_names=tuple(names),
        n_classes=2,
        class_names=("0", "1"),
    )


def deceptive_dataset(
    n: int = 2000,
    informative_noise: float = 0.05,
    n_noise: int = 4,
    seed: int | None = 0,
) -> Dataset:
    """Dataset with one informative feature, one decoy and independent noise.

    Column "signal" equals the label except on a fraction informative_noise
    of rows; "decoy" and the "noise<i>" columns are coins. On rows where the
    signal is wrong and the decoy happens to be right, a tree sees the decoy
    as perfect and the signal as inverted.
    """
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 2, size=n)
    signal = labels ^ (rng.random(n) < informative_noise)
    decoy = rng.integers(0, 2, size=n)
    noise = rng.integers(0, 2, size=(n, n_noise))
    values = np.column_stack([signal, decoy, noise]).astype(np.float64)
    return Dataset(
        values=values,
        labels=labels,
        feature_names=("signal", "decoy", *(f"noise{i}" for i in range(n_noise))),
        n_classes=2,
        class_names=("0", "1"),
    )


def deceptive_instance_mask(train: Dataset, signal: int = 0, decoy: int = 1) -> BitMask:
    """Rows where the signal column disagrees with the label and the decoy agrees.

    Raises:
        DataError: No such row, or the rows cover a single class
    """
    mask = (train.values[:, signal] != train.labels) & (train.values[:, decoy] == train.labels)
    if len(np.unique(train.labels[mask])) < 2:
        raise DataError("Deceptive subset needs rows of both classes")
    logger.debug(f"Deceptive subset: {int(mask.sum())}/{train.n} training rows")
    return mask


def write_dataset_csv(d: Dataset, path: Path, label_name: str = "class") -> None:
    """Write a dataset as CSV with the label as the last column."""
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(d.values, columns=list(d.feature_names))
    labels = d.labels if not d.class_names else np.asarray(d.class_names)[d.labels]
    frame[label_name] = labels
    frame.to_csv(path, index=False)
    logger.info(f"Wrote {d.n}x{d.k} dataset to {path}")
