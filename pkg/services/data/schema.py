"""Data types shared by the classifier, the optimizers and the harness.

Masks are dense boolean vectors rather than index lists: popcount and Hamming
distance are single vectorized reductions and every genome has a fixed length.
"""

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt
import pandas as pd

from services.shared.errors import DataError

BitMask = npt.NDArray[np.bool_]
"""Fixed-length binary genome: a feature subset (length k) or instance subset (length n)."""


def as_mask(bits: Sequence[int] | Sequence[bool] | str | npt.NDArray[np.generic]) -> BitMask:
    """Build a BitMask from a bit string ("1011"), a sequence or an array."""
    if isinstance(bits, str):
        if not bits or set(bits) - {"0", "1"}:
            raise ValueError(f"Not a bit string: {bits!r}")
        return np.fromiter((c == "1" for c in bits), dtype=bool, count=len(bits))
    mask = np.asarray(bits).astype(bool)
    if mask.ndim != 1:
        raise ValueError(f"Mask must be one-dimensional, got shape {mask.shape}")
    return mask


def mask_to_str(mask: BitMask) -> str:
    """Render a mask as a bit string, most readable form for reports."""
    return "".join("1" if b else "0" for b in mask)


@dataclass(frozen=True)
class RawDataset:
    """Delimiter-separated file loaded as-is, before encoding and imputation.

    Attributes:
        frame: Feature columns with raw cells (strings, numbers, NaN for missing)
        labels: Raw label column, aligned with frame rows
    """

    frame: pd.DataFrame
    labels: pd.Series

    @property
    def n(self) -> int:
        return len(self.frame)

    @property
    def k(self) -> int:
        return self.frame.shape[1]


@dataclass(frozen=True, eq=False)
class Dataset:
    """Numeric instance x feature matrix with integer class labels.

    Arrays are made read-only on construction so datasets and their views can
    be shared across evaluators without copies.

    Attributes:
        values: n x k matrix of finite float64
        labels: length-n class ids in [0, n_classes)
        feature_names: length-k column names
        n_classes: number of classes in the source data (not only in this view)
    """

    values: npt.NDArray[np.float64]
    labels: npt.NDArray[np.int64]
    feature_names: tuple[str, ...]
    n_classes: int
    class_names: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if values.ndim != 2:
            raise DataError(f"values must be 2-D, got shape {values.shape}")
        n, k = values.shape
        if n < 1 or k < 1:
            raise DataError(f"Dataset needs n >= 1 and k >= 1, got {n}x{k}")
        if labels.shape != (n,):
            raise DataError(f"labels length {labels.shape[0]} does not match {n} rows")
        if len(self.feature_names) != k:
            raise DataError(f"{len(self.feature_names)} feature names for {k} columns")
        if self.n_classes < 1:
            raise DataError("n_classes must be positive")
        if not np.isfinite(values).all():
            raise DataError("values contain missing or non-finite entries")
        if labels.min() < 0 or labels.max() >= self.n_classes:
            raise DataError(f"labels must lie in [0, {self.n_classes})")
        values.flags.writeable = False
        labels.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def k(self) -> int:
        return int(self.values.shape[1])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.feature_names == other.feature_names
            and self.n_classes == other.n_classes
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.labels, other.labels)
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class SplitSet:
    """Disjoint train / validation / test partition of one shuffled dataset."""

    train: Dataset
    validation: Dataset
    test: Dataset

    @property
    def n_classes(self) -> int:
        return self.train.n_classes

    @property
    def k(self) -> int:
        return self.train.k
