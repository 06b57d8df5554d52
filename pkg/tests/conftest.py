"""Shared fixtures: small synthetic datasets with known structure."""

import numpy as np
import pytest

from pipeline.bench.synthetic import graded_dataset
from services.data.schema import Dataset, SplitSet
from services.data.service import preprocess, split
from services.optimizers.report import CostLedger
from services.surrogate.evaluator import FeatureSubsetEvaluator


def make_dataset(values: list[list[float]] | np.ndarray, labels: list[int] | np.ndarray) -> Dataset:
    """Dataset with generated feature names and as many classes as the labels need."""
    values = np.asarray(values, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    return Dataset(
        values=values,
        labels=labels,
        feature_names=tuple(f"f{i}" for i in range(values.shape[1])),
        n_classes=int(labels.max()) + 1,
    )


def tiled_splits(n_base: int = 40, copies: int = 4, seed: int = 5) -> SplitSet:
    """Training split made of `copies` exact replicas of n_base graded rows.

    Selecting any one replica as an instance mask trains trees identical to
    full-data trees.
    """
    base = graded_dataset(n_base=n_base, duplicates=1, seed=seed)
    train = Dataset(
        values=np.tile(base.values, (copies, 1)),
        labels=np.tile(base.labels, copies),
        feature_names=base.feature_names,
        n_classes=2,
    )
    validation = graded_dataset(n_base=120, duplicates=1, seed=seed + 1)
    test = graded_dataset(n_base=120, duplicates=1, seed=seed + 2)
    return SplitSet(train=train, validation=validation, test=test)


@pytest.fixture
def graded_splits() -> SplitSet:
    """60 distinct graded rows duplicated 5x, shuffled and split 60/20/20."""
    return split(preprocess(graded_dataset(n_base=60, duplicates=5, seed=3), seed=0), seed=0)


@pytest.fixture
def evaluator(graded_splits: SplitSet) -> FeatureSubsetEvaluator:
    """Evaluator with a fresh ledger over graded_splits."""
    return FeatureSubsetEvaluator(graded_splits, ledger=CostLedger())


@pytest.fixture
def xor_dataset() -> Dataset:
    """Two binary features whose XOR is the label, each corner repeated twice."""
    corners = [[0, 0], [0, 1], [1, 0], [1, 1]] * 2
    return make_dataset(corners, [a ^ b for a, b in corners])
