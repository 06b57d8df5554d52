"""Deterministic CART decision tree (gini impurity).

Induction is greedy and top-down. At each node every (feature, threshold)
pair is scored, thresholds being midpoints between consecutive distinct
sorted values. Ties go to the lowest feature index, then the lowest
threshold, so a given training set always yields the same tree node for node.

A node becomes a leaf when it is pure, has fewer than min_samples_split rows,
reaches max_depth, or has no feature with two distinct values. A split is
taken even when it does not lower impurity (needed for XOR-like targets).

Complexity per fit is O(n log n * k) per tree level.
"""

import logging
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field

from services.classifier.base import Classifier
from services.data.schema import Dataset
from services.shared.errors import DataError
from services.shared.metrics import tree_fit_duration_seconds

logger = logging.getLogger(__name__)

LEAF = -1


class TreeParams(BaseModel):
    """Tree induction settings.

    Attributes:
        criterion: Impurity measure (only gini is supported)
        max_depth: Depth limit, None for unlimited
        min_samples_split: Smallest node that may still be split
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    criterion: str = Field(default="gini", pattern="^gini$")
    max_depth: int | None = Field(default=None, ge=0)
    min_samples_split: int = Field(default=2, ge=2)


@dataclass(frozen=True, eq=False)
class DecisionTree:
    """Fitted tree stored as parallel node arrays.

    Node 0 is the root. For an internal node i, rows with
    x[feature[i]] <= threshold[i] go to left[i], the others to right[i].
    Leaves have feature == left == right == -1 and predict value[i].
    """

    feature: npt.NDArray[np.int64]
    threshold: npt.NDArray[np.float64]
    left: npt.NDArray[np.int64]
    right: npt.NDArray[np.int64]
    value: npt.NDArray[np.int64]
    n_features: int
    n_classes: int

    def __post_init__(self) -> None:
        n_nodes = len(self.feature)
        for name in ("threshold", "left", "right", "value"):
            if len(getattr(self, name)) != n_nodes:
                raise ValueError(f"Node array {name!r} has the wrong length")
        internal = self.feature != LEAF
        if internal.any():
            children = np.concatenate([self.left[internal], self.right[internal]])
            if children.min() <= 0 or children.max() >= n_nodes:
                raise ValueError("Internal node points at a missing child")
            if self.feature[internal].max() >= self.n_features:
                raise ValueError("Split feature out of range")
        if self.value.min() < 0 or self.value.max() >= self.n_classes:
            raise ValueError("Leaf class out of range")

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):  # children always have larger ids than parents
            if self.feature[i] != LEAF:
                depths[self.left[i]] = depths[i] + 1
                depths[self.right[i]] = depths[i] + 1
        return int(depths.max())

    def same_structure(self, other: "DecisionTree") -> bool:
        """Node-for-node equality."""
        return all(
            np.array_equal(getattr(self, name), getattr(other, name))
            for name in ("feature", "threshold", "left", "right", "value")
        )


def _best_split(
    x: npt.NDArray[np.float64], y: npt.NDArray[np.int64], n_classes: int
) -> tuple[int, float] | None:
    """Lowest weighted gini over all features and midpoints, or None if no split exists."""
    n = x.shape[0]
    order = np.argsort(x, axis=0, kind="stable")
    xs = np.take_along_axis(x, order, axis=0)
    onehot = np.eye(n_classes)[y[order]]  # n x k x C
    left_counts = np.cumsum(onehot, axis=0)[:-1]  # left child holds rows 0..i
    right_counts = left_counts[-1] + onehot[-1] - left_counts

    n_left = np.arange(1, n, dtype=np.float64)[:, None]
    n_right = n - n_left
    # n * weighted gini = n - (sum lc^2 / nl + sum rc^2 / nr); minimize the negated term
    score = -((left_counts**2).sum(axis=2) / n_left + (right_counts**2).sum(axis=2) / n_right)
    score[xs[1:] <= xs[:-1]] = np.inf  # no boundary between equal values

    flat = score.T.ravel()  # feature-major: first minimum = lowest feature, lowest threshold
    best = int(np.argmin(flat))
    if not np.isfinite(flat[best]):
        return None
    feature, i = divmod(best, n - 1)
    lo, hi = xs[i, feature], xs[i + 1, feature]
    threshold = (lo + hi) / 2.0
    if threshold >= hi:  # adjacent floats: midpoint rounded up
        threshold = lo
    return int(feature), float(threshold)


def fit(train: Dataset, params: TreeParams | None = None, seed: int | None = None) -> DecisionTree:
    """Grow a CART tree on train.

    Args:
        train: Training data (at least one row and one feature)
        params: Induction settings, defaults to TreeParams()
        seed: Accepted for interface parity with randomized learners; unused

    Returns:
        Fitted DecisionTree

    Raises:
        DataError: Empty dataset
    """
    params = params or TreeParams()
    if train.n < 1 or train.k < 1:
        raise DataError("Cannot fit a tree on an empty dataset")

    x, y, n_classes = train.values, train.labels, train.n_classes
    feature: list[int] = [LEAF]
    threshold: list[float] = [0.0]
    left: list[int] = [LEAF]
    right: list[int] = [LEAF]
    value: list[int] = [0]

    with tree_fit_duration_seconds.time():
        stack: list[tuple[int, npt.NDArray[np.intp], int]] = [(0, np.arange(train.n), 0)]
        while stack:
            node, rows, depth = stack.pop()
            counts = np.bincount(y[rows], minlength=n_classes)
            value[node] = int(np.argmax(counts))

            if (
                counts.max() == len(rows)
                or len(rows) < params.min_samples_split
                or (params.max_depth is not None and depth >= params.max_depth)
            ):
                continue
            found = _best_split(x[rows], y[rows], n_classes)
            if found is None:
                continue

            split_feature, split_threshold = found
            goes_left = x[rows, split_feature] <= split_threshold
            left_id, right_id = len(feature), len(feature) + 1
            for _ in range(2):
                feature.append(LEAF)
                threshold.append(0.0)
                left.append(LEAF)
                right.append(LEAF)
                value.append(0)
            feature[node] = split_feature
            threshold[node] = split_threshold
            left[node] = left_id
            right[node] = right_id
            stack.append((right_id, rows[~goes_left], depth + 1))
            stack.append((left_id, rows[goes_left], depth + 1))

    return DecisionTree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        value=np.asarray(value, dtype=np.int64),
        n_features=train.k,
        n_classes=n_classes,
    )


def predict(tree: DecisionTree, d: Dataset) -> npt.NDArray[np.int64]:
    """Route every row to a leaf (left when value <= threshold) and return leaf classes.

    Raises:
        ValueError: d has a different feature count than the training data
    """
    if d.k != tree.n_features:
        raise ValueError(f"Tree was fit on {tree.n_features} features, data has {d.k}")

    node = np.zeros(d.n, dtype=np.int64)
    rows = np.arange(d.n)
    active = tree.feature[node] != LEAF
    while active.any():
        r, nd = rows[active], node[active]
        goes_left = d.values[r, tree.feature[nd]] <= tree.threshold[nd]
        node[r] = np.where(goes_left, tree.left[nd], tree.right[nd])
        active = tree.feature[node] != LEAF
    return tree.value[node]


def accuracy(predicted: npt.ArrayLike, truth: npt.ArrayLike) -> float:
    """Fraction of positions where predicted equals truth.

    Raises:
        ValueError: Length mismatch or empty vectors
    """
    p, t = np.asarray(predicted), np.asarray(truth)
    if p.shape != t.shape:
        raise ValueError(f"Length mismatch: {p.shape} vs {t.shape}")
    if p.size == 0:
        raise ValueError("Cannot score empty vectors")
    return float(np.count_nonzero(p == t) / p.size)


class DecisionTreeClassifier(Classifier):
    """CART behind the Classifier interface used by the wrapper evaluators."""

    def __init__(self, params: TreeParams | None = None) -> None:
        super().__init__()
        self.params = params or TreeParams()

    @property
    def name(self) -> str:
        return "tree"

    def fit(self, train: Dataset, seed: int | None = None) -> DecisionTree:
        return fit(train, self.params, seed)

    def predict(self, model: DecisionTree, d: Dataset) -> npt.NDArray[np.int64]:
        return predict(model, d)
