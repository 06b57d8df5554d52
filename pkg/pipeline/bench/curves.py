"""Learning curves and approximation-usefulness curves.

A learning curve tracks test accuracy of a tree trained on growing random
samples of the training split. A usefulness curve tracks, for the same sample
sizes, how well trees trained on the sample rank a fixed set of probe feature
subsets compared with full-data trees (Spearman rho).
"""

import logging
import math
from collections.abc import Sequence
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from pipeline.eval.metrics import spearman_rho
from services.classifier.base import Classifier
from services.classifier.tree import DecisionTreeClassifier, accuracy
from services.data.schema import BitMask, SplitSet
from services.data.service import view
from services.shared.errors import UndefinedCorrelationError
from services.surrogate.evaluator import FeatureSubsetEvaluator
from services.surrogate.service import make_snapshot

logger = logging.getLogger(__name__)


class CurvePoint(BaseModel):
    """One point of a curve.

    Attributes:
        sample_size: Training rows used
        metric: Test accuracy (learning curve) or rho (usefulness curve)
    """

    sample_size: int = Field(ge=1)
    metric: float


def geometric_schedule(n0: int, a: float, n_max: int) -> list[int]:
    """Sample sizes n0 * a^i up to n_max, with n_max appended if missing.

    Raises:
        ValueError: n0 < 1, a <= 1 or n_max < n0
    """
    if n0 < 1:
        raise ValueError(f"n0 must be at least 1, got {n0}")
    if a <= 1:
        raise ValueError(f"Ratio must exceed 1, got {a}")
    if n_max < n0:
        raise ValueError(f"n_max ({n_max}) is smaller than n0 ({n0})")

    sizes: list[int] = []
    i = 0
    while True:
        size = math.floor(round(n0 * a**i, 9))
        if size > n_max:
            break
        if not sizes or size > sizes[-1]:
            sizes.append(size)
        i += 1
    if sizes[-1] != n_max:
        sizes.append(n_max)
    return sizes


def _check_schedule(schedule: Sequence[int], n_train: int) -> None:
    if not schedule:
        raise ValueError("Empty sample-size schedule")
    if any(b <= a for a, b in zip(schedule, schedule[1:], strict=False)):
        raise ValueError(f"Sample sizes must be strictly increasing: {list(schedule)}")
    if schedule[0] < 1 or schedule[-1] > n_train:
        raise ValueError(f"Sample sizes must lie in [1, {n_train}], got {list(schedule)}")


def _sample_rows(n_train: int, m: int, rng: np.random.Generator) -> BitMask:
    mask = np.zeros(n_train, dtype=bool)
    mask[rng.choice(n_train, size=m, replace=False)] = True
    return mask


def learning_curve(
    splits: SplitSet,
    schedule: Sequence[int],
    seed: int | None,
    classifier: Classifier | None = None,
) -> list[CurvePoint]:
    """Test accuracy of trees trained on seeded random m-row samples (all features).

    Raises:
        ValueError: Schedule outside [1, n_train] or not increasing
    """
    _check_schedule(schedule, splits.train.n)
    classifier = classifier or DecisionTreeClassifier()
    rng = np.random.default_rng(seed)
    points = []
    for m in schedule:
        rows = _sample_rows(splits.train.n, m, rng)
        model = classifier.fit(view(splits.train, instances=rows))
        score = accuracy(classifier.predict(model, splits.test), splits.test.labels)
        points.append(CurvePoint(sample_size=m, metric=score))
        logger.debug(f"Learning curve: m={m} accuracy={score:.4f}")
    return points


def usefulness_curve(
    splits: SplitSet,
    schedule: Sequence[int],
    q: int,
    seed: int | None,
    evaluator: FeatureSubsetEvaluator | None = None,
    pr2: float = 0.5,
) -> list[CurvePoint]:
    """Rank agreement between sample-trained and full-data probe trees.

    One snapshot of q probes is drawn; for each m, the probes are retrained on
    one random m-row sample and rho(o, a^m) is recorded. Constant sample
    accuracies count as rho = 0.

    Raises:
        ValueError: Bad schedule or q < 2
        DegenerateSnapshotError: Probe accuracies had zero variance twice
    """
    _check_schedule(schedule, splits.train.n)
    evaluator = evaluator or FeatureSubsetEvaluator(splits)
    rng = np.random.default_rng(seed)
    snap = make_snapshot(evaluator, q, pr2, rng)

    points = []
    for m in schedule:
        rows = _sample_rows(splits.train.n, m, rng)
        a = [evaluator.evaluate_surrogate(u, rows) for u in snap.subsets]
        try:
            rho = spearman_rho(snap.o, a)
        except UndefinedCorrelationError:
            rho = 0.0
        points.append(CurvePoint(sample_size=m, metric=rho))
        logger.debug(f"Usefulness curve: m={m} rho={rho:.4f}")
    return points


def write_curve(points: Sequence[CurvePoint], path: Path) -> None:
    """Write points as CSV with header sample_size,metric."""
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame([p.model_dump() for p in points], columns=["sample_size", "metric"])
    frame.to_csv(path, index=False)
    logger.info(f"Wrote {len(points)} curve points to {path}")


def read_curve(path: Path) -> list[CurvePoint]:
    frame = pd.read_csv(path)
    return [
        CurvePoint(sample_size=int(row.sample_size), metric=float(row.metric))
        for row in frame.itertuples(index=False)
    ]
