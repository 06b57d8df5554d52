"""Wrapper fitness evaluations: original function and meta-model.

Both evaluators train the configured classifier on the training split
restricted to a feature mask and score it on the full validation split. The
original function uses every training row; the meta-model uses only the rows
selected by an instance mask. Every training is charged to the CostLedger.
"""

import logging
import time

import numpy as np

from services.classifier.base import Classifier
from services.classifier.tree import DecisionTreeClassifier, accuracy
from services.data.schema import BitMask, SplitSet
from services.data.service import view
from services.optimizers.report import CostLedger
from services.shared import metrics
from services.shared.errors import EmptyMaskError

logger = logging.getLogger(__name__)


class FeatureSubsetEvaluator:
    """Scores feature masks by validation accuracy.

    Attributes:
        splits: Train/validation/test data
        classifier: Induction algorithm (a CART tree by default)
        ledger: Per-run training counters
        cache: Memoize results per (evaluator kind, feature mask, instance mask)
    """

    def __init__(
        self,
        splits: SplitSet,
        classifier: Classifier | None = None,
        ledger: CostLedger | None = None,
        cache: bool = True,
    ) -> None:
        self.splits = splits
        self.classifier = classifier or DecisionTreeClassifier()
        self.ledger = ledger or CostLedger()
        self.cache = cache
        self._memo: dict[tuple[str, bytes, bytes], float] = {}

    @property
    def n_train(self) -> int:
        return self.splits.train.n

    @property
    def k(self) -> int:
        return self.splits.k

    def evaluate_original(self, g: BitMask) -> float:
        """Validation accuracy of a tree trained on all training rows with features g.

        Raises:
            EmptyMaskError: g selects no feature
        """
        return self._evaluate(g, None)

    def evaluate_surrogate(self, g: BitMask, instance_mask: BitMask) -> float:
        """Validation accuracy of a tree trained on the rows in instance_mask with features g.

        Raises:
            EmptyMaskError: g or instance_mask selects nothing
        """
        return self._evaluate(g, instance_mask)

    def _evaluate(self, g: BitMask, instances: BitMask | None) -> float:
        if not g.any():
            raise EmptyMaskError("Feature mask selects no columns")
        kind = "original" if instances is None else "surrogate"
        key = (kind, g.tobytes(), b"" if instances is None else instances.tobytes())
        if self.cache and key in self._memo:
            return self._memo[key]

        started = time.perf_counter()
        train = view(self.splits.train, g, instances)
        model = self.classifier.fit(train)
        predicted = self.classifier.predict(model, view(self.splits.validation, g))
        score = accuracy(predicted, self.splits.validation.labels)
        elapsed = time.perf_counter() - started

        if instances is None:
            self.ledger.charge_original(train.n, self.k, elapsed)
            metrics.original_evaluations_total.inc()
        else:
            self.ledger.charge_surrogate(train.n, self.k, elapsed)
            metrics.surrogate_evaluations_total.inc()
        metrics.training_units_total.labels(kind=kind).inc(train.n * self.k * self.k)

        if self.cache:
            self._memo[key] = score
        return score

    def score_on_test(self, g: BitMask | None = None) -> tuple[float, float]:
        """Retrain on the full training split and score the final model.

        Not charged to the ledger: this is the reported model, not a fitness call.

        Args:
            g: Feature mask, None for all features (baseline)

        Returns:
            (test accuracy, validation accuracy)
        """
        if g is not None and not g.any():
            raise EmptyMaskError("Feature mask selects no columns")
        model = self.classifier.fit(view(self.splits.train, g))
        test_pred = self.classifier.predict(model, view(self.splits.test, g))
        val_pred = self.classifier.predict(model, view(self.splits.validation, g))
        return (
            accuracy(test_pred, self.splits.test.labels),
            accuracy(val_pred, self.splits.validation.labels),
        )

    def selected_names(self, g: BitMask) -> list[str]:
        return [name for name, keep in zip(self.splits.train.feature_names, g, strict=True) if keep]

    def all_features(self) -> BitMask:
        return np.ones(self.k, dtype=bool)
