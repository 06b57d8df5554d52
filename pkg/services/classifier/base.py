"""Abstract base class for the wrapper's induction algorithm.

The evaluators and engines only ever call fit/predict through this interface,
so another learner (kNN, for instance) can be registered without touching
the search code.

Based on Strategy Pattern:
https://refactoring.guru/design-patterns/strategy/python
"""

from abc import ABC, abstractmethod
from typing import Any

import numpy as np
import numpy.typing as npt

from services.data.schema import Dataset


class Classifier(ABC):
    """Induction algorithm used as both original function and meta-model.

    Implementations must be deterministic for a given (data, seed) pair; the
    engines' reproducibility depends on it.
    """

    @abstractmethod
    def fit(self, train: Dataset, seed: int | None = None) -> Any:
        """Train a model.

        Args:
            train: Training data
            seed: Seed for randomized learners

        Returns:
            Opaque fitted model accepted by predict
        """
        pass

    @abstractmethod
    def predict(self, model: Any, d: Dataset) -> npt.NDArray[np.int64]:
        """Predict class ids for every row of d."""
        pass

    @property
    @abstractmethod
    def name(self) -> str:
        """Registry identifier for logs and reports."""
        pass
