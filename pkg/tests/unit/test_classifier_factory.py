"""Unit tests for the classifier factory.

Tests cover:
- Registry lookups
- Factory parameter forwarding
- Error handling for unknown learners
"""

from typing import Any

import numpy as np
import numpy.typing as npt
import pytest

from services.classifier.base import Classifier
from services.classifier.factory import ClassifierRegistry, create_classifier
from services.classifier.tree import DecisionTreeClassifier, TreeParams
from services.data.schema import Dataset
from services.shared.errors import ConfigError


def test_registry_default_classifiers() -> None:
    """Test that the registry contains the decision tree."""
    assert "tree" in ClassifierRegistry.list_classifiers()
    assert ClassifierRegistry.get_classifier_class("tree") is DecisionTreeClassifier


def test_registry_unknown_classifier() -> None:
    """Test that an unknown name raises ConfigError listing the available learners."""
    with pytest.raises(ConfigError, match="Unknown classifier") as exc_info:
        ClassifierRegistry.get_classifier_class("svm")

    assert "Available classifiers: tree" in str(exc_info.value)


def test_registry_register_new_classifier() -> None:
    """Test registering and creating a new learner."""

    class MajorityClassifier(Classifier):
        def fit(self, train: Dataset, seed: int | None = None) -> Any:
            return int(np.bincount(train.labels).argmax())

        def predict(self, model: Any, d: Dataset) -> npt.NDArray[np.int64]:
            return np.full(d.n, model, dtype=np.int64)

        @property
        def name(self) -> str:
            return "majority"

    ClassifierRegistry.register("majority", MajorityClassifier)
    try:
        clf = create_classifier("majority")
        assert isinstance(clf, MajorityClassifier)
        assert clf.name == "majority"
    finally:
        del ClassifierRegistry._classifiers["majority"]


def test_create_classifier_default() -> None:
    """Test that the factory builds a default tree."""
    clf = create_classifier()

    assert isinstance(clf, DecisionTreeClassifier)
    assert clf.params == TreeParams()


def test_create_classifier_forwards_tree_params() -> None:
    """Test that tree parameters reach the tree."""
    clf = create_classifier("tree", TreeParams(max_depth=2))

    assert isinstance(clf, DecisionTreeClassifier)
    assert clf.params.max_depth == 2


def test_create_classifier_unknown() -> None:
    """Test that the factory propagates ConfigError."""
    with pytest.raises(ConfigError):
        create_classifier("knn")
