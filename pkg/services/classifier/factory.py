"""Factory for creating classifiers based on configuration.

Implements Factory Pattern with a registry so experiment configs can name the
learner.

Based on:
- Factory Pattern: https://refactoring.guru/design-patterns/factory-method/python
- Registry Pattern: Python Cookbook 3rd Edition, Recipe 9.22
"""

import logging

from services.classifier.base import Classifier
from services.classifier.tree import DecisionTreeClassifier, TreeParams
from services.shared.errors import ConfigError

logger = logging.getLogger(__name__)


class ClassifierRegistry:
    """Registry of available induction algorithms.

    Maintains a mapping of classifier names to their implementation classes.
    Supports runtime registration of new learners.
    """

    _classifiers: dict[str, type[Classifier]] = {
        "tree": DecisionTreeClassifier,
    }

    @classmethod
    def register(cls, name: str, classifier_class: type[Classifier]) -> None:
        """Register a new classifier.

        Args:
            name: Identifier used in ExperimentConfig.classifier
            classifier_class: Class implementing the Classifier interface
        """
        cls._classifiers[name] = classifier_class
        logger.info(f"Registered classifier: {name}")

    @classmethod
    def get_classifier_class(cls, name: str) -> type[Classifier]:
        """Get classifier class by name.

        Raises:
            ConfigError: If name is not registered
        """
        if name not in cls._classifiers:
            available = ", ".join(cls._classifiers.keys())
            raise ConfigError(f"Unknown classifier: '{name}'. Available classifiers: {available}")
        return cls._classifiers[name]

    @classmethod
    def list_classifiers(cls) -> list[str]:
        """List all registered classifier names."""
        return list(cls._classifiers.keys())


def create_classifier(name: str = "tree", tree_params: TreeParams | None = None) -> Classifier:
    """Instantiate the classifier registered under name.

    Args:
        name: Registry identifier
        tree_params: Settings forwarded to the decision tree

    Returns:
        Configured classifier

    Raises:
        ConfigError: If name is unknown

    Example:
        >>> clf = create_classifier("tree", TreeParams(max_depth=3))
        >>> model = clf.fit(splits.train)
    """
    classifier_class = ClassifierRegistry.get_classifier_class(name)
    if classifier_class is DecisionTreeClassifier:
        classifier: Classifier = DecisionTreeClassifier(tree_params)
    else:
        classifier = classifier_class()
    logger.debug(f"Created classifier: {name}")
    return classifier
