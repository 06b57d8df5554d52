"""Prometheus metrics for fitness evaluations and search progress.

Exposes:
- Original-function and surrogate training counts
- Abstract training units (rows x k^2) per evaluator kind
- Tree induction duration histogram
- Evolution-control checkpoints and cataclysmic restarts

Counters are process-wide. Per-run accounting lives in
services.optimizers.report.CostLedger; these metrics are for operators who
want a scrapeable or textfile view of a batch run.

Based on Prometheus best practices:
https://prometheus.io/docs/practices/naming/
"""

import logging
from pathlib import Path

from prometheus_client import REGISTRY, Counter, Histogram, write_to_textfile

logger = logging.getLogger(__name__)

original_evaluations_total = Counter(
    "fs_original_evaluations_total",
    "Classifier trainings on the full training set",
)

surrogate_evaluations_total = Counter(
    "fs_surrogate_evaluations_total",
    "Classifier trainings on an instance subset (meta-model)",
)

training_units_total = Counter(
    "fs_training_units_total",
    "Abstract training cost in rows * k^2 units",
    ["kind"],  # original, surrogate
)

tree_fit_duration_seconds = Histogram(
    "fs_tree_fit_duration_seconds",
    "Decision tree induction duration in seconds",
    buckets=(0.0005, 0.001, 0.005, 0.01, 0.05, 0.1, 0.5, 1.0, 5.0),
)

control_checkpoints_total = Counter(
    "fs_control_checkpoints_total",
    "Populations re-evaluated with the original function",
)

restarts_total = Counter(
    "fs_restarts_total",
    "Cataclysmic restarts",
    ["stage"],  # features, instances
)


def export_metrics(path: Path) -> None:
    """Write the default registry to a file in Prometheus text format.

    Args:
        path: Destination file (parent directories are created)
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    write_to_textfile(str(path), REGISTRY)
    logger.info(f"Metrics written to {path}")
