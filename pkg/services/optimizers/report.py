"""Run history, cost ledger and the callable types shared by the engines."""

import time
from collections.abc import Callable
from dataclasses import dataclass
from typing import Any

import numpy as np
from pydantic import BaseModel, Field

from services.data.schema import BitMask, mask_to_str

FitnessFn = Callable[[BitMask], float]
"""Maps a genome to a fitness value to be maximized."""

RepairFn = Callable[[BitMask, np.random.Generator], BitMask]
"""Applied to every newly created genome before it is evaluated."""


@dataclass
class CostLedger:
    """Per-run accounting of classifier trainings.

    Units are abstract training costs of rows * k^2, the decision-tree
    complexity model used by the cost analysis (k is the full feature count).
    """

    original_evals: int = 0
    surrogate_evals: int = 0
    original_units: int = 0
    surrogate_units: int = 0
    original_seconds: float = 0.0
    surrogate_seconds: float = 0.0

    def charge_original(self, rows: int, k: int, seconds: float) -> None:
        self.original_evals += 1
        self.original_units += rows * k * k
        self.original_seconds += seconds

    def charge_surrogate(self, rows: int, k: int, seconds: float) -> None:
        self.surrogate_evals += 1
        self.surrogate_units += rows * k * k
        self.surrogate_seconds += seconds

    def snapshot(self) -> dict[str, float]:
        return {
            "original_evals": self.original_evals,
            "surrogate_evals": self.surrogate_evals,
            "original_units": self.original_units,
            "surrogate_units": self.surrogate_units,
            "original_seconds": round(self.original_seconds, 6),
            "surrogate_seconds": round(self.surrogate_seconds, 6),
        }


class GenerationRecord(BaseModel):
    """State after one generation (generation 0 is the initial population).

    Attributes:
        generation: Generation counter
        best_original_fitness: Best fitness computed by the original function so far
            (None until a surrogate-led run reaches its first control checkpoint)
        best_mask: Bit string of the mask holding best_original_fitness
        original_evals: Cumulative original-function trainings
        surrogate_evals: Cumulative meta-model trainings
        wall_ms: Milliseconds since the run started
        restart: A cataclysmic restart happened in this generation
        control: This generation ended with an evolution-control checkpoint
    """

    generation: int
    best_original_fitness: float | None = None
    best_mask: str | None = None
    original_evals: int = 0
    surrogate_evals: int = 0
    wall_ms: float = 0.0
    restart: bool = False
    control: bool = False


class FinalResult(BaseModel):
    """Model retrained on the full training set with the selected features."""

    test_accuracy: float
    validation_accuracy: float | None = None
    selected_features: list[str]
    n_selected: int
    total_time: float


class RunReport(BaseModel):
    """History and outcome of one run of one method with one seed."""

    method: str
    seed: int | None = None
    records: list[GenerationRecord] = Field(default_factory=list)
    best_mask: str | None = None
    best_fitness: float | None = None
    final: FinalResult | None = None
    metadata: dict[str, Any] = Field(default_factory=dict)

    def trajectory(self) -> list[float | None]:
        """Best original fitness per generation."""
        return [r.best_original_fitness for r in self.records]


class RunClock:
    """Wall-clock bookkeeping for records and budget checks."""

    def __init__(self, budget_s: float | None = None) -> None:
        self.started = time.perf_counter()
        self.budget_s = budget_s

    @property
    def elapsed_s(self) -> float:
        return time.perf_counter() - self.started

    def exhausted(self) -> bool:
        return self.budget_s is not None and self.elapsed_s >= self.budget_s


def make_record(
    generation: int,
    best_fitness: float | None,
    best_mask: BitMask | None,
    evaluations: int,
    ledger: CostLedger | None,
    clock: RunClock,
    *,
    restart: bool = False,
    control: bool = False,
) -> GenerationRecord:
    """Build a record; without a ledger every engine evaluation counts as original."""
    if ledger is None:
        original, surrogate = evaluations, 0
    else:
        original, surrogate = ledger.original_evals, ledger.surrogate_evals
    return GenerationRecord(
        generation=generation,
        best_original_fitness=(
            None if best_fitness is None or not np.isfinite(best_fitness) else float(best_fitness)
        ),
        best_mask=None if best_mask is None else mask_to_str(best_mask),
        original_evals=original,
        surrogate_evals=surrogate,
        wall_ms=round(clock.elapsed_s * 1000.0, 3),
        restart=restart,
        control=control,
    )


def evaluate_genomes(genomes: np.ndarray, fitness_fn: FitnessFn) -> tuple[np.ndarray, int]:
    """Evaluate rows in order; an all-zero genome scores -inf without a call.

    Returns:
        (fitness array, number of fitness_fn calls)
    """
    fitness = np.full(len(genomes), -np.inf)
    calls = 0
    for i, genome in enumerate(genomes):
        if genome.any():
            fitness[i] = float(fitness_fn(genome))
            calls += 1
    return fitness, calls
