"""Binary particle swarm optimizer, global-best topology.

Velocities are real-valued per bit; a bit is set with probability
sigmoid(v) after each velocity update (classical sigmoid-transfer BPSO).
Velocities are clamped to [-v_max, v_max]. Personal and global bests only
change on strict improvement, so ties keep the incumbent.
"""

import logging
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import expit

from services.data.schema import BitMask
from services.optimizers.report import (
    CostLedger,
    FitnessFn,
    RunClock,
    RunReport,
    evaluate_genomes,
    make_record,
)
from services.shared.errors import EvaluationError

logger = logging.getLogger(__name__)


class PsoConfig(BaseModel):
    """Binary PSO hyperparameters."""

    model_config = ConfigDict(extra="forbid")

    particles: int = Field(default=50, ge=2)
    c1: float = Field(default=1.49618, gt=0.0)
    c2: float = Field(default=1.49618, gt=0.0)
    w: float = Field(default=0.7298, gt=0.0)
    v_max: float = Field(default=6.0, gt=0.0)
    t_max: int = Field(default=100, ge=0)
    no_change_limit: int = Field(default=10, ge=1)
    seed: int | None = None


@dataclass
class Swarm:
    """Swarm state. Row i of every matrix belongs to particle i."""

    positions: npt.NDArray[np.bool_]
    velocities: npt.NDArray[np.float64]
    fitness: npt.NDArray[np.float64]
    pbest_positions: npt.NDArray[np.bool_]
    pbest_fitness: npt.NDArray[np.float64]
    gbest_position: BitMask
    gbest_fitness: float
    iteration: int = 0
    evaluations: int = 0


def _global_best(swarm_pbest: npt.NDArray[np.float64]) -> int:
    return int(np.argmax(swarm_pbest))  # first maximum


def init_swarm(
    cfg: PsoConfig, length: int, fitness_fn: FitnessFn, rng: np.random.Generator
) -> Swarm:
    """Uniform random bits (p = 0.5) and velocities uniform in [-v_max, v_max]."""
    if length < 1:
        raise ValueError("Genome length must be at least 1")
    positions = rng.random((cfg.particles, length)) < 0.5
    velocities = rng.uniform(-cfg.v_max, cfg.v_max, size=(cfg.particles, length))
    fitness, calls = evaluate_genomes(positions, fitness_fn)
    best = _global_best(fitness)
    return Swarm(
        positions=positions,
        velocities=velocities,
        fitness=fitness,
        pbest_positions=positions.copy(),
        pbest_fitness=fitness.copy(),
        gbest_position=positions[best].copy(),
        gbest_fitness=float(fitness[best]),
        evaluations=calls,
    )


def pso_step(
    swarm: Swarm, cfg: PsoConfig, fitness_fn: FitnessFn, rng: np.random.Generator
) -> Swarm:
    """One velocity/position update, evaluation and best bookkeeping.

    v <- w v + c1 r1 (pbest - x) + c2 r2 (gbest - x), clamped; x_j <- [rand < sigmoid(v_j)].
    """
    n, length = swarm.positions.shape
    x = swarm.positions.astype(np.float64)
    r1 = rng.random((n, length))
    r2 = rng.random((n, length))
    velocities = (
        cfg.w * swarm.velocities
        + cfg.c1 * r1 * (swarm.pbest_positions - x)
        + cfg.c2 * r2 * (swarm.gbest_position.astype(np.float64) - x)
    )
    velocities = np.clip(velocities, -cfg.v_max, cfg.v_max)
    positions = rng.random((n, length)) < expit(velocities)

    fitness, calls = evaluate_genomes(positions, fitness_fn)
    improved = fitness > swarm.pbest_fitness
    pbest_positions = swarm.pbest_positions.copy()
    pbest_fitness = swarm.pbest_fitness.copy()
    pbest_positions[improved] = positions[improved]
    pbest_fitness[improved] = fitness[improved]

    gbest_position, gbest_fitness = swarm.gbest_position, swarm.gbest_fitness
    best = _global_best(pbest_fitness)
    if pbest_fitness[best] > gbest_fitness:
        gbest_position, gbest_fitness = pbest_positions[best].copy(), float(pbest_fitness[best])

    return Swarm(
        positions=positions,
        velocities=velocities,
        fitness=fitness,
        pbest_positions=pbest_positions,
        pbest_fitness=pbest_fitness,
        gbest_position=gbest_position,
        gbest_fitness=gbest_fitness,
        iteration=swarm.iteration + 1,
        evaluations=swarm.evaluations + calls,
    )


def pso_run(
    cfg: PsoConfig,
    length: int,
    fitness_fn: FitnessFn,
    ledger: CostLedger | None = None,
    budget_s: float | None = None,
) -> tuple[BitMask, RunReport]:
    """Iterate pso_step until t_max or no_change_limit iterations without gbest improvement.

    Raises:
        EvaluationError: fitness_fn failed; carries the partial history
    """
    rng = np.random.default_rng(cfg.seed)
    clock = RunClock(budget_s)
    report = RunReport(method="pso", seed=cfg.seed, metadata={"length": length})

    try:
        swarm = init_swarm(cfg, length, fitness_fn, rng)
        report.records.append(
            make_record(
                0, swarm.gbest_fitness, swarm.gbest_position, swarm.evaluations, ledger, clock
            )
        )
        stagnant = 0
        for _ in range(cfg.t_max):
            if stagnant >= cfg.no_change_limit:
                break
            if clock.exhausted():
                report.metadata["stopped_by"] = "budget"
                break
            previous = swarm.gbest_fitness
            swarm = pso_step(swarm, cfg, fitness_fn, rng)
            stagnant = 0 if swarm.gbest_fitness > previous else stagnant + 1
            report.records.append(
                make_record(
                    swarm.iteration,
                    swarm.gbest_fitness,
                    swarm.gbest_position,
                    swarm.evaluations,
                    ledger,
                    clock,
                )
            )
    except EvaluationError:
        raise
    except Exception as e:
        raise EvaluationError(f"PSO aborted: {e}", partial_report=report) from e

    report.best_mask = report.records[-1].best_mask
    report.best_fitness = report.records[-1].best_original_fitness
    report.metadata["evaluations"] = swarm.evaluations
    logger.info(
        f"PSO finished after {swarm.iteration} iterations, "
        f"best fitness {swarm.gbest_fitness:.4f}, {swarm.evaluations} evaluations"
    )
    return swarm.gbest_position, report
