"""CHC binary optimizer.

Cross-generation elitist selection, Heterogeneous recombination (HUX) with
incest prevention, and Cataclysmic restarts. No per-generation mutation.

Conventions:
- A pair mates only when hamming(p1, p2) / 2 > d.
- d drops by one whenever no offspring makes it into the next population;
  the caller restarts once d < 0, and the restart resets d to d0.
- Survivors are ordered by fitness (descending), then fewer set bits, then
  insertion order (parents before offspring). Index 0 is always the best.
- The fitness function is maximized; all-zero genomes score -inf.

RNG draws happen in a fixed serial order, so a seed fully determines a run.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, field_validator

from pipeline.eval.metrics import hamming
from services.data.schema import BitMask
from services.optimizers.report import (
    CostLedger,
    FitnessFn,
    RepairFn,
    RunClock,
    RunReport,
    evaluate_genomes,
    make_record,
)
from services.shared.errors import EvaluationError
from services.shared.metrics import restarts_total

logger = logging.getLogger(__name__)


class ChcConfig(BaseModel):
    """CHC hyperparameters.

    Attributes:
        e: Population size (even, so every individual gets a partner)
        pr: Probability of a 1 in each bit of an initial genome
        d0: Initial incest threshold; None means floor(L / 4)
        div: Fraction of bits flipped when rebuilding from the best on restart
        t_max: Generation cap
        no_change_limit: Stop after this many generations without improvement
        seed: RNG seed (None draws from entropy)
    """

    model_config = ConfigDict(extra="forbid")

    e: int = Field(default=50, ge=2)
    pr: float = Field(default=0.5, gt=0.0, le=1.0)
    d0: int | None = Field(default=None, ge=0)
    div: float = Field(default=0.35, ge=0.0, le=1.0)
    t_max: int = Field(default=100, ge=0)
    no_change_limit: int = Field(default=10, ge=1)
    seed: int | None = None

    @field_validator("e")
    @classmethod
    def _even_population(cls, v: int) -> int:
        if v % 2:
            raise ValueError("population size e must be even")
        return v

    def initial_threshold(self, length: int) -> int:
        return self.d0 if self.d0 is not None else length // 4


@dataclass
class Population:
    """Evaluated CHC population, kept sorted best-first.

    Attributes:
        individuals: e x L genomes
        fitness: fitness[i] belongs to individuals[i]
        d: Current incest threshold
        generation: Generations completed
        evaluations: Cumulative fitness_fn calls
    """

    individuals: npt.NDArray[np.bool_]
    fitness: npt.NDArray[np.float64]
    d: int
    generation: int = 0
    evaluations: int = 0

    @property
    def size(self) -> int:
        return len(self.individuals)

    @property
    def best_mask(self) -> BitMask:
        return self.individuals[0]

    @property
    def best_fitness(self) -> float:
        return float(self.fitness[0])


def rank_order(
    fitness: npt.NDArray[np.float64], genomes: npt.NDArray[np.bool_]
) -> npt.NDArray[np.intp]:
    """Indices sorted by fitness desc, popcount asc, position asc."""
    return np.lexsort((np.arange(len(fitness)), genomes.sum(axis=1), -fitness))


def select_survivors(
    parents: npt.NDArray[np.bool_],
    parent_fitness: npt.NDArray[np.float64],
    offspring: npt.NDArray[np.bool_],
    offspring_fitness: npt.NDArray[np.float64],
    e: int,
) -> tuple[npt.NDArray[np.bool_], npt.NDArray[np.float64], int]:
    """Best e of parents and offspring.

    Returns:
        (survivor genomes, survivor fitness, number of surviving offspring)
    """
    genomes = np.concatenate([parents, offspring])
    fitness = np.concatenate([parent_fitness, offspring_fitness])
    keep = rank_order(fitness, genomes)[:e]
    return genomes[keep], fitness[keep], int(np.count_nonzero(keep >= len(parents)))


def _apply_repair(genome: BitMask, rng: np.random.Generator, repair: RepairFn | None) -> BitMask:
    return genome if repair is None else repair(genome, rng)


def init_population(
    cfg: ChcConfig,
    length: int,
    fitness_fn: FitnessFn,
    rng: np.random.Generator,
    repair: RepairFn | None = None,
) -> Population:
    """Draw e genomes bit-by-bit with probability pr and evaluate them.

    All-zero genomes are redrawn since an empty subset cannot be evaluated.
    """
    if length < 1:
        raise ValueError("Genome length must be at least 1")
    genomes = rng.random((cfg.e, length)) < cfg.pr
    for i in range(cfg.e):
        while not genomes[i].any():
            genomes[i] = rng.random(length) < cfg.pr
        genomes[i] = _apply_repair(genomes[i], rng, repair)

    fitness, calls = evaluate_genomes(genomes, fitness_fn)
    order = rank_order(fitness, genomes)
    return Population(
        individuals=genomes[order],
        fitness=fitness[order],
        d=cfg.initial_threshold(length),
        evaluations=calls,
    )


def hux_crossover(p1: BitMask, p2: BitMask, rng: np.random.Generator) -> tuple[BitMask, BitMask]:
    """Half-uniform crossover.

    Matching bits are copied to both children; exactly floor(diff / 2) of the
    differing positions, chosen uniformly, are exchanged. The children's
    popcounts always sum to the parents' popcounts.

    Raises:
        ValueError: Length mismatch
    """
    if p1.shape != p2.shape:
        raise ValueError(f"Length mismatch: {p1.shape} vs {p2.shape}")
    c1, c2 = p1.copy(), p2.copy()
    differing = np.flatnonzero(p1 != p2)
    swap = rng.choice(differing, size=len(differing) // 2, replace=False)
    c1[swap], c2[swap] = p2[swap], p1[swap]
    return c1, c2


def generation_step(
    pop: Population,
    cfg: ChcConfig,
    fitness_fn: FitnessFn,
    rng: np.random.Generator,
    repair: RepairFn | None = None,
) -> Population:
    """Random pairing, incest-prevented HUX mating, cross-generation elitist selection.

    A generation with no matings is legal; it decrements d like any
    generation whose offspring all fail to survive.
    """
    perm = rng.permutation(pop.size)
    children: list[BitMask] = []
    for a, b in zip(perm[0::2], perm[1::2], strict=False):
        p1, p2 = pop.individuals[a], pop.individuals[b]
        if hamming(p1, p2) / 2 > pop.d:
            children.extend(hux_crossover(p1, p2, rng))
    children = [_apply_repair(c, rng, repair) for c in children]

    if not children:
        return Population(
            individuals=pop.individuals,
            fitness=pop.fitness,
            d=pop.d - 1,
            generation=pop.generation + 1,
            evaluations=pop.evaluations,
        )

    offspring = np.array(children)
    offspring_fitness, calls = evaluate_genomes(offspring, fitness_fn)
    genomes, fitness, survived = select_survivors(
        pop.individuals, pop.fitness, offspring, offspring_fitness, pop.size
    )
    return Population(
        individuals=genomes,
        fitness=fitness,
        d=pop.d if survived else pop.d - 1,
        generation=pop.generation + 1,
        evaluations=pop.evaluations + calls,
    )


def cataclysmic_restart(
    pop: Population,
    cfg: ChcConfig,
    fitness_fn: FitnessFn,
    rng: np.random.Generator,
    repair: RepairFn | None = None,
) -> Population:
    """Rebuild the population around the best individual.

    The best genome is kept unchanged. Every other slot gets a copy of it with
    exactly ceil(div * L) distinct bits flipped. d is reset to d0.
    """
    template = pop.best_mask
    length = len(template)
    n_flip = math.ceil(round(cfg.div * length, 9))

    genomes = np.repeat(template[None, :], pop.size, axis=0)
    for i in range(1, pop.size):
        flip = rng.choice(length, size=n_flip, replace=False)
        genomes[i, flip] = ~genomes[i, flip]
        genomes[i] = _apply_repair(genomes[i], rng, repair)

    fitness = np.empty(pop.size)
    fitness[0] = pop.best_fitness
    fitness[1:], calls = evaluate_genomes(genomes[1:], fitness_fn)
    order = rank_order(fitness, genomes)
    return Population(
        individuals=genomes[order],
        fitness=fitness[order],
        d=cfg.initial_threshold(length),
        generation=pop.generation,
        evaluations=pop.evaluations + calls,
    )


def advance(
    pop: Population,
    cfg: ChcConfig,
    fitness_fn: FitnessFn,
    rng: np.random.Generator,
    repair: RepairFn | None = None,
    stage: str = "features",
) -> tuple[Population, bool]:
    """One generation followed by a restart if the incest threshold ran out.

    Returns:
        (next population, whether a restart happened)
    """
    pop = generation_step(pop, cfg, fitness_fn, rng, repair)
    if pop.d >= 0:
        return pop, False
    logger.debug(f"CHC restart at generation {pop.generation} (stage={stage})")
    restarts_total.labels(stage=stage).inc()
    return cataclysmic_restart(pop, cfg, fitness_fn, rng, repair), True


def run(
    cfg: ChcConfig,
    length: int,
    fitness_fn: FitnessFn,
    repair: RepairFn | None = None,
    ledger: CostLedger | None = None,
    budget_s: float | None = None,
    stage: str = "features",
) -> tuple[BitMask, RunReport]:
    """Run CHC until t_max or no_change_limit generations without improvement.

    Args:
        cfg: Hyperparameters (cfg.seed seeds the run)
        length: Genome length L
        fitness_fn: Function to maximize
        repair: Hook applied to every new genome (instance-cap enforcement)
        ledger: Cost ledger read for record counters
        budget_s: Wall-clock cap, checked between generations
        stage: Label for logs and metrics

    Returns:
        (best genome ever evaluated, history)

    Raises:
        EvaluationError: fitness_fn failed; carries the partial history
    """
    rng = np.random.default_rng(cfg.seed)
    clock = RunClock(budget_s)
    report = RunReport(method="chc", seed=cfg.seed, metadata={"stage": stage, "length": length})

    try:
        pop = init_population(cfg, length, fitness_fn, rng, repair)
        best_mask, best_fitness = pop.best_mask.copy(), pop.best_fitness
        report.records.append(
            make_record(0, best_fitness, best_mask, pop.evaluations, ledger, clock)
        )

        stagnant = 0
        for _ in range(cfg.t_max):
            if stagnant >= cfg.no_change_limit:
                break
            if clock.exhausted():
                report.metadata["stopped_by"] = "budget"
                break
            pop, restarted = advance(pop, cfg, fitness_fn, rng, repair, stage)
            if pop.best_fitness > best_fitness:
                best_mask, best_fitness = pop.best_mask.copy(), pop.best_fitness
                stagnant = 0
            else:
                stagnant += 1
            report.records.append(
                make_record(
                    pop.generation,
                    best_fitness,
                    best_mask,
                    pop.evaluations,
                    ledger,
                    clock,
                    restart=restarted,
                )
            )
    except EvaluationError:
        raise
    except Exception as e:
        raise EvaluationError(f"CHC aborted: {e}", partial_report=report) from e

    report.best_mask = report.records[-1].best_mask
    report.best_fitness = report.records[-1].best_original_fitness
    report.metadata["evaluations"] = pop.evaluations
    logger.info(
        f"CHC ({stage}) finished after {pop.generation} generations, "
        f"best fitness {best_fitness:.4f}, {pop.evaluations} evaluations"
    )
    return best_mask, report
