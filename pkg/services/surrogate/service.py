"""Two-stage surrogate-assisted feature selection.

Stage one (active sampling) searches, with CHC, for a small subset of
training instances whose trees rank a fixed set of probe feature subsets the
same way full-data trees do. Stage two evolves feature masks against trees
trained on that subset only, re-evaluating the whole population with the
original function every f generations (evolution control). Only those
original-function values ever decide the reported best mask.
"""

import logging
from dataclasses import dataclass, field
from typing import Literal, Protocol

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, field_validator
from tenacity import (
    before_sleep_log,
    retry,
    retry_if_exception_type,
    stop_after_attempt,
)

from pipeline.eval.metrics import FitnessVector, popcount, spearman_rho
from services.data.schema import BitMask, mask_to_str
from services.optimizers import bpso, chc
from services.optimizers.bpso import PsoConfig
from services.optimizers.chc import ChcConfig, rank_order
from services.optimizers.report import FitnessFn, RepairFn, RunClock, RunReport, make_record
from services.shared import metrics
from services.shared.errors import (
    DegenerateSnapshotError,
    EmptyMaskError,
    EvaluationError,
    InvariantViolationError,
    UndefinedCorrelationError,
)
from services.surrogate.evaluator import FeatureSubsetEvaluator

logger = logging.getLogger(__name__)


class QxConfig(BaseModel):
    """Settings of both stages.

    Attributes:
        q: Number of probe feature subsets in the snapshot
        f: Evolution-control frequency in generations
        is_pop: Instance-selection population size
        is_tmax: Instance-selection generation cap
        is_no_change: Instance-selection stagnation limit
        pr1: Bit probability for initial instance genomes
        pr2: Bit probability for probe subsets and initial feature genomes
        engine: Feature-selection engine
        t_max: Feature-selection generation cap (sampling stage excluded)
        no_change_limit: Stop after this many control checkpoints without improvement
        seed: Seed of the sampling stage; None derives it from the engine seed
        chc: Feature engine settings when engine="chc" (its pr is replaced by pr2)
        pso: Feature engine settings when engine="pso"
    """

    model_config = ConfigDict(extra="forbid")

    q: int = Field(default=20, ge=2)
    f: int = Field(default=10, ge=1)
    is_pop: int = Field(default=4, ge=2)
    is_tmax: int = Field(default=10, ge=0)
    is_no_change: int = Field(default=3, ge=1)
    pr1: float = Field(default=0.5, gt=0.0, le=1.0)
    pr2: float = Field(default=0.5, gt=0.0, le=1.0)
    engine: Literal["chc", "pso"] = "chc"
    t_max: int = Field(default=100, ge=0)
    no_change_limit: int = Field(default=10, ge=1)
    seed: int | None = None
    chc: ChcConfig = Field(default_factory=ChcConfig)
    pso: PsoConfig = Field(default_factory=PsoConfig)

    @field_validator("is_pop")
    @classmethod
    def _even_population(cls, v: int) -> int:
        if v % 2:
            raise ValueError("is_pop must be even")
        return v

    @property
    def engine_seed(self) -> int | None:
        return self.chc.seed if self.engine == "chc" else self.pso.seed

    def sampling_seed(self) -> int | None:
        if self.seed is not None:
            return self.seed
        return derive_seed(self.engine_seed, stream=1)


def derive_seed(seed: int | None, stream: int) -> int | None:
    """Independent child seed for a secondary random stream."""
    if seed is None:
        return None
    return int(np.random.SeedSequence((seed, stream)).generate_state(1)[0])


@dataclass(frozen=True)
class Snapshot:
    """Probe feature subsets and their original-function fitness.

    Attributes:
        subsets: q x k probe masks, each with at least one feature
        o: Original fitness of each probe
    """

    subsets: npt.NDArray[np.bool_]
    o: FitnessVector

    def __post_init__(self) -> None:
        if self.subsets.ndim != 2 or len(self.subsets) < 2:
            raise ValueError("A snapshot needs at least 2 probe subsets")
        if len(self.o) != len(self.subsets):
            raise ValueError(f"{len(self.subsets)} probes but {len(self.o)} fitness values")
        if not self.subsets.any(axis=1).all():
            raise EmptyMaskError("Every probe subset needs at least one feature")

    @property
    def q(self) -> int:
        return len(self.subsets)


@dataclass
class MetaModel:
    """Instance subset used to train surrogate trees.

    Attributes:
        instance_mask: Selected training rows
        f_is: Instance fitness of the mask (None when supplied by the caller)
        snapshot: Probes the mask was selected against
        max_popcount_evaluated: Largest instance genome evaluated while searching
    """

    instance_mask: BitMask
    f_is: float | None = None
    snapshot: Snapshot | None = None
    max_popcount_evaluated: int = 0
    sampling_report: RunReport | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if not self.instance_mask.any():
            raise EmptyMaskError("Meta-model must keep at least one training row")

    @property
    def size(self) -> int:
        return popcount(self.instance_mask)

    @classmethod
    def all_instances(cls, n_train: int) -> "MetaModel":
        """Degenerate meta-model equivalent to the original function."""
        return cls(instance_mask=np.ones(n_train, dtype=bool))


def snapshot_from_subsets(
    evaluator: FeatureSubsetEvaluator, subsets: npt.NDArray[np.bool_]
) -> Snapshot:
    """Evaluate given probe masks with the original function.

    Raises:
        DegenerateSnapshotError: Every probe scored the same
    """
    o = np.array([evaluator.evaluate_original(u) for u in subsets])
    if np.ptp(o) == 0:
        raise DegenerateSnapshotError(
            f"All {len(o)} probe subsets scored {o[0]:.4f}; rank correlation undefined"
        )
    return Snapshot(subsets=np.asarray(subsets, dtype=bool), o=FitnessVector(o))


@retry(
    stop=stop_after_attempt(2),
    retry=retry_if_exception_type(DegenerateSnapshotError),
    before_sleep=before_sleep_log(logger, logging.WARNING),
    reraise=True,
)
def _draw_snapshot(
    evaluator: FeatureSubsetEvaluator, q: int, pr2: float, rng: np.random.Generator
) -> Snapshot:
    subsets = rng.random((q, evaluator.k)) < pr2
    for i in range(q):
        while not subsets[i].any():
            subsets[i] = rng.random(evaluator.k) < pr2
    return snapshot_from_subsets(evaluator, subsets)


def make_snapshot(
    evaluator: FeatureSubsetEvaluator,
    q: int,
    pr2: float,
    seed: int | np.random.Generator | None,
) -> Snapshot:
    """Draw q random probe masks and evaluate each with the original function.

    A degenerate draw (all probes equally accurate) is redrawn once from the
    same random stream; a second failure is raised.

    Raises:
        ValueError: q < 2
        DegenerateSnapshotError: Both draws were degenerate
    """
    if q < 2:
        raise ValueError(f"q must be at least 2, got {q}")
    return _draw_snapshot(evaluator, q, pr2, np.random.default_rng(seed))


def instance_fitness(g: BitMask, snap: Snapshot, evaluator: FeatureSubsetEvaluator) -> float:
    """f_is = (1 - rho(o, a)) + |g| / n, minimized.

    a holds the validation accuracy of each probe subset trained on the rows
    in g only. An undefined correlation (all a equal) counts as rho = 0.

    Raises:
        EmptyMaskError: g selects no instance
    """
    if not g.any():
        raise EmptyMaskError("Instance mask selects no rows")
    a = np.array([evaluator.evaluate_surrogate(u, g) for u in snap.subsets])
    try:
        rho = spearman_rho(snap.o, a)
    except UndefinedCorrelationError:
        logger.warning(f"Probe accuracies constant on {popcount(g)} rows; using rho = 0")
        rho = 0.0
    return (1.0 - rho) + popcount(g) / len(g)


def instance_cap(n_train: int) -> int:
    """Largest instance subset the sampling stage may evaluate."""
    return max(1, n_train // 2)


def make_cap_repair(cap: int) -> RepairFn:
    """Repair hook clearing uniformly chosen excess bits down to cap."""

    def repair(genome: BitMask, rng: np.random.Generator) -> BitMask:
        ones = np.flatnonzero(genome)
        if len(ones) <= cap:
            return genome
        capped = genome.copy()
        capped[rng.choice(ones, size=len(ones) - cap, replace=False)] = False
        return capped

    return repair


def active_sampling(
    evaluator: FeatureSubsetEvaluator,
    cfg: QxConfig,
    snapshot: Snapshot | None = None,
) -> MetaModel:
    """Select the training rows for the meta-model.

    Runs CHC over instance genomes of length n_train maximizing -f_is with
    population is_pop, is_tmax generations and an is_no_change stagnation
    stop. Every genome is capped at instance_cap(n_train) set bits before it
    is evaluated.

    Raises:
        DegenerateSnapshotError: No usable snapshot could be drawn
        EvaluationError: Instance search aborted
    """
    seed = cfg.sampling_seed()
    snap = snapshot
    if snap is None:
        snap = make_snapshot(evaluator, cfg.q, cfg.pr2, derive_seed(seed, stream=2))
    n = evaluator.n_train
    cap = instance_cap(n)
    largest = 0

    def fitness(g: BitMask) -> float:
        nonlocal largest
        size = popcount(g)
        if size > cap:
            raise InvariantViolationError(f"Instance genome with {size} rows exceeds cap {cap}")
        largest = max(largest, size)
        return -instance_fitness(g, snap, evaluator)

    search_cfg = ChcConfig(
        e=cfg.is_pop,
        pr=cfg.pr1,
        div=cfg.chc.div,
        t_max=cfg.is_tmax,
        no_change_limit=cfg.is_no_change,
        seed=seed,
    )
    best, report = chc.run(
        search_cfg,
        n,
        fitness,
        repair=make_cap_repair(cap),
        ledger=evaluator.ledger,
        stage="instances",
    )
    report.method = "instance_sampling"
    f_is = -report.best_fitness if report.best_fitness is not None else None
    logger.info(
        f"Active sampling kept {popcount(best)}/{n} training rows "
        f"(f_is={f_is}, {len(report.records) - 1} generations)"
    )
    return MetaModel(
        instance_mask=best,
        f_is=f_is,
        snapshot=snap,
        max_popcount_evaluated=largest,
        sampling_report=report,
    )


def meta_fitness(g: BitMask, mm: MetaModel, evaluator: FeatureSubsetEvaluator) -> float:
    """Validation accuracy of a tree trained on the meta-model rows with features g."""
    return evaluator.evaluate_surrogate(g, mm.instance_mask)


class _FeatureSearch(Protocol):
    @property
    def evaluations(self) -> int: ...

    def step(self) -> bool: ...

    def control_population(self) -> npt.NDArray[np.bool_]: ...


class _ChcSearch:
    """CHC stepping under the surrogate."""

    def __init__(self, cfg: ChcConfig, length: int, fitness_fn: FitnessFn) -> None:
        self.cfg = cfg
        self.fitness_fn = fitness_fn
        self.rng = np.random.default_rng(cfg.seed)
        self.pop = chc.init_population(cfg, length, fitness_fn, self.rng)

    @property
    def evaluations(self) -> int:
        return self.pop.evaluations

    def step(self) -> bool:
        self.pop, restarted = chc.advance(self.pop, self.cfg, self.fitness_fn, self.rng)
        return restarted

    def control_population(self) -> npt.NDArray[np.bool_]:
        return self.pop.individuals


class _PsoSearch:
    """BPSO stepping under the surrogate; positions and personal bests are controlled."""

    def __init__(self, cfg: PsoConfig, length: int, fitness_fn: FitnessFn) -> None:
        self.cfg = cfg
        self.fitness_fn = fitness_fn
        self.rng = np.random.default_rng(cfg.seed)
        self.swarm = bpso.init_swarm(cfg, length, fitness_fn, self.rng)

    @property
    def evaluations(self) -> int:
        return self.swarm.evaluations

    def step(self) -> bool:
        self.swarm = bpso.pso_step(self.swarm, self.cfg, self.fitness_fn, self.rng)
        return False

    def control_population(self) -> npt.NDArray[np.bool_]:
        return np.vstack([self.swarm.positions, self.swarm.pbest_positions])


def _control_checkpoint(
    population: npt.NDArray[np.bool_], evaluator: FeatureSubsetEvaluator
) -> tuple[BitMask, float]:
    """Best member of population under the original function."""
    fitness = np.array(
        [evaluator.evaluate_original(g) if g.any() else -np.inf for g in population]
    )
    metrics.control_checkpoints_total.inc()
    best = rank_order(fitness, population)[0]
    return population[best].copy(), float(fitness[best])


def qx_run(
    evaluator: FeatureSubsetEvaluator,
    cfg: QxConfig,
    meta_model: MetaModel | None = None,
    budget_s: float | None = None,
) -> tuple[BitMask, RunReport]:
    """Surrogate-assisted feature selection (CHC_QX or PSO_QX).

    Every generation t = 1..t_max steps the engine under meta_fitness. When
    t mod f == 0 the whole population (CHC), or the current positions and the
    personal bests (PSO), are re-evaluated with the original function; the
    best mask and the stagnation counter change only there. The engine keeps
    its surrogate fitness values, so selection never mixes evaluators. A last
    checkpoint runs when the final generation was not one.

    Args:
        evaluator: Wrapper evaluations and cost ledger
        cfg: Both stages' settings
        meta_model: Fixed meta-model; None runs active sampling first
        budget_s: Wall-clock cap including the sampling stage

    Returns:
        (best original-evaluated mask, history)

    Raises:
        EvaluationError: A stage failed; partial_report holds what was collected
    """
    clock = RunClock(budget_s)
    report = RunReport(
        method=f"{cfg.engine}_qx",
        seed=cfg.engine_seed,
        metadata={
            "q": cfg.q,
            "f": cfg.f,
            "engine": cfg.engine,
            "length": evaluator.k,
            "budget_includes_sampling": True,
        },
    )
    ledger = evaluator.ledger

    try:
        if meta_model is None:
            meta_model = active_sampling(evaluator, cfg)
            sampling = meta_model.sampling_report
            report.metadata["sampling"] = {
                "seed": cfg.sampling_seed(),
                "generations": len(sampling.records) - 1 if sampling else 0,
                "ledger": ledger.snapshot(),
            }
        report.metadata["meta_model"] = {
            "instances": meta_model.size,
            "n_train": evaluator.n_train,
            "f_is": meta_model.f_is,
        }
        mm = meta_model

        def surrogate(g: BitMask) -> float:
            return meta_fitness(g, mm, evaluator)

        search: _FeatureSearch
        if cfg.engine == "chc":
            search = _ChcSearch(cfg.chc.model_copy(update={"pr": cfg.pr2}), evaluator.k, surrogate)
        else:
            search = _PsoSearch(cfg.pso, evaluator.k, surrogate)

        best_mask: BitMask | None = None
        best_fitness = -np.inf
        report.records.append(make_record(0, None, None, search.evaluations, ledger, clock))

        stagnant = 0
        t = 0
        last_control = -1
        for t in range(1, cfg.t_max + 1):
            if stagnant >= cfg.no_change_limit:
                t -= 1
                break
            if clock.exhausted():
                report.metadata["stopped_by"] = "budget"
                t -= 1
                break
            restarted = search.step()
            is_control = t % cfg.f == 0
            if is_control:
                last_control = t
                mask, fitness = _control_checkpoint(search.control_population(), evaluator)
                if fitness > best_fitness:
                    best_mask, best_fitness = mask, fitness
                    stagnant = 0
                else:
                    stagnant += 1
                logger.info(
                    f"Control checkpoint at generation {t}: best original fitness "
                    f"{best_fitness:.4f} ({stagnant} without improvement)"
                )
            report.records.append(
                make_record(
                    t,
                    best_fitness,
                    best_mask,
                    search.evaluations,
                    ledger,
                    clock,
                    restart=restarted,
                    control=is_control,
                )
            )

        if last_control != t:
            mask, fitness = _control_checkpoint(search.control_population(), evaluator)
            if fitness > best_fitness:
                best_mask, best_fitness = mask, fitness
            report.records[-1] = make_record(
                t,
                best_fitness,
                best_mask,
                search.evaluations,
                ledger,
                clock,
                restart=report.records[-1].restart,
                control=True,
            )
    except EvaluationError as e:
        if e.partial_report is None:
            e.partial_report = report
        raise
    except Exception as e:
        raise EvaluationError(f"{cfg.engine.upper()}_QX aborted: {e}", partial_report=report) from e

    if best_mask is None:
        raise EvaluationError(
            "No evaluable feature mask in the final population", partial_report=report
        )
    report.best_mask = mask_to_str(best_mask)
    report.best_fitness = best_fitness
    report.metadata["generations"] = t
    report.metadata["ledger"] = ledger.snapshot()
    logger.info(
        f"{cfg.engine.upper()}_QX finished after {t} generations, best original fitness "
        f"{best_fitness:.4f}, {ledger.original_evals} original / "
        f"{ledger.surrogate_evals} surrogate trainings"
    )
    return best_mask, report
