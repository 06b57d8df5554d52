"""Analytic training-cost model of plain CHC against CHC_QX.

Costs are in abstract units of n * k^2, the cost of one decision-tree
induction on n rows and k features. The surrogate run pays a fixed overhead
of 21 q trainings (snapshot plus instance search), evaluates every
generation on meta-models of at most n/2 rows, and re-evaluates the
population with the original function every f generations.
"""

import math

from pydantic import BaseModel


class CostEstimate(BaseModel):
    """Total and per-generation cost of both methods for r generations."""

    r: int
    e: int
    q: int
    f: int
    n: int
    k: int
    t_chc: float
    t_chcqx: float
    per_generation_chc: float
    per_generation_chcqx: float

    @property
    def qx_cheaper(self) -> bool:
        return self.t_chcqx < self.t_chc

    @property
    def ratio(self) -> float:
        return self.t_chcqx / self.t_chc


def cost_model(r: int, e: int, q: int, f: int, n: int = 1, k: int = 1) -> CostEstimate:
    """t_chc = r e n k^2 and t_chcqx = (21 q + (r / 2 + ceil(r / f)) e) n k^2.

    Args:
        r: Generations
        e: Population size
        q: Probe subsets (0 allowed for what-if analysis)
        f: Evolution-control frequency
        n: Training rows
        k: Features

    Raises:
        ValueError: Non-positive r, e, f, n, k or negative q
    """
    for name, value in (("r", r), ("e", e), ("f", f), ("n", n), ("k", k)):
        if value < 1:
            raise ValueError(f"{name} must be at least 1, got {value}")
    if q < 0:
        raise ValueError(f"q must be non-negative, got {q}")

    unit = n * k * k
    t_chc = float(r * e * unit)
    t_chcqx = (21 * q + (r / 2 + math.ceil(r / f)) * e) * unit
    return CostEstimate(
        r=r,
        e=e,
        q=q,
        f=f,
        n=n,
        k=k,
        t_chc=t_chc,
        t_chcqx=float(t_chcqx),
        per_generation_chc=t_chc / r,
        per_generation_chcqx=t_chcqx / r,
    )


def crossover_generation(e: int, q: int, f: int, r_max: int = 100_000) -> int | None:
    """Smallest r for which CHC_QX is cheaper than CHC, None if beyond r_max."""
    for r in range(1, r_max + 1):
        if cost_model(r, e, q, f).qx_cheaper:
            return r
    return None
