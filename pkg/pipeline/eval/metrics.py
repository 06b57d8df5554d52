"""Ranking and bit-vector metrics.

Spearman rank correlation measures how well a meta-model preserves the
original function's ordering of candidate feature subsets (approximation
usefulness). Hamming distance and popcount serve the CHC operators and the
instance-mask cap.
"""

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from scipy.stats import rankdata

from services.data.schema import BitMask
from services.shared.errors import UndefinedCorrelationError


@dataclass(frozen=True)
class FitnessVector:
    """Validation accuracies of the q probe subsets under one evaluator."""

    values: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise ValueError("FitnessVector must be one-dimensional")
        if not np.isfinite(values).all():
            raise ValueError("FitnessVector values must be finite")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)


def spearman_rho(o: FitnessVector | npt.ArrayLike, a: FitnessVector | npt.ArrayLike) -> float:
    """Spearman rank correlation between two fitness vectors.

    Without ties this is 1 - 6 * sum(d_i^2) / (q (q^2 - 1)) evaluated on integer
    ranks, which makes identical rankings exactly 1.0 and reversed rankings
    exactly -1.0. With ties, values get average ranks and the Pearson
    correlation of those ranks is returned (equal to the formula when no
    ties are present).

    Args:
        o: Original-function fitness of the q probes
        a: Approximate fitness of the same probes

    Returns:
        Correlation in [-1, 1]

    Raises:
        ValueError: Length mismatch or q < 2
        UndefinedCorrelationError: Either vector has all-equal ranks
    """
    ov = o.values if isinstance(o, FitnessVector) else np.asarray(o, dtype=np.float64)
    av = a.values if isinstance(a, FitnessVector) else np.asarray(a, dtype=np.float64)
    if ov.shape != av.shape:
        raise ValueError(f"Length mismatch: {ov.shape} vs {av.shape}")
    q = ov.shape[0]
    if q < 2:
        raise ValueError(f"Rank correlation needs q >= 2, got {q}")

    ro = rankdata(ov, method="average")
    ra = rankdata(av, method="average")
    if np.ptp(ro) == 0 or np.ptp(ra) == 0:
        raise UndefinedCorrelationError("Zero-variance fitness vector; correlation undefined")

    if np.array_equal(ro, ra):
        return 1.0
    if np.array_equal(ro, q + 1 - ra):
        return -1.0

    tie_free = len(np.unique(ro)) == q and len(np.unique(ra)) == q
    if tie_free:
        d_squared = int(((ro.astype(np.int64) - ra.astype(np.int64)) ** 2).sum())
        return 1.0 - 6.0 * d_squared / (q * (q * q - 1))

    ro_c, ra_c = ro - ro.mean(), ra - ra.mean()
    rho = float((ro_c @ ra_c) / np.sqrt((ro_c @ ro_c) * (ra_c @ ra_c)))
    return float(np.clip(rho, -1.0, 1.0))


def hamming(g1: BitMask, g2: BitMask) -> int:
    """Number of positions where the two masks differ.

    Raises:
        ValueError: Length mismatch
    """
    if g1.shape != g2.shape:
        raise ValueError(f"Length mismatch: {g1.shape} vs {g2.shape}")
    return int(np.count_nonzero(g1 != g2))


def popcount(g: BitMask) -> int:
    """Number of set bits."""
    return int(np.count_nonzero(g))
