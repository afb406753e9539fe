"""Core types and rank statistics for MOS analysis.

Provides the building blocks the rest of the package is assembled from:
MOS estimation from raw votes (with Student-t or normal 95% CI), fractional
ranking with averaged ties, Spearman's rank correlation computed as Pearson
on fractional ranks, the closed-form error a single missed tied rank causes
in the coefficient, the worst-case bound for m missed ties, and the
consecutive-gap analysis that shows how often neighbouring MOS values fall
within each other's confidence intervals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm, t as student_t

__all__ = [
    "DegenerateCorrelationError",
    "OpinionVotes",
    "MosEstimate",
    "Dataset",
    "RankVector",
    "GapReport",
    "mos_from_votes",
    "fractional_ranks",
    "srcc",
    "missed_tie_effect",
    "max_missed_tie_effect",
    "gap_analysis",
]

DEFAULT_SCALE = (1.0, 5.0)

CI_METHODS = ("student_t", "normal")


class DegenerateCorrelationError(ValueError):
    """Raised when a correlation is undefined because a rank vector is constant."""


@dataclass(frozen=True, slots=True)
class OpinionVotes:
    """Raw opinion scores collected for one condition.

    Votes are integers on a discrete scale, by default the 5-point ACR
    scale (1 = "Bad" .. 5 = "Excellent").
    """

    condition_id: str
    votes: tuple[int, ...]
    scale: tuple[float, float] = DEFAULT_SCALE

    def __post_init__(self) -> None:
        if not self.condition_id:
            raise ValueError("condition_id must be non-empty")
        object.__setattr__(self, "votes", tuple(int(v) for v in self.votes))
        if not self.votes:
            raise ValueError(f"{self.condition_id}: vote list is empty")
        lo, hi = self.scale
        if lo > hi:
            raise ValueError(f"invalid scale [{lo}, {hi}]")
        for v in self.votes:
            if not lo <= v <= hi:
                raise ValueError(
                    f"{self.condition_id}: vote {v} outside the scale [{lo}, {hi}]"
                )


@dataclass(frozen=True, slots=True)
class MosEstimate:
    """One condition's MOS with its 95% confidence interval half-width.

    ``n`` and ``sd`` are optional because datasets are often ingested as
    precomputed (MOS, CI) pairs without vote-level detail.  ``degenerate``
    marks estimates built from a single vote, where sd and ci95 default
    to 0 by convention.
    """

    condition_id: str
    mos: float
    ci95: float
    n: int | None = None
    sd: float | None = None
    degenerate: bool = False

    def __post_init__(self) -> None:
        if not self.condition_id:
            raise ValueError("condition_id must be non-empty")
        if not math.isfinite(self.mos):
            raise ValueError(f"{self.condition_id}: MOS must be finite")
        if not (math.isfinite(self.ci95) and self.ci95 >= 0):
            raise ValueError(f"{self.condition_id}: ci95 must be finite and >= 0")
        if self.n is not None and self.n < 1:
            raise ValueError(f"{self.condition_id}: n must be >= 1")
        if self.sd is not None and not (math.isfinite(self.sd) and self.sd >= 0):
            raise ValueError(f"{self.condition_id}: sd must be finite and >= 0")


@dataclass(frozen=True, slots=True)
class Dataset:
    """Ordered collection of MOS estimates with unique condition ids."""

    entries: tuple[MosEstimate, ...]
    scale: tuple[float, float] = DEFAULT_SCALE

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))
        if not self.entries:
            raise ValueError("dataset has no entries")
        seen: set[str] = set()
        for e in self.entries:
            if e.condition_id in seen:
                raise ValueError(f"duplicate condition id {e.condition_id!r}")
            seen.add(e.condition_id)

    def __len__(self) -> int:
        return len(self.entries)

    def condition_ids(self) -> tuple[str, ...]:
        return tuple(e.condition_id for e in self.entries)

    def mos_values(self) -> tuple[float, ...]:
        return tuple(e.mos for e in self.entries)

    def ci95_values(self) -> tuple[float, ...]:
        return tuple(e.ci95 for e in self.entries)


@dataclass(frozen=True, slots=True)
class RankVector:
    """Fractional ranks aligned to a dataset's entry order.

    Tied values share the average of the ranks they span, so the rank sum
    is always exactly n(n+1)/2.
    """

    ranks: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "ranks", tuple(float(r) for r in self.ranks))
        n = len(self.ranks)
        if n == 0:
            raise ValueError("rank vector is empty")
        if any(not 1 <= r <= n for r in self.ranks):
            raise ValueError(f"ranks must lie in [1, {n}]")
        # fractional ranks are exact multiples of 0.5, so this sum is exact
        if sum(self.ranks) != n * (n + 1) / 2:
            raise ValueError("rank sum must equal n(n+1)/2")

    def __len__(self) -> int:
        return len(self.ranks)


@dataclass(frozen=True, slots=True)
class GapReport:
    """Consecutive-gap summary of a dataset ranked by MOS (descending).

    ``gaps[i]`` is the absolute MOS difference between conditions i and
    i+1 of the ranked order; ``tie_fraction`` is the share of consecutive
    pairs whose gap is smaller than the larger of the two CIs.
    """

    condition_ids: tuple[str, ...]
    mos: tuple[float, ...]
    ci95: tuple[float, ...]
    gaps: tuple[float, ...]
    tie_fraction: float

    @property
    def n_pairs(self) -> int:
        return len(self.gaps)


def _quantile_97_5(method: str, n: int) -> float:
    if method == "student_t":
        return float(student_t.ppf(0.975, n - 1))
    if method == "normal":
        return float(norm.ppf(0.975))
    raise ValueError(f"unknown ci_method {method!r}; expected one of {CI_METHODS}")


def mos_from_votes(votes: OpinionVotes, ci_method: str = "student_t") -> MosEstimate:
    """Estimate MOS, sample SD and 95% CI half-width from raw votes.

    The CI half-width is q * sd / sqrt(n), with q the 97.5th percentile of
    Student's t at n-1 degrees of freedom (default) or of the standard
    normal.  A single vote has no dispersion information: sd and ci95 are
    defined as 0 and the estimate is flagged ``degenerate``.
    """
    if ci_method not in CI_METHODS:
        raise ValueError(f"unknown ci_method {ci_method!r}; expected one of {CI_METHODS}")
    n = len(votes.votes)
    mean = sum(votes.votes) / n
    if n == 1:
        return MosEstimate(votes.condition_id, mean, 0.0, n=1, sd=0.0, degenerate=True)
    var = sum((v - mean) ** 2 for v in votes.votes) / (n - 1)
    sd = math.sqrt(var)
    ci95 = _quantile_97_5(ci_method, n) * sd / math.sqrt(n)
    return MosEstimate(votes.condition_id, mean, ci95, n=n, sd=sd)


def _rank_array(values: np.ndarray) -> np.ndarray:
    """Ascending fractional ranks (1-based) with exactly-equal values averaged."""
    n = values.shape[0]
    order = np.argsort(values, kind="stable")
    sorted_vals = values[order]
    # start index of every run of equal values
    starts = np.flatnonzero(np.concatenate(([True], sorted_vals[1:] != sorted_vals[:-1])))
    ends = np.concatenate((starts[1:], [n]))
    averaged = (starts + ends - 1) / 2.0 + 1.0
    ranks = np.empty(n, dtype=float)
    ranks[order] = np.repeat(averaged, ends - starts)
    return ranks


def fractional_ranks(values) -> RankVector:
    """Rank values ascending from 1, assigning tied values their average rank.

    [10, 20, 20, 30] -> [1, 2.5, 2.5, 4]
    """
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.shape[0] == 0:
        raise ValueError("values must be a non-empty 1-d sequence")
    return RankVector(tuple(_rank_array(arr)))


def _pearson_on_ranks(ra: np.ndarray, rb: np.ndarray) -> float:
    ac = ra - ra.mean()
    bc = rb - rb.mean()
    ssa = float(ac @ ac)
    ssb = float(bc @ bc)
    if ssa == 0.0 or ssb == 0.0:
        raise DegenerateCorrelationError(
            "undefined correlation: rank vector is constant"
        )
    rho = float(ac @ bc) / math.sqrt(ssa * ssb)
    return min(1.0, max(-1.0, rho))


def srcc(a, b) -> float:
    """Spearman's rank correlation coefficient between two value vectors.

    Computed as the Pearson correlation of the fractional-rank vectors,
    which stays correct when either input contains ties.  A constant rank
    vector has no defined correlation and raises
    :class:`DegenerateCorrelationError` rather than returning NaN.
    """
    av = np.asarray(a, dtype=float)
    bv = np.asarray(b, dtype=float)
    if av.ndim != 1 or bv.ndim != 1:
        raise ValueError("inputs must be 1-d sequences")
    if av.shape[0] != bv.shape[0]:
        raise ValueError(f"length mismatch: {av.shape[0]} vs {bv.shape[0]}")
    if av.shape[0] < 2:
        raise ValueError("correlation requires at least 2 observations")
    return _pearson_on_ranks(_rank_array(av), _rank_array(bv))


def missed_tie_effect(n: int, rank_a_i: float, rank_a_j: float, k: int) -> float:
    """Coefficient change caused by one missed tied rank.

    Two conditions hold consecutive ranks k and k+1 in one vector although
    they should share the tied rank k+0.5; the other vector ranks them
    rank_a_i and rank_a_j.  Returns the absolute change this mistake
    produces in the rank-difference form of the correlation coefficient:

        |6 / (n(n^2-1)) * (d_i^2 + d_j^2 - d'_i^2 - d'_j^2)|

    with d_i = rank_a_i - k, d_j = rank_a_j - (k+1) and d'_i, d'_j the
    same differences against the shared rank k+0.5.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must lie in [1, {n - 1}]")
    if not (1 <= rank_a_i <= n and 1 <= rank_a_j <= n):
        raise ValueError(f"ranks must lie in [1, {n}]")
    d_i = rank_a_i - k
    d_j = rank_a_j - (k + 1)
    dp_i = rank_a_i - (k + 0.5)
    dp_j = rank_a_j - (k + 0.5)
    return abs(6.0 / (n * (n * n - 1)) * (d_i**2 + d_j**2 - dp_i**2 - dp_j**2))


def max_missed_tie_effect(n: int, m: int) -> float:
    """Worst-case drop in the rank correlation from m missed tied ranks.

        6 m (n - m - 0.5) / (n (n^2 - 1))

    This bounds the largest possible decrease of the coefficient; it
    shrinks towards 0 as the number of conditions n grows.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if not 0 <= m <= n - 1:
        raise ValueError(f"m must lie in [0, {n - 1}]")
    return 6.0 * m * (n - m - 0.5) / (n * (n * n - 1))


def gap_analysis(dataset: Dataset) -> GapReport:
    """Measure how close consecutive MOS values sit relative to their CIs.

    Conditions are ranked by MOS descending (ties kept in ingestion
    order).  A consecutive pair counts towards ``tie_fraction`` when its
    gap is strictly smaller than the larger of the two CI half-widths,
    i.e. when at least one of the two conditions could plausibly swap
    places with its neighbour.
    """
    if len(dataset) < 2:
        raise ValueError("gap analysis requires at least 2 entries")
    order = sorted(range(len(dataset)), key=lambda i: (-dataset.entries[i].mos, i))
    ids = tuple(dataset.entries[i].condition_id for i in order)
    mos = tuple(dataset.entries[i].mos for i in order)
    ci = tuple(dataset.entries[i].ci95 for i in order)
    gaps = tuple(abs(mos[i] - mos[i + 1]) for i in range(len(mos) - 1))
    tied = sum(1 for i, g in enumerate(gaps) if g < max(ci[i], ci[i + 1]))
    return GapReport(ids, mos, ci, gaps, tied / len(gaps))
