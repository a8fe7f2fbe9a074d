"""Distributions of the sample overlap ``x = |P ∩ Q|``.

Three models are provided:

* :func:`binomial_pmf` treats each of the ``m1*m2`` sample pairs as an
  independent match with probability ``i / (n1*n2)``.
* :func:`union_pmf` is the hypergeometric-style model that partitions the
  union ``A ∪ B``; it is not a proper distribution over ``x`` and is
  normalized numerically.
* :func:`exact_pmf` counts (P, Q) configurations exactly.

All combinatorics run through log-gamma so that population sizes up to
~1e9 stay representable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy import stats
from scipy.special import betaln, gammaln, logsumexp

from .errors import DomainError, EmptySupportError, ResourceError

ModelTag = Literal["binomial", "union", "exact"]

_MAX_TRIALS = 2**63 - 1
DEFAULT_TERM_BUDGET = 10**8


@dataclass(frozen=True)
class PopulationPair:
    """Hidden truth: ``|A| = n1``, ``|B| = n2``, ``|A ∩ B| = i``.

    A is the reference set, so ``i <= n1 <= n2``; callers swap beforehand.
    """

    n1: int
    n2: int
    i: int

    def __post_init__(self):
        for name in ("n1", "n2", "i"):
            if int(getattr(self, name)) != getattr(self, name):
                raise DomainError(f"{name} must be an integer")
        if self.n1 < 1 or self.n2 < 1:
            raise DomainError("set sizes must be positive")
        if not 0 <= self.i <= self.n1 <= self.n2:
            raise DomainError(
                f"need 0 <= i <= n1 <= n2, got i={self.i}, n1={self.n1}, n2={self.n2}"
            )

    @property
    def phi1(self) -> float:
        return self.i / self.n1

    @property
    def phi2(self) -> float:
        return self.i / self.n2

    @property
    def jaccard(self) -> float:
        return self.i / (self.n1 + self.n2 - self.i)


@dataclass(frozen=True)
class SampleDesign:
    """Sample sizes ``m1 = |P|`` and ``m2 = |Q|``."""

    m1: int
    m2: int

    def __post_init__(self):
        if int(self.m1) != self.m1 or int(self.m2) != self.m2:
            raise DomainError("sample sizes must be integers")
        if self.m1 < 1 or self.m2 < 1:
            raise DomainError("sample sizes must be positive")

    def check(self, n1: int, n2: int) -> None:
        if self.m1 > n1 or self.m2 > n2:
            raise DomainError(
                f"sample sizes ({self.m1}, {self.m2}) exceed set sizes ({n1}, {n2})"
            )

    def rates(self, n1: int, n2: int) -> tuple[float, float]:
        self.check(n1, n2)
        return self.m1 / n1, self.m2 / n2

    def regime(self, pop: PopulationPair) -> dict[str, float]:
        """Diagnostic ratios for the sparse-sampling assumptions (not enforced)."""
        a1, a2 = self.rates(pop.n1, pop.n2)
        return {
            "alpha1": a1,
            "alpha2": a2,
            "pair_fraction": (self.m1 * self.m2) / (pop.n1 * pop.n2),
        }


@dataclass(frozen=True)
class OverlapPmf:
    """Log-space pmf over ``x`` on ``[support_min, support_max]``.

    ``log_normalizer`` is the log of the mass the raw model put on the
    support before renormalization (0 when none was needed).
    ``model_mean``/``model_variance`` carry the untruncated binomial moments.
    """

    support_min: int
    log_prob: np.ndarray
    model_tag: ModelTag
    log_normalizer: float = 0.0
    model_mean: float | None = None
    model_variance: float | None = None
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def support_max(self) -> int:
        return self.support_min + len(self.log_prob) - 1

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.support_min, self.support_max + 1)

    @property
    def prob(self) -> np.ndarray:
        return np.exp(self.log_prob)

    def at(self, x: int) -> float:
        if x < self.support_min or x > self.support_max:
            return 0.0
        return float(np.exp(self.log_prob[x - self.support_min]))


def log_comb(n, k):
    """log C(n, k) via the beta function; -inf where k is outside [0, n]."""
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    ok = (k >= 0) & (k <= n)
    with np.errstate(invalid="ignore", divide="ignore"):
        val = -np.log1p(n) - betaln(n - k + 1, k + 1)
    out = np.where(ok, val, -np.inf)
    return out if out.ndim else float(out)


def _trim(support_min: int, log_prob: np.ndarray) -> tuple[int, np.ndarray]:
    finite = np.flatnonzero(np.isfinite(log_prob))
    if finite.size == 0:
        raise EmptySupportError("no overlap value has positive probability")
    lo, hi = finite[0], finite[-1]
    return support_min + int(lo), log_prob[lo : hi + 1]


def _normalize(log_prob: np.ndarray) -> tuple[np.ndarray, float]:
    z = float(logsumexp(log_prob))
    return log_prob - z, z


def binomial_pmf(pop: PopulationPair, design: SampleDesign) -> OverlapPmf:
    """Bin(m1*m2, i/(n1*n2)) truncated to ``x <= min(m1, m2)``."""
    design.check(pop.n1, pop.n2)
    trials = design.m1 * design.m2
    if trials > _MAX_TRIALS:
        raise DomainError("m1*m2 overflows a 64-bit trial count")
    p = pop.i / (pop.n1 * pop.n2)
    mean = trials * p
    var = trials * p * (1.0 - p)
    top = min(design.m1, design.m2)
    x = np.arange(0, top + 1)
    if pop.i == 0:
        lp = np.full(top + 1, -np.inf)
        lp[0] = 0.0
    else:
        lp = stats.binom.logpmf(x, trials, p)
    lo, lp = _trim(0, lp)
    lp, z = _normalize(lp)
    return OverlapPmf(lo, lp, "binomial", z, mean, var)


def _union_log_terms(n1, n2, i, m1, m2, x):
    return (
        log_comb(i, x)
        + log_comb(n1 - i, m1 - x)
        + log_comb(n2 - i, m2 - x)
        - log_comb(n1 + n2 - i, m1 + m2 - x)
    )


def union_support(pop: PopulationPair, design: SampleDesign) -> tuple[int, int]:
    lo = max(0, design.m1 - (pop.n1 - pop.i), design.m2 - (pop.n2 - pop.i))
    hi = min(pop.i, design.m1, design.m2)
    return lo, hi


def union_pmf(pop: PopulationPair, design: SampleDesign) -> OverlapPmf:
    """Union-partition likelihood evaluated over x, renormalized numerically."""
    design.check(pop.n1, pop.n2)
    lo, hi = union_support(pop, design)
    if lo > hi:
        raise EmptySupportError("union model has empty support for this instance")
    x = np.arange(lo, hi + 1)
    lp = _union_log_terms(pop.n1, pop.n2, pop.i, design.m1, design.m2, x)
    lo, lp = _trim(lo, lp)
    lp, z = _normalize(lp)
    return OverlapPmf(lo, lp, "union", z)


def union_log_likelihood(x: int, n1: int, n2: int, i, m1: int, m2: int):
    """Unnormalized log P_u(x | i); ``i`` may be an array."""
    return _union_log_terms(n1, n2, i, m1, m2, x)


def exact_grid_terms(n1: int, n2: int, i: int, m1: int, m2: int) -> int:
    """Number of (a, b) grid cells the exact sum visits."""
    top = min(i, m1, m2)
    return sum((m1 - x + 1) * (m2 - x + 1) for x in range(top + 1))


def exact_log_pmf_raw(
    n1: int, n2: int, i: int, m1: int, m2: int, term_budget: int = DEFAULT_TERM_BUDGET
) -> tuple[int, np.ndarray]:
    """Exact log P(x | i) for x in [0, min(i, m1, m2)], no orientation checks.

    For each x the (a, b) grid is summed with a single log-sum-exp in
    row-major order (a outer, b inner), so results are deterministic.
    ``a`` counts intersection elements that land in P only, ``b`` those in Q only.
    """
    terms = exact_grid_terms(n1, n2, i, m1, m2)
    if terms > term_budget:
        raise ResourceError(f"exact pmf needs {terms} terms, budget is {term_budget}")
    top = min(i, m1, m2)
    log_total = log_comb(n1, m1) + log_comb(n2, m2)
    out = np.full(top + 1, -np.inf)
    for x in range(top + 1):
        rest = i - x
        a = np.arange(0, m1 - x + 1)[:, None]
        b = np.arange(0, m2 - x + 1)[None, :]
        ab = a + b
        with np.errstate(invalid="ignore"):
            # multinomial (rest; a, b, rest-a-b) = C(rest, a+b) * C(a+b, a)
            multi = np.where(
                ab <= rest,
                gammaln(rest + 1) - gammaln(a + 1) - gammaln(b + 1) - gammaln(np.maximum(rest - ab, 0) + 1),
                -np.inf,
            )
        grid = multi + log_comb(n1 - i, m1 - x - a) + log_comb(n2 - i, m2 - x - b)
        if np.isfinite(grid).any():
            out[x] = log_comb(i, x) + logsumexp(grid) - log_total
    return 0, out


def exact_pmf(
    pop: PopulationPair, design: SampleDesign, term_budget: int = DEFAULT_TERM_BUDGET
) -> OverlapPmf:
    """Exact distribution of x; cost is O(m1*m2) grid terms per x value."""
    design.check(pop.n1, pop.n2)
    lo, lp = exact_log_pmf_raw(pop.n1, pop.n2, pop.i, design.m1, design.m2, term_budget)
    lo, lp = _trim(lo, lp)
    return OverlapPmf(lo, lp, "exact")


def pmf_moments(pmf: OverlapPmf) -> tuple[float, float, int]:
    """Mean, variance and median (smallest x with CDF >= 0.5)."""
    p = pmf.prob
    x = pmf.support.astype(float)
    mean = float(np.dot(x, p))
    var = float(np.dot((x - mean) ** 2, p))
    cdf = np.cumsum(p)
    median = pmf.support_min + int(np.searchsorted(cdf, 0.5, side="left"))
    return mean, var, min(median, pmf.support_max)


def total_variation(p: OverlapPmf, q: OverlapPmf) -> float:
    lo = min(p.support_min, q.support_min)
    hi = max(p.support_max, q.support_max)
    dense_p = np.zeros(hi - lo + 1)
    dense_q = np.zeros(hi - lo + 1)
    dense_p[p.support_min - lo : p.support_max - lo + 1] = p.prob
    dense_q[q.support_min - lo : q.support_max - lo + 1] = q.prob
    return float(min(1.0, 0.5 * np.abs(dense_p - dense_q).sum()))


def pmf_from_counts(values, model_tag: ModelTag = "exact") -> OverlapPmf:
    """Empirical pmf from observed overlap counts (used for histogram checks)."""
    values = np.asarray(values, dtype=np.int64)
    lo = int(values.min())
    counts = np.bincount(values - lo).astype(float)
    with np.errstate(divide="ignore"):
        lp = np.log(counts / counts.sum())
    return OverlapPmf(lo, lp, model_tag)


def binomial_moments(pop: PopulationPair, design: SampleDesign) -> tuple[float, float]:
    """Untruncated binomial mean and standard deviation of x."""
    trials = design.m1 * design.m2
    p = pop.i / (pop.n1 * pop.n2)
    return trials * p, math.sqrt(trials * p * (1 - p))
