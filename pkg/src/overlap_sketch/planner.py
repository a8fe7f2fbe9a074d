"""Posterior error bounds, sample-size planning and the sketching cost model."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, NamedTuple

from .errors import DomainError, InfeasiblePlanError
from .likelihood import SampleDesign


@dataclass(frozen=True)
class PosteriorSummary:
    alpha: float
    beta: float
    beta_variance: float
    mse_bound_i: float
    mse_bound_i_loose: float
    mse_bound_phi1: float
    mse_bound_phi2: float


def beta_variance(alpha: float, beta: float) -> float:
    s = alpha + beta
    return alpha * beta / (s * s * (s + 1.0))


def posterior_summary(x: int, n1: int, n2: int, design: SampleDesign) -> PosteriorSummary:
    """Beta(x+1, m1*m2-x+1) posterior summary and the MSE bounds it implies."""
    trials = design.m1 * design.m2
    if x < 0 or x > trials:
        raise DomainError(f"x={x} outside [0, m1*m2]")
    alpha = x + 1.0
    beta = trials - x + 1.0
    scale = float(n1) * float(n2)
    t = float(trials)
    mse_i = scale**2 * x * (t - x) / (t**2 * (t + 1.0))
    loose = x * scale**2 / t**2
    return PosteriorSummary(
        alpha=alpha,
        beta=beta,
        beta_variance=beta_variance(alpha, beta),
        mse_bound_i=mse_i,
        mse_bound_i_loose=loose,
        mse_bound_phi1=x * float(n2) ** 2 / t**2,
        mse_bound_phi2=x * float(n1) ** 2 / t**2,
    )


@dataclass(frozen=True)
class AccuracySpec:
    """RMSE target ``delta`` and failure probability ``epsilon``."""

    delta: float
    epsilon: float

    def __post_init__(self):
        if not (0.0 < self.delta < 1.0 and 0.0 < self.epsilon < 1.0):
            raise DomainError("delta and epsilon must lie strictly inside (0, 1)")


def validity_condition(phi: float, epsilon: float, n1: float, simplified: bool = False) -> float:
    """Required ``alpha1*alpha2`` so that ``i_hat > n1`` has probability <= epsilon.

    The default is the full Chernoff solution
    ``ln(1/eps)/n1 * (2 + phi/(1-phi)) / (1-phi)``; ``simplified=True`` gives
    the looser ``2 ln(1/eps) / ((1-phi)^2 n1)``.
    """
    if not 0.0 <= phi < 1.0:
        raise DomainError("validity condition needs 0 <= phi < 1")
    if not 0.0 < epsilon < 1.0:
        raise DomainError("epsilon must lie in (0, 1)")
    log_term = math.log(1.0 / epsilon)
    if simplified:
        return 2.0 * log_term / ((1.0 - phi) ** 2 * n1)
    return log_term / n1 * (2.0 + phi / (1.0 - phi)) / (1.0 - phi)


PlanMode = Literal["valid-case", "posterior-only"]


@dataclass(frozen=True)
class SamplingPlan:
    alpha1: float
    alpha2: float
    m1: int
    m2: int
    binding: str
    mode: str
    condition_values: dict[str, float] = field(default_factory=dict)

    def symmetric_rates(self) -> dict[str, float]:
        """Per-condition symmetric rate, i.e. the rate each condition alone would demand."""
        out = {}
        for name, req in self.condition_values.items():
            out[name] = math.sqrt(req) if name != "accuracy_posterior" else req ** (1.0 / 3.0)
        return out


def plan_containment(
    spec: AccuracySpec,
    phi: float,
    n1: int,
    n2: int,
    mode: PlanMode = "valid-case",
    alpha1: float | None = None,
    alpha2: float | None = None,
) -> SamplingPlan:
    """Sampling rates meeting the accuracy target (and validity, in valid-case mode).

    Rates are symmetric unless one of ``alpha1``/``alpha2`` is fixed, in which
    case the other is solved for.
    """
    if not 0.0 <= phi < 1.0:
        raise DomainError("phi must lie in [0, 1)")
    if alpha1 is not None and alpha2 is not None:
        raise DomainError("fix at most one of alpha1, alpha2")
    accuracy = 1.0 / (spec.delta**2 * n1)
    conditions: dict[str, float] = {}
    if mode == "valid-case":
        validity = validity_condition(phi, spec.epsilon, n1)
        conditions = {
            "accuracy": accuracy,
            "validity": validity,
            "validity_simplified": validity_condition(phi, spec.epsilon, n1, simplified=True),
        }
        binding = "accuracy" if accuracy >= validity else "validity"
        product = max(accuracy, validity)
        if alpha1 is not None:
            a1, a2 = alpha1, product / alpha1
        elif alpha2 is not None:
            a1, a2 = product / alpha2, alpha2
        else:
            a1 = a2 = math.sqrt(product)
    elif mode == "posterior-only":
        # alpha1 * alpha2**2 >= 1 / (delta^2 n1)
        conditions = {"accuracy_posterior": accuracy}
        binding = "accuracy"
        if alpha1 is not None:
            a1, a2 = alpha1, math.sqrt(accuracy / alpha1)
        elif alpha2 is not None:
            a1, a2 = accuracy / alpha2**2, alpha2
        else:
            a1 = a2 = accuracy ** (1.0 / 3.0)
    else:
        raise DomainError(f"unknown plan mode {mode!r}")
    if a1 > 1.0 or a2 > 1.0:
        raise InfeasiblePlanError(f"required sampling rates ({a1:.4g}, {a2:.4g}) exceed 1")
    return SamplingPlan(a1, a2, math.ceil(a1 * n1), math.ceil(a2 * n2), binding, mode, conditions)


class JaccardRequirement(NamedTuple):
    product: float
    simplified: float
    lower_root: float
    c: float


def plan_jaccard(spec: AccuracySpec, i: float) -> JaccardRequirement:
    """Required ``alpha1*alpha2`` so that ``x >= c = 4/delta^2`` with prob. >= 1-eps.

    Solves ``exp(-(1 - c/mu)^2 mu / 2) <= eps`` for ``mu = i*alpha1*alpha2``
    on the branch ``mu > c``: ``mu = c + L + sqrt(L (2c + L))`` with
    ``L = ln(1/eps)``. ``lower_root`` is the other root of the quadratic
    (``mu < c``), which does not bound the lower tail.
    """
    if i < 1:
        raise DomainError("expected intersection must be at least 1")
    c = 4.0 / spec.delta**2
    L = math.log(1.0 / spec.epsilon)
    root = math.sqrt(L * (2.0 * c + L))
    return JaccardRequirement((c + L + root) / i, c / i, (c + L - root) / i, c)


@dataclass(frozen=True)
class CostModel:
    """Unit costs: ``f`` fetch one hash value, ``h`` hash one element in the
    database, ``s`` local disk read/write of one element. In-memory ops cost 1."""

    f: float
    h: float
    s: float

    def __post_init__(self):
        if min(self.f, self.h, self.s) < 0:
            raise DomainError("costs must be non-negative")


class RuntimeEstimate(NamedTuple):
    t1: float
    t2: float
    t1_batched: float
    t2_batched: float


def runtime_estimate(
    costs: CostModel,
    n1: int,
    m1: int,
    a: int,
    b: int,
    k: int,
    batch_size: int,
    c1: float = 50.0,
    c2: float = 50.0,
) -> RuntimeEstimate:
    """Sketch-creation (t1) and comparison (t2) times, full MinHash vs batched."""
    f, h, s = costs.f, costs.h, costs.s
    batches = n1 / batch_size
    t1 = k * n1 * h + k * batches * f + k * batches + k * s
    t2 = 2 * k * s + c1 * k
    t1b = k * m1 * h + a * m1 * h + k * a * f + k * a * s
    t2b = k * a * s + k * b * s + c2 * a * b * k
    return RuntimeEstimate(t1, t2, t1b, t2b)
