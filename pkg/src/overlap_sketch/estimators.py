"""Point estimators for the intersection size, containment and Jaccard index."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EmptySupportError
from .likelihood import SampleDesign, union_log_likelihood


@dataclass(frozen=True)
class ContainmentEstimate:
    i_hat: float
    phi1_hat: float
    phi2_hat: float
    j_hat: float
    valid: bool
    j_clamped: bool = False


def jaccard_from_intersection(i_hat: float, n1: int, n2: int) -> tuple[float, bool]:
    """Return ``(J, clamped)`` with ``J = i/(n1 + n2 - i)`` clipped to [0, 1]."""
    denom = n1 + n2 - i_hat
    if denom <= 0:
        raise DomainError("intersection estimate is at least n1 + n2")
    j = i_hat / denom
    if j < 0.0:
        return 0.0, True
    if j > 1.0:
        return 1.0, True
    return j, False


def intersection_from_jaccard(j: float, n1: int, n2: int) -> float:
    return j * (n1 + n2) / (1.0 + j)


def estimate_binomial(x: int, n1: int, n2: int, design: SampleDesign) -> ContainmentEstimate:
    """``i_hat = x * n1 * n2 / (m1 * m2)``.

    The estimate is flagged invalid only when it strictly exceeds n1.
    """
    m1, m2 = design.m1, design.m2
    if x < 0 or x > min(m1, m2):
        raise DomainError(f"x={x} outside [0, min(m1, m2)={min(m1, m2)}]")
    i_hat = x * n1 * n2 / (m1 * m2)
    valid = x * n2 <= m1 * m2
    if x * n1 * n2 >= (n1 + n2) * m1 * m2:
        j_hat, clamped = 1.0, True
    else:
        j_hat, clamped = jaccard_from_intersection(i_hat, n1, n2)
    return ContainmentEstimate(i_hat, i_hat / n1, i_hat / n2, j_hat, valid, clamped)


def estimate_union_mle(x: int, n1: int, n2: int, design: SampleDesign) -> int:
    """Grid argmax of the union likelihood over i in [x, n1]; ties go to the smaller i."""
    grid = np.arange(x, n1 + 1)
    ll = union_log_likelihood(x, n1, n2, grid, design.m1, design.m2)
    if not np.isfinite(ll).any():
        raise EmptySupportError(f"no intersection size admits x={x} under the union model")
    return int(grid[int(np.argmax(ll))])


def fractional_jaccard_error_bound(x: int, n1: int, n2: int, loose: bool = False) -> float:
    """Fractional standard error bound on the Jaccard estimate.

    ``(1 + n1/n2) / sqrt(x)``, or ``2 / sqrt(x)`` with ``loose=True``.
    """
    if x <= 0:
        raise DomainError("bound undefined for x = 0: insufficient overlap")
    if loose:
        return 2.0 / math.sqrt(x)
    return (1.0 + n1 / n2) / math.sqrt(x)
