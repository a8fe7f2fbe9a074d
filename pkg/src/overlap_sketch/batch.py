"""Estimators built on batched MinHash sketches of samples.

Samples are split into disjoint batches by a seeded hash (stratified
partitioning), each batch is sketched, and pairwise sketch comparisons are
aggregated into containment or Jaccard estimates.

Batch-set container format (little-endian)::

    u32 batch_count | u64 partition_seed | batch_count x MHS1 sketch
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from typing import Literal, NamedTuple

import numpy as np

from . import _kernels
from .errors import DomainError, FamilyMismatchError, InvalidPairError, MalformedSketchError
from .minhash import HashFamily, MinHashSketch, as_elements, merge_all, read_sketch, serialize

Pair = tuple[int, int]


def stratified_partition(elements, batch_count: int, partition_seed: int) -> list[np.ndarray]:
    """Split elements into ``batch_count`` disjoint groups by ``hash(seed, e) % batch_count``."""
    if batch_count < 1:
        raise DomainError("batch_count must be at least 1")
    items = np.asarray(elements)
    values = as_elements(items)
    ids = _kernels.partition_ids(values, partition_seed, batch_count)
    return [items[ids == g] for g in range(batch_count)]


@dataclass(frozen=True, eq=False)
class BatchSketchSet:
    family: HashFamily
    sketches: tuple[MinHashSketch, ...]
    partition_seed: int

    def __post_init__(self):
        object.__setattr__(self, "sketches", tuple(self.sketches))
        for s in self.sketches:
            if s.family_id != self.family.family_id:
                raise FamilyMismatchError("all batch sketches must share one hash family")

    @property
    def batch_count(self) -> int:
        return len(self.sketches)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([s.source_size for s in self.sketches], dtype=np.int64)

    @property
    def batches(self) -> list[tuple[int, MinHashSketch]]:
        return [(s.source_size, s) for s in self.sketches]

    @property
    def minima(self) -> np.ndarray:
        return np.stack([s.minima for s in self.sketches])

    def merged(self) -> MinHashSketch:
        return merge_all(self.sketches)

    def __eq__(self, other):
        return (
            isinstance(other, BatchSketchSet)
            and self.partition_seed == other.partition_seed
            and self.sketches == other.sketches
        )

    def to_bytes(self) -> bytes:
        head = struct.pack("<IQ", self.batch_count, self.partition_seed)
        return head + b"".join(serialize(s) for s in self.sketches)

    @classmethod
    def from_bytes(cls, buf: bytes) -> "BatchSketchSet":
        if len(buf) < 12:
            raise MalformedSketchError("truncated batch header", len(buf))
        count, seed = struct.unpack_from("<IQ", buf, 0)
        if count == 0:
            raise MalformedSketchError("batch count must be positive", 0)
        offset = 12
        sketches = []
        for _ in range(count):
            sketch, offset = read_sketch(buf, offset)
            sketches.append(sketch)
        if offset != len(buf):
            raise MalformedSketchError("trailing bytes after batch set", offset)
        try:
            return cls(sketches[0].family, tuple(sketches), seed)
        except FamilyMismatchError as exc:
            raise MalformedSketchError(str(exc), 12) from None


def build_batch_sketches(
    elements, family: HashFamily, batch_count: int, partition_seed: int
) -> BatchSketchSet:
    """Partition the distinct elements and sketch every batch in a single pass."""
    if batch_count < 1:
        raise DomainError("batch_count must be at least 1")
    values = np.unique(as_elements(elements))
    ids = _kernels.partition_ids(values, partition_seed, batch_count)
    minima = _kernels.grouped_minhash(values, ids, batch_count, family.seeds)
    sizes = np.bincount(ids, minlength=batch_count)
    sketches = tuple(
        MinHashSketch(family, minima[g], int(sizes[g])) for g in range(batch_count)
    )
    return BatchSketchSet(family, sketches, int(partition_seed))


def pair_jprimes(p: BatchSketchSet, q: BatchSketchSet) -> np.ndarray:
    """Matrix of sketch Jaccard estimates; pairs touching an empty batch get 0."""
    if p.family.family_id != q.family.family_id:
        raise FamilyMismatchError("batch sets were built with different hash families")
    pm, qm = p.minima, q.minima
    jp = (pm[:, None, :] == qm[None, :, :]).mean(axis=2)
    jp[p.sizes == 0, :] = 0.0
    jp[:, q.sizes == 0] = 0.0
    return jp


def pair_xhat(j_prime, m1i, m2j):
    """Overlap estimate ``(m1i + m2j) J' / (1 + J')`` for one batch pair (vectorizes)."""
    jp = np.asarray(j_prime, dtype=float)
    if np.any(jp < 0) or np.any(jp > 1):
        raise DomainError("J' must lie in [0, 1]")
    out = (np.asarray(m1i) + np.asarray(m2j)) * jp / (1.0 + jp)
    return float(out) if out.ndim == 0 else out


def pair_xhat_mse_bound(x_hat, m1i, m2j, k: int):
    """Conditional MSE bound ``(m1i + m2j) x / k`` evaluated at ``x = x_hat``."""
    return (np.asarray(m1i) + np.asarray(m2j)) * np.asarray(x_hat) / k


def pair_sizes(p: BatchSketchSet, q: BatchSketchSet) -> tuple[np.ndarray, np.ndarray]:
    return p.sizes[:, None], q.sizes[None, :]


def batch_containment(
    p: BatchSketchSet, q: BatchSketchSet, n2: int, m1: int, m2: int
) -> tuple[float, np.ndarray]:
    """Containment ``phi_hat = x_hat * n2 / (m1 m2)`` with ``x_hat`` summed over pairs."""
    m1i, m2j = pair_sizes(p, q)
    xhat = pair_xhat(pair_jprimes(p, q), m1i, m2j)
    return float(xhat.sum()) * n2 / (m1 * m2), xhat


ErrorMode = Literal["binomial", "fallback", "unequal"]


def batch_containment_error(
    phi_hat: float,
    k: int,
    batch_size: int | float | tuple[int, int],
    m1: int,
    m2: int,
    n2: int,
    mode: ErrorMode = "binomial",
) -> float:
    """RMSE bound for :func:`batch_containment`.

    ``batch_size`` is the common batch size M, or ``(m1_max, m2_max)`` for
    unequal batches, in which case ``2M = m1_max + m2_max``.

    * ``binomial``: ``sqrt(2M n2 phi / (k m1 m2))`` with ``phi = min(phi_hat, 1)``
    * ``fallback``: ``(n2/m2) sqrt(2M / (k m1))``, no distributional assumption
    * ``unequal``: ``(n2/m2) sqrt((m1_max + m2_max) / (k m1))``
    """
    if isinstance(batch_size, tuple):
        two_m = float(batch_size[0] + batch_size[1])
    else:
        two_m = 2.0 * batch_size
    if mode == "binomial":
        phi = min(max(phi_hat, 0.0), 1.0)
        return math.sqrt(two_m * n2 * phi / (k * m1 * m2))
    if mode in ("fallback", "unequal"):
        return n2 / m2 * math.sqrt(two_m / (k * m1))
    raise DomainError(f"unknown error mode {mode!r}")


def correction_ratio(n1: float, n2: float, m1, m2):
    """``r = (1/n1 + 1/n2) / (1/m1 + 1/m2)``; vectorizes over m1, m2."""
    return (1.0 / n1 + 1.0 / n2) / (1.0 / np.asarray(m1, dtype=float) + 1.0 / np.asarray(m2, dtype=float))


def correct_jaccard(j_prime: float, r: float) -> tuple[float, bool]:
    """Map a sample-level Jaccard J' to a full-set estimate ``J'/(r - J'(1-r))``.

    Returns ``(j_hat, clamped)``.
    """
    denom = r - j_prime * (1.0 - r)
    if denom <= 0:
        raise InvalidPairError(f"r - J'(1-r) = {denom:.3g} is not positive")
    j = j_prime / denom
    if j > 1.0:
        return 1.0, True
    if j < 0.0:
        return 0.0, True
    return j, False


@dataclass(frozen=True)
class JaccardErrorModel:
    delta_s: float
    delta_m: float

    @property
    def delta_total(self) -> float:
        return math.hypot(self.delta_s, self.delta_m)


def jaccard_error_model(j_prime: float, r: float, m1: int, m2: int, k: int) -> JaccardErrorModel:
    """Sampling and MinHash error terms for :func:`correct_jaccard`."""
    denom = r - j_prime * (1.0 - r)
    if denom <= 0:
        raise InvalidPairError(f"r - J'(1-r) = {denom:.3g} is not positive")
    delta_s = math.sqrt(3.0 / ((m1 + m2) * denom**2))
    delta_mh = math.sqrt(j_prime * (1.0 - j_prime) / k)
    delta_m = delta_mh * (1.0 - j_prime * (1.0 - r)) / denom**2
    return JaccardErrorModel(delta_s, delta_m)


@dataclass
class RemovalState:
    v: list[Pair]
    cal_m_sq: float
    cal_s_sq: float
    c_scores: dict[Pair, tuple[float, float, float]]
    removed: list[Pair] = field(default_factory=list)

    @property
    def threshold(self) -> float:
        return 2 * len(self.v) * (self.cal_m_sq + self.cal_s_sq)


def removal_scores(v, j_primes, r, pair_size, k: int) -> RemovalState:
    """Per-pair error contributions and their aggregates over ``v``.

    ``r`` and ``pair_size`` (``2M``, or ``m1i + m2j``) may be scalars or
    matrices shaped like ``j_primes``.
    """
    v = list(v)
    if not v:
        raise DomainError("removal scores need at least one valid pair")
    jp = np.asarray(j_primes, dtype=float)
    r_arr = np.broadcast_to(np.asarray(r, dtype=float), jp.shape)
    size_arr = np.broadcast_to(np.asarray(pair_size, dtype=float), jp.shape)
    scores: dict[Pair, tuple[float, float, float]] = {}
    for pair in v:
        j, rr, size = jp[pair], r_arr[pair], size_arr[pair]
        denom = rr * (1.0 + j) - j
        if denom <= 0:
            raise InvalidPairError(f"pair {pair} has nonpositive denominator")
        cm = (1.0 - j * (1.0 - rr)) ** 2 / denom**4 * j * (1.0 - j) / k
        cs = 3.0 / size / denom**2
        scores[pair] = (cm, cs, cm + cs)
    n = len(v)
    m_sq = sum(scores[p][0] for p in v) / n**2
    s_sq = sum(scores[p][1] for p in v) / n**2
    return RemovalState(v, m_sq, s_sq, scores)


class BatchSimilarity(NamedTuple):
    j_hat: float
    state: RemovalState | None
    j_fm: float
    used_full_minhash: bool


def batch_similarity(
    p: BatchSketchSet,
    q: BatchSketchSet,
    n1: int,
    n2: int,
    fallback_rule: Literal["prose", "pseudocode"] = "prose",
) -> BatchSimilarity:
    """Jaccard estimate from batched sketches with greedy removal of high-error pairs.

    Pairs whose implied intersection exceeds ``n1`` are dropped first. Then
    the pair with the largest error contribution ``C`` is removed while
    ``C > 2|V|(M^2 + S^2)``. The mean of the per-pair corrected estimates is
    returned unless at most one pair survives or the batch error exceeds the
    full-MinHash error ``J_fm (1 - J_fm) / k``; then the estimate from the
    merged sketches is used. ``fallback_rule="pseudocode"`` flips that last
    comparison.
    """
    k = p.family.k
    jp = pair_jprimes(p, q)
    m1i, m2j = pair_sizes(p, q)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = correction_ratio(n1, n2, m1i, m2j)
        size = (m1i + m2j).astype(float)
        xhat = size * jp / (1.0 + jp)
        nonempty = (m1i > 0) & (m2j > 0)
        valid = nonempty & (xhat * n2 <= m1i * m2j)
    r_fm = float(correction_ratio(n1, n2, p.sizes.sum(), q.sizes.sum()))
    jp_fm = float(np.count_nonzero(p.merged().minima == q.merged().minima)) / k
    try:
        j_fm, _ = correct_jaccard(jp_fm, r_fm)
    except InvalidPairError:
        j_fm = 1.0
    full_error = j_fm * (1.0 - j_fm) / k

    v = [tuple(map(int, ij)) for ij in np.argwhere(valid)]
    state = None
    removed: list[Pair] = []
    j_hat = j_fm
    while len(v) > 1:
        state = removal_scores(v, jp, r, size, k)
        worst = max(v, key=lambda pr: state.c_scores[pr][2])
        if state.c_scores[worst][2] > state.threshold:
            v.remove(worst)
            removed.append(worst)
            continue
        j_hat = float(np.mean([correct_jaccard(jp[pr], r[pr])[0] for pr in v]))
        break
    if len(v) == 1:
        state = removal_scores(v, jp, r, size, k)
    if state is not None:
        state.removed = removed
    batch_error = state.cal_m_sq + state.cal_s_sq if state is not None else math.inf
    if fallback_rule == "prose":
        fall_back = len(v) <= 1 or batch_error > full_error
    elif fallback_rule == "pseudocode":
        fall_back = len(v) <= 1 or batch_error < full_error
    else:
        raise DomainError(f"unknown fallback rule {fallback_rule!r}")
    if fall_back:
        j_hat = j_fm
    return BatchSimilarity(j_hat, state, j_fm, fall_back)
