"""Position-wise MinHash sketches: k seeded hash functions, one minimum each.

Binary format (little-endian)::

    b"MHS1" | u32 k | k x u64 seeds | u64 source_size | k x u64 minima
"""
from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import _kernels
from .errors import DomainError, EmptySketchError, FamilyMismatchError, MalformedSketchError

MAGIC = b"MHS1"
SENTINEL = int(_kernels.SENTINEL)


def token_to_u64(token: bytes | str) -> int:
    """Hash an arbitrary token to 64 bits (blake2b, little-endian)."""
    if isinstance(token, str):
        token = token.encode("utf-8")
    return int.from_bytes(hashlib.blake2b(token, digest_size=8).digest(), "little")


def as_elements(items) -> np.ndarray:
    """Canonical uint64 encoding of a collection of elements.

    Integers are taken as signed 64-bit and reinterpreted (two's complement);
    ``bytes``/``str`` items are hashed with :func:`token_to_u64`.
    """
    if isinstance(items, np.ndarray):
        if items.dtype == np.uint64:
            return items
        if np.issubdtype(items.dtype, np.integer):
            return items.astype(np.int64).view(np.uint64)
    items = list(items)
    if not items:
        return np.empty(0, dtype=np.uint64)
    if isinstance(items[0], (bytes, str)):
        return np.fromiter((token_to_u64(t) for t in items), dtype=np.uint64, count=len(items))
    return np.asarray(items, dtype=np.int64).view(np.uint64)


@dataclass(frozen=True, eq=False)
class HashFamily:
    seeds: np.ndarray

    def __post_init__(self):
        seeds = np.ascontiguousarray(self.seeds, dtype=np.uint64)
        if seeds.ndim != 1 or seeds.size == 0:
            raise DomainError("a hash family needs at least one seed")
        if np.unique(seeds).size != seeds.size:
            raise DomainError("hash family seeds must be pairwise distinct")
        seeds.setflags(write=False)
        object.__setattr__(self, "seeds", seeds)

    @classmethod
    def random(cls, k: int, rng: np.random.Generator | int | None = None) -> "HashFamily":
        rng = np.random.default_rng(rng)
        while True:
            seeds = rng.integers(0, 2**64, size=k, dtype=np.uint64, endpoint=False)
            if np.unique(seeds).size == k:
                return cls(seeds)

    @property
    def k(self) -> int:
        return int(self.seeds.size)

    @property
    def family_id(self) -> str:
        h = hashlib.blake2b(digest_size=16)
        h.update(struct.pack("<I", self.k))
        h.update(self.seeds.astype("<u8").tobytes())
        return h.hexdigest()

    def __eq__(self, other):
        return isinstance(other, HashFamily) and np.array_equal(self.seeds, other.seeds)

    def __hash__(self):
        return hash(self.family_id)


@dataclass(frozen=True, eq=False)
class MinHashSketch:
    family: HashFamily
    minima: np.ndarray
    source_size: int

    def __post_init__(self):
        minima = np.ascontiguousarray(self.minima, dtype=np.uint64)
        if minima.shape != (self.family.k,):
            raise DomainError("minima length must equal the family size k")
        minima.setflags(write=False)
        object.__setattr__(self, "minima", minima)

    @property
    def k(self) -> int:
        return self.family.k

    @property
    def family_id(self) -> str:
        return self.family.family_id

    @property
    def is_empty(self) -> bool:
        return bool((self.minima == _kernels.SENTINEL).all())

    @classmethod
    def empty(cls, family: HashFamily) -> "MinHashSketch":
        return cls(family, np.full(family.k, _kernels.SENTINEL, dtype=np.uint64), 0)

    def __eq__(self, other):
        return (
            isinstance(other, MinHashSketch)
            and self.family == other.family
            and self.source_size == other.source_size
            and np.array_equal(self.minima, other.minima)
        )

    def to_bytes(self) -> bytes:
        return serialize(self)

    def to_json(self) -> str:
        return json.dumps(
            {
                "k": self.k,
                "seeds": [str(int(s)) for s in self.family.seeds],
                "source_size": self.source_size,
                "minima": [str(int(m)) for m in self.minima],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "MinHashSketch":
        doc = json.loads(text)
        seeds = np.array([int(s) for s in doc["seeds"]], dtype=np.uint64)
        minima = np.array([int(m) for m in doc["minima"]], dtype=np.uint64)
        if len(seeds) != doc["k"] or len(minima) != doc["k"]:
            raise ValueError("JSON sketch length does not match k")
        return cls(HashFamily(seeds), minima, int(doc["source_size"]))


def build_sketch(elements: Iterable | np.ndarray, family: HashFamily) -> MinHashSketch:
    """Sketch the distinct elements of ``elements``."""
    values = np.unique(as_elements(elements))
    return MinHashSketch(family, _kernels.minhash_minima(values, family.seeds), int(values.size))


def _check_family(s1: MinHashSketch, s2: MinHashSketch) -> None:
    if s1.family_id != s2.family_id:
        raise FamilyMismatchError("sketches were built with different hash families")


def merge_sketches(s1: MinHashSketch, s2: MinHashSketch) -> MinHashSketch:
    """Position-wise minimum. ``source_size`` adds up, which is exact only for disjoint sources."""
    _check_family(s1, s2)
    return MinHashSketch(
        s1.family, np.minimum(s1.minima, s2.minima), s1.source_size + s2.source_size
    )


def merge_all(sketches: Iterable[MinHashSketch]) -> MinHashSketch:
    sketches = list(sketches)
    out = sketches[0]
    for s in sketches[1:]:
        out = merge_sketches(out, s)
    return out


def estimate_sample_jaccard(s1: MinHashSketch, s2: MinHashSketch) -> float:
    """Fraction of positions where the two sketches hold the same minimum."""
    _check_family(s1, s2)
    if s1.is_empty or s2.is_empty:
        raise EmptySketchError("cannot estimate Jaccard from an empty sketch")
    return float(np.count_nonzero(s1.minima == s2.minima)) / s1.k


def serialize(sketch: MinHashSketch) -> bytes:
    return b"".join(
        (
            MAGIC,
            struct.pack("<I", sketch.k),
            sketch.family.seeds.astype("<u8").tobytes(),
            struct.pack("<Q", sketch.source_size),
            sketch.minima.astype("<u8").tobytes(),
        )
    )


def read_sketch(buf: bytes | memoryview, offset: int = 0) -> tuple[MinHashSketch, int]:
    """Parse one sketch starting at ``offset``; return it and the next offset."""
    buf = memoryview(buf)

    def need(n: int, what: str) -> None:
        if offset + n > len(buf):
            raise MalformedSketchError(f"truncated stream while reading {what}", offset)

    need(4, "magic")
    if bytes(buf[offset : offset + 4]) != MAGIC:
        raise MalformedSketchError("bad magic bytes", offset)
    offset += 4
    need(4, "k")
    (k,) = struct.unpack_from("<I", buf, offset)
    if k == 0:
        raise MalformedSketchError("k must be positive", offset)
    offset += 4
    need(8 * k, "seeds")
    seeds_at = offset
    seeds = np.frombuffer(buf, dtype="<u8", count=k, offset=offset).astype(np.uint64)
    offset += 8 * k
    need(8, "source_size")
    (size,) = struct.unpack_from("<Q", buf, offset)
    offset += 8
    need(8 * k, "minima")
    minima = np.frombuffer(buf, dtype="<u8", count=k, offset=offset).astype(np.uint64)
    offset += 8 * k
    try:
        family = HashFamily(seeds)
    except ValueError as exc:
        raise MalformedSketchError(str(exc), seeds_at) from None
    return MinHashSketch(family, minima, int(size)), offset


def deserialize(buf: bytes) -> MinHashSketch:
    sketch, end = read_sketch(buf)
    if end != len(buf):
        raise MalformedSketchError("trailing bytes after sketch", end)
    return sketch
