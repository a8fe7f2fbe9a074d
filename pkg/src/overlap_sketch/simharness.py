"""Seeded Monte-Carlo experiments over synthetic overlapping integer sets.

Sets are integer intervals ``A = [i - n1 + 1, i]`` and ``B = [1, n2]`` so
``|A ∩ B| = i`` without materializing either set. Every trial draws its own
generator from ``SeedSequence([master_seed, trial_index])``, which makes
trials reproducible individually and independent of execution order.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial
from typing import Callable, Literal

import numpy as np

from . import _kernels
from .batch import (
    batch_containment,
    batch_containment_error,
    build_batch_sketches,
    correct_jaccard,
    correction_ratio,
    jaccard_error_model,
)
from .errors import DomainError, InvalidPairError
from .estimators import estimate_binomial
from .likelihood import (
    PopulationPair,
    SampleDesign,
    binomial_moments,
    exact_grid_terms,
    exact_pmf,
    pmf_moments,
    union_pmf,
    union_support,
)
from .minhash import HashFamily, as_elements, build_sketch, estimate_sample_jaccard
from .planner import posterior_summary

Mode = Literal["overlap-dist", "containment", "batch-phi", "jaccard-z"]
MODES = ("overlap-dist", "containment", "batch-phi", "jaccard-z")
_MODE_PARAMS = {
    "overlap-dist": (),
    "containment": (),
    "batch-phi": ("a", "b", "k"),
    "jaccard-z": ("k",),
}


@dataclass(frozen=True)
class Interval:
    """Closed integer interval ``[lo, hi]``."""

    lo: int
    hi: int

    def __len__(self) -> int:
        return max(0, self.hi - self.lo + 1)

    def __contains__(self, value: int) -> bool:
        return self.lo <= value <= self.hi

    def intersect(self, other: "Interval") -> "Interval":
        return Interval(max(self.lo, other.lo), min(self.hi, other.hi))


def make_overlapping_sets(n1: int, n2: int, i: int) -> tuple[Interval, Interval]:
    if not 0 <= i <= n1 <= n2:
        raise DomainError("need 0 <= i <= n1 <= n2")
    return Interval(i - n1 + 1, i), Interval(1, n2)


def sample_uniform(interval: Interval, m: int, rng: np.random.Generator) -> np.ndarray:
    """``m`` distinct elements, every m-subset equally likely.

    Delegates to ``Generator.choice(replace=False)`` over the index space,
    then shifts indices to interval values.
    """
    if m < 0 or m > len(interval):
        raise DomainError(f"cannot draw {m} elements from an interval of length {len(interval)}")
    if m == 0:
        return np.empty(0, dtype=np.int64)
    return rng.choice(len(interval), size=m, replace=False).astype(np.int64) + interval.lo


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), int(trial_index)]))


@dataclass(frozen=True)
class ExperimentConfig:
    pop: PopulationPair
    design: SampleDesign
    trials: int
    master_seed: int = 0
    mode: Mode = "overlap-dist"
    a: int | None = None
    b: int | None = None
    k: int | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise DomainError(f"unknown mode {self.mode!r}")
        if self.trials < 1:
            raise DomainError("trials must be at least 1")
        if not 0 <= self.master_seed < 2**64:
            raise DomainError("master_seed must be a 64-bit unsigned integer")
        self.design.check(self.pop.n1, self.pop.n2)
        needed = _MODE_PARAMS[self.mode]
        for name in ("a", "b", "k"):
            value = getattr(self, name)
            if name in needed and (value is None or value < 1):
                raise DomainError(f"mode {self.mode} requires a positive {name}")
            if name not in needed and value is not None:
                raise DomainError(f"mode {self.mode} does not take {name}")

    def to_dict(self) -> dict:
        out = {
            "pop": asdict(self.pop),
            "design": asdict(self.design),
            "trials": self.trials,
            "master_seed": self.master_seed,
            "mode": self.mode,
        }
        for name in _MODE_PARAMS[self.mode]:
            out[name] = getattr(self, name)
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {"pop", "design", "trials", "master_seed", "mode", "a", "b", "k"}
        extra = set(doc) - known
        if extra:
            raise DomainError(f"unknown config keys: {sorted(extra)}")
        return cls(
            pop=PopulationPair(**doc["pop"]),
            design=SampleDesign(**doc["design"]),
            trials=int(doc["trials"]),
            master_seed=int(doc.get("master_seed", 0)),
            mode=doc.get("mode", "overlap-dist"),
            a=doc.get("a"),
            b=doc.get("b"),
            k=doc.get("k"),
        )


@dataclass
class TrialRecord:
    trial_index: int
    estimate: float | None
    x: int | None = None
    delta: float | None = None
    z: float | None = None
    valid: bool = True
    extra: dict = field(default_factory=dict)


@dataclass
class ExperimentReport:
    records: list[TrialRecord]
    truth: float
    mean: float
    median: float
    std: float
    rmse: float
    bias: float
    n_used: int
    invalid_count: int = 0
    bound_values: dict[str, float] = field(default_factory=dict)
    config: ExperimentConfig | None = None

    def summary(self) -> dict:
        return {
            "truth": self.truth,
            "mean": self.mean,
            "median": self.median,
            "std": self.std,
            "rmse": self.rmse,
            "bias": self.bias,
            "n_used": self.n_used,
            "invalid_count": self.invalid_count,
            "bound_values": dict(self.bound_values),
        }

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict() if self.config else None,
            "summary": self.summary(),
            "records": [asdict(r) for r in self.records],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False, default=_json_default)

    def to_csv(self) -> str:
        extra_keys = sorted({k for r in self.records for k in r.extra})
        columns = ["trial_index", "estimate", "x", "delta", "z", "valid", *extra_keys]
        buf = io.StringIO()
        buf.write("# columns: " + ",".join(columns) + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for r in self.records:
            row = [r.trial_index, r.estimate, r.x, r.delta, r.z, int(r.valid)]
            row += [r.extra.get(k) for k in extra_keys]
            writer.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])
        return buf.getvalue()


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def summary_stats(values, truth: float) -> dict[str, float]:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise DomainError("cannot summarize an empty set of records")
    err = v - truth
    return {
        "mean": float(v.mean()),
        "median": float(np.median(v)),
        "std": float(v.std(ddof=1)) if v.size > 1 else 0.0,
        "rmse": float(math.sqrt(np.mean(err * err))),
        "bias": float(v.mean() - truth),
    }


def summarize(
    records: list[TrialRecord],
    truth: float,
    bound_values: dict | None = None,
    config: ExperimentConfig | None = None,
) -> ExperimentReport:
    """Statistics over valid records; std uses n-1, rmse is about ``truth``."""
    if not records:
        raise DomainError("cannot summarize an empty set of records")
    records = sorted(records, key=lambda r: r.trial_index)
    used = [r.estimate for r in records if r.valid and r.estimate is not None]
    stats = summary_stats(used, truth)
    return ExperimentReport(
        records=records,
        truth=truth,
        n_used=len(used),
        invalid_count=len(records) - len(used),
        bound_values=dict(bound_values or {}),
        config=config,
        **stats,
    )


def _draw_samples(config: ExperimentConfig, rng: np.random.Generator):
    a_set, b_set = make_overlapping_sets(config.pop.n1, config.pop.n2, config.pop.i)
    p = sample_uniform(a_set, config.design.m1, rng)
    q = sample_uniform(b_set, config.design.m2, rng)
    return p, q


def _common(p: np.ndarray, q: np.ndarray, i: int) -> np.ndarray:
    return np.intersect1d(p[p >= 1], q[q <= i], assume_unique=True)


def _overlap_trial(config: ExperimentConfig, index: int) -> TrialRecord:
    rng = trial_rng(config.master_seed, index)
    p, q = _draw_samples(config, rng)
    x = int(_common(p, q, config.pop.i).size)
    if config.mode == "overlap-dist":
        return TrialRecord(index, float(x), x=x)
    pop = config.pop
    est = estimate_binomial(x, pop.n1, pop.n2, config.design)
    post = posterior_summary(x, pop.n1, pop.n2, config.design)
    return TrialRecord(
        index,
        est.phi1_hat,
        x=x,
        valid=est.valid,
        extra={
            "i_hat": est.i_hat,
            "mse_bound_i": post.mse_bound_i,
            "mse_bound_i_loose": post.mse_bound_i_loose,
        },
    )


def _batch_trial(config: ExperimentConfig, index: int) -> TrialRecord:
    rng = trial_rng(config.master_seed, index)
    p, q = _draw_samples(config, rng)
    family = HashFamily.random(config.k, rng)
    seed_a, seed_b = (int(s) for s in rng.integers(0, 2**64, size=2, dtype=np.uint64, endpoint=False))
    pb = build_batch_sketches(p, family, config.a, seed_a)
    qb = build_batch_sketches(q, family, config.b, seed_b)
    m1, m2, n2 = config.design.m1, config.design.m2, config.pop.n2
    phi_hat, xhat = batch_containment(pb, qb, n2, m1, m2)

    jp_full = estimate_sample_jaccard(pb.merged(), qb.merged())
    phi_full = (m1 + m2) * jp_full / (1.0 + jp_full) * n2 / (m1 * m2)

    common = as_elements(_common(p, q, config.pop.i))
    x_pairs = np.zeros((config.a, config.b), dtype=np.int64)
    np.add.at(
        x_pairs,
        (
            _kernels.partition_ids(common, seed_a, config.a),
            _kernels.partition_ids(common, seed_b, config.b),
        ),
        1,
    )
    m1i = pb.sizes[:, None]
    m2j = qb.sizes[None, :]
    limit = 3.0 * np.sqrt((m1i + m2j) * x_pairs / config.k)
    within = np.abs(xhat - x_pairs) <= limit + 1e-9
    nonzero = x_pairs > 0
    m1_max, m2_max = int(pb.sizes.max()), int(qb.sizes.max())
    return TrialRecord(
        index,
        phi_hat,
        x=int(common.size),
        extra={
            "phi_full": phi_full,
            "m1_max": m1_max,
            "m2_max": m2_max,
            "pairs_total": int(within.size),
            "pairs_within": int(within.sum()),
            "pairs_nonzero": int(nonzero.sum()),
            "pairs_within_nonzero": int((within & nonzero).sum()),
            "bound_binomial": batch_containment_error(
                config.pop.phi1, config.k, (m1_max, m2_max), m1, m2, n2, "binomial"
            ),
        },
    )


def _jaccard_trial(config: ExperimentConfig, index: int) -> TrialRecord:
    rng = trial_rng(config.master_seed, index)
    p, q = _draw_samples(config, rng)
    family = HashFamily.random(config.k, rng)
    pop, design = config.pop, config.design
    jp = estimate_sample_jaccard(build_sketch(p, family), build_sketch(q, family))
    x = int(_common(p, q, pop.i).size)
    j_sampling = estimate_binomial(x, pop.n1, pop.n2, design).j_hat
    extra = {"j_prime": jp, "j_sampling": j_sampling}
    r = float(correction_ratio(pop.n1, pop.n2, design.m1, design.m2))
    try:
        j_hat, _ = correct_jaccard(jp, r)
        delta = jaccard_error_model(jp, r, design.m1, design.m2, config.k).delta_total
    except InvalidPairError:
        return TrialRecord(index, None, x=x, valid=False, extra=extra)
    z = (j_hat - pop.jaccard) / delta if delta > 0 else None
    return TrialRecord(index, j_hat, x=x, delta=delta, z=z, extra=extra)


def _map_trials(fn: Callable, config: ExperimentConfig, threads: int | None) -> list[TrialRecord]:
    indices = range(config.trials)
    work = partial(fn, config)
    if not threads or threads <= 1 or config.trials == 1:
        records = [work(i) for i in indices]
    else:
        chunk = max(1, config.trials // (threads * 4))
        with ProcessPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(work, indices, chunksize=chunk))
    return sorted(records, key=lambda r: r.trial_index)


def _check_mode(config: ExperimentConfig, *modes: str) -> None:
    if config.mode not in modes:
        raise DomainError(f"config mode {config.mode!r} is not one of {modes}")


def run_overlap_experiment(config: ExperimentConfig, threads: int | None = None) -> ExperimentReport:
    """Distribution of x over trials, with model moments for comparison."""
    _check_mode(config, "overlap-dist")
    records = _map_trials(_overlap_trial, config, threads)
    mean_b, std_b = binomial_moments(config.pop, config.design)
    bounds = {"binomial_mean": mean_b, "binomial_std": std_b}
    lo, hi = union_support(config.pop, config.design)
    if lo <= hi and hi - lo <= 10**7:
        mean_u, var_u, _ = pmf_moments(union_pmf(config.pop, config.design))
        bounds.update(union_mean=mean_u, union_std=math.sqrt(var_u))
    pop, d = config.pop, config.design
    if exact_grid_terms(pop.n1, pop.n2, pop.i, d.m1, d.m2) <= 10**6:
        mean_e, var_e, _ = pmf_moments(exact_pmf(pop, d))
        bounds.update(exact_mean=mean_e, exact_std=math.sqrt(var_e))
    return summarize(records, mean_b, bounds, config)


def run_containment_experiment(config: ExperimentConfig, threads: int | None = None) -> ExperimentReport:
    """Binomial containment estimator against its posterior MSE bounds."""
    _check_mode(config, "containment")
    records = _map_trials(_overlap_trial, config, threads)
    pop, d = config.pop, config.design
    i_hat = np.array([r.extra["i_hat"] for r in records])
    phi = np.array([r.estimate for r in records])
    valid = np.array([r.valid for r in records])
    bounds = {
        "empirical_mse_i_hat": float(np.mean((i_hat - pop.i) ** 2)),
        "mean_mse_bound_i": float(np.mean([r.extra["mse_bound_i"] for r in records])),
        "mean_mse_bound_i_loose": float(np.mean([r.extra["mse_bound_i_loose"] for r in records])),
        "valid_case_bound_phi1": pop.n2 / (d.m1 * d.m2),
        "invalid_fraction": float(1.0 - valid.mean()),
    }
    if valid.any():
        bounds["empirical_mse_phi1_valid"] = float(np.mean((phi[valid] - pop.phi1) ** 2))
    return summarize(records, pop.phi1, bounds, config)


def run_batch_phi_experiment(config: ExperimentConfig, threads: int | None = None) -> ExperimentReport:
    """Batch-MinHash containment with fresh hash families and partition seeds per trial."""
    _check_mode(config, "batch-phi")
    records = _map_trials(_batch_trial, config, threads)
    pop, d = config.pop, config.design
    truth = pop.phi1
    full = summary_stats([r.extra["phi_full"] for r in records], truth)
    nominal = (d.m1 / config.a, d.m2 / config.b)
    total = sum(r.extra["pairs_total"] for r in records)
    nonzero = sum(r.extra["pairs_nonzero"] for r in records)
    bounds = {
        "rmse_bound_binomial": math.sqrt(np.mean([r.extra["bound_binomial"] ** 2 for r in records])),
        "rmse_bound_nominal": batch_containment_error(truth, config.k, nominal, d.m1, d.m2, pop.n2, "binomial"),
        "rmse_bound_equal_batches": batch_containment_error(
            truth, config.k, d.m1 / config.a, d.m1, d.m2, pop.n2, "binomial"
        ),
        "rmse_bound_fallback": batch_containment_error(truth, config.k, nominal, d.m1, d.m2, pop.n2, "unequal"),
        "phi_full_rmse": full["rmse"],
        "phi_full_bias": full["bias"],
        "pair_fraction_within_3sigma": sum(r.extra["pairs_within"] for r in records) / total,
        "pair_fraction_within_3sigma_nonzero": (
            sum(r.extra["pairs_within_nonzero"] for r in records) / nonzero if nonzero else 1.0
        ),
    }
    return summarize(records, truth, bounds, config)


def run_jaccard_z_experiment(config: ExperimentConfig, threads: int | None = None) -> ExperimentReport:
    """Sampled-sketch Jaccard estimates and their Z-scores against the error model."""
    _check_mode(config, "jaccard-z")
    records = _map_trials(_jaccard_trial, config, threads)
    truth = config.pop.jaccard
    ok = [r for r in records if r.valid]
    bounds: dict[str, float] = {}
    zs = [r.z for r in ok if r.z is not None]
    if zs:
        bounds["z_mean"] = float(np.mean(zs))
        bounds["z_std"] = float(np.std(zs, ddof=1)) if len(zs) > 1 else 0.0
    if truth > 0:
        with_x = [r for r in ok if r.x]
        if with_x:
            bounds["frac_within_2_over_sqrt_x"] = float(
                np.mean([abs(r.estimate - truth) / truth <= 2 / math.sqrt(r.x) for r in with_x])
            )
            bounds["frac_within_2_over_sqrt_x_sampling"] = float(
                np.mean([abs(r.extra["j_sampling"] - truth) / truth <= 2 / math.sqrt(r.x) for r in with_x])
            )
    return summarize(records, truth, bounds, config)


RUNNERS = {
    "overlap-dist": run_overlap_experiment,
    "containment": run_containment_experiment,
    "batch-phi": run_batch_phi_experiment,
    "jaccard-z": run_jaccard_z_experiment,
}


def run_experiment(config: ExperimentConfig, threads: int | None = None) -> ExperimentReport:
    return RUNNERS[config.mode](config, threads)
