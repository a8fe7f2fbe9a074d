"""Command-line interface.

Machine-readable results go to stdout (JSON by default, ``--format csv``
for tables); logs go to stderr. Exit codes: 0 success, 1 domain error,
2 I/O or format error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import _kernels
from .batch import (
    BatchSketchSet,
    batch_containment,
    batch_containment_error,
    batch_similarity,
    build_batch_sketches,
    correct_jaccard,
    correction_ratio,
    jaccard_error_model,
)
from .errors import DomainError, MalformedSketchError, OverlapSketchError
from .estimators import estimate_binomial, estimate_union_mle, fractional_jaccard_error_bound
from .likelihood import (
    DEFAULT_TERM_BUDGET,
    PopulationPair,
    SampleDesign,
    binomial_pmf,
    exact_pmf,
    pmf_moments,
    total_variation,
    union_pmf,
)
from .minhash import (
    HashFamily,
    MinHashSketch,
    build_sketch,
    deserialize,
    estimate_sample_jaccard,
    merge_sketches,
    serialize,
)
from .planner import AccuracySpec, CostModel, plan_containment, plan_jaccard, runtime_estimate
from .simharness import MODES, ExperimentConfig, run_experiment

log = logging.getLogger("overlap_sketch")

SEED_ENV = "OVERLAP_SKETCH_SEED"
_MODE_ALIASES = {"overlap": "overlap-dist"}


class FormatError(Exception):
    """Bad input file or output format; exit code 2."""


def count(text: str) -> int:
    """Parse a non-negative count, accepting scientific notation such as ``1e8``."""
    try:
        value = int(text)
    except ValueError:
        try:
            as_float = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
        if not math.isfinite(as_float) or as_float != int(as_float):
            raise argparse.ArgumentTypeError(f"not an integer count: {text!r}") from None
        value = int(as_float)
    if value < 0:
        raise argparse.ArgumentTypeError(f"count must be non-negative: {text!r}")
    return value


def real(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def interval(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition("..")
    if not sep:
        raise argparse.ArgumentTypeError("interval must look like lo..hi")
    try:
        lo_i, hi_i = int(float(lo)), int(float(hi))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad interval bounds: {text!r}") from None
    if hi_i < lo_i:
        raise argparse.ArgumentTypeError("interval upper bound is below lower bound")
    return lo_i, hi_i


# ---------- output ----------

def _flatten(doc, prefix=""):
    if isinstance(doc, dict):
        for key, value in doc.items():
            yield from _flatten(value, f"{prefix}{key}.")
    elif isinstance(doc, (list, tuple)):
        for idx, value in enumerate(doc):
            yield from _flatten(value, f"{prefix}{idx}.")
    else:
        yield prefix.rstrip("."), doc


def _plain(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def render(doc: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False, default=_plain) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["key", "value"])
    for key, value in _flatten(doc):
        writer.writerow([key, "" if value is None else value])
    return buf.getvalue()


# ---------- subcommands ----------

def cmd_plan(args) -> str:
    spec = AccuracySpec(args.delta, args.epsilon)
    if args.target == "jaccard":
        if args.i is None:
            raise DomainError("--i (expected intersection) is required for --target jaccard")
        req = plan_jaccard(spec, args.i)
        doc = {
            "target": "jaccard",
            "c": req.c,
            "required_product": req.product,
            "required_product_simplified": req.simplified,
            "lower_root": req.lower_root,
            "symmetric_alpha": math.sqrt(req.product),
        }
        return render(doc, args.format)
    if args.phi is None or args.n1 is None or args.n2 is None:
        raise DomainError("--phi, --n1 and --n2 are required for containment plans")
    plan = plan_containment(
        spec, args.phi, args.n1, args.n2, args.mode, alpha1=args.alpha1, alpha2=args.alpha2
    )
    doc = {
        "target": "containment",
        "mode": plan.mode,
        "binding": plan.binding,
        "alpha1": plan.alpha1,
        "alpha2": plan.alpha2,
        "m1": plan.m1,
        "m2": plan.m2,
        "required_products": plan.condition_values,
        "symmetric_alphas": plan.symmetric_rates(),
    }
    return render(doc, args.format)


def _pmf_summary(pmf) -> dict:
    mean, var, median = pmf_moments(pmf)
    out = {
        "support_min": pmf.support_min,
        "support_max": pmf.support_max,
        "mean": mean,
        "std": math.sqrt(var),
        "median": median,
        "log_normalizer": pmf.log_normalizer,
    }
    if pmf.model_mean is not None:
        out["model_mean"] = pmf.model_mean
        out["model_std"] = math.sqrt(pmf.model_variance)
    return out


def cmd_pmf(args) -> str:
    pop = PopulationPair(args.n1, args.n2, args.i)
    design = SampleDesign(args.m1, args.m2)
    builders = {
        "binomial": binomial_pmf,
        "union": union_pmf,
        "exact": lambda p, d: exact_pmf(p, d, args.term_budget),
    }
    models = [m.strip() for m in args.models.split(",") if m.strip()]
    unknown = set(models) - set(builders)
    if unknown:
        raise DomainError(f"unknown models: {sorted(unknown)}")
    pmfs = {m: builders[m](pop, design) for m in models}
    if args.format == "csv" and args.table:
        lo = min(p.support_min for p in pmfs.values())
        hi = max(p.support_max for p in pmfs.values())
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["x", *models])
        for x in range(lo, hi + 1):
            writer.writerow([x, *(repr(pmfs[m].at(x)) for m in models)])
        return buf.getvalue()
    doc = {"models": {m: _pmf_summary(p) for m, p in pmfs.items()}, "regime": design.regime(pop)}
    tv = {}
    for idx, m in enumerate(models):
        for other in models[idx + 1 :]:
            tv[f"{m}-{other}"] = total_variation(pmfs[m], pmfs[other])
    doc["total_variation"] = tv
    return render(doc, args.format)


def cmd_estimate(args) -> str:
    design = SampleDesign(args.m1, args.m2)
    design.check(args.n1, args.n2)
    est = estimate_binomial(args.x, args.n1, args.n2, design)
    doc = {
        "i_hat": est.i_hat,
        "phi1_hat": est.phi1_hat,
        "phi2_hat": est.phi2_hat,
        "j_hat": est.j_hat,
        "j_clamped": est.j_clamped,
        "valid": est.valid,
    }
    if args.x > 0:
        doc["jaccard_fractional_error"] = fractional_jaccard_error_bound(args.x, args.n1, args.n2)
        doc["jaccard_fractional_error_loose"] = fractional_jaccard_error_bound(
            args.x, args.n1, args.n2, loose=True
        )
    if args.union_mle:
        doc["i_union_mle"] = estimate_union_mle(args.x, args.n1, args.n2, design)
    return render(doc, args.format)


def _read_elements(args):
    if args.interval is not None:
        lo, hi = args.interval
        return np.arange(lo, hi + 1, dtype=np.int64)
    if args.input is None:
        raise DomainError("give --input FILE or --interval lo..hi")
    try:
        text = Path(args.input).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise FormatError(f"cannot read {args.input}: {exc}") from None
    return [line for line in text.splitlines() if line.strip()]


def _read_bytes(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from None


def _load_sketch(path: str) -> MinHashSketch:
    data = _read_bytes(path)
    if data[:1] == b"{":
        try:
            return MinHashSketch.from_json(data.decode("utf-8"))
        except (ValueError, KeyError, TypeError) as exc:
            raise FormatError(f"{path}: bad JSON sketch: {exc}") from None
    return deserialize(data)


def _load_batches(path: str) -> BatchSketchSet:
    return BatchSketchSet.from_bytes(_read_bytes(path))


def _emit_binary(data: bytes, out: str | None) -> None:
    if out is None:
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
        return
    try:
        Path(out).write_bytes(data)
    except OSError as exc:
        raise FormatError(f"cannot write {out}: {exc}") from None


def cmd_sketch(args) -> str | None:
    if args.sketch_cmd == "build":
        elements = _read_elements(args)
        family = HashFamily.random(args.k, args.seed)
        if args.batches:
            batches = build_batch_sketches(elements, family, args.batches, args.partition_seed)
            _emit_binary(batches.to_bytes(), args.out)
            return None
        sketch = build_sketch(elements, family)
        if args.json:
            data = (sketch.to_json() + "\n").encode("utf-8")
        else:
            data = serialize(sketch)
        _emit_binary(data, args.out)
        return None
    if args.sketch_cmd == "merge":
        merged = merge_sketches(_load_sketch(args.first), _load_sketch(args.second))
        _emit_binary(serialize(merged), args.out)
        return None
    s1, s2 = _load_sketch(args.first), _load_sketch(args.second)
    return render({"j_prime": estimate_sample_jaccard(s1, s2), "k": s1.k}, args.format)


def _experiment_config(args) -> ExperimentConfig:
    doc: dict = {}
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise FormatError(f"cannot load config {args.config}: {exc}") from None
        if not isinstance(doc, dict):
            raise FormatError("config must be a JSON object")
    mode = _MODE_ALIASES.get(args.mode, args.mode)
    doc["mode"] = mode
    pop = dict(doc.get("pop", {}))
    design = dict(doc.get("design", {}))
    for name in ("n1", "n2", "i"):
        if getattr(args, name) is not None:
            pop[name] = getattr(args, name)
    for name in ("m1", "m2"):
        if getattr(args, name) is not None:
            design[name] = getattr(args, name)
    doc["pop"], doc["design"] = pop, design
    env_seed = os.environ.get(SEED_ENV)
    if env_seed is not None:
        try:
            doc["master_seed"] = int(env_seed)
        except ValueError:
            raise DomainError(f"{SEED_ENV} must be an integer") from None
    if args.seed is not None:
        doc["master_seed"] = args.seed
    for name in ("trials", "a", "b", "k"):
        if getattr(args, name) is not None:
            doc[name] = getattr(args, name)
    missing = [n for n in ("n1", "n2", "i") if n not in pop] + [n for n in ("m1", "m2") if n not in design]
    if missing or "trials" not in doc:
        raise DomainError(f"missing experiment parameters: {missing + ([] if 'trials' in doc else ['trials'])}")
    try:
        return ExperimentConfig.from_dict(doc)
    except TypeError as exc:
        raise FormatError(f"bad config: {exc}") from None


def cmd_simulate(args) -> str:
    config = _experiment_config(args)
    threads = args.threads if args.threads is not None else (os.cpu_count() or 1)
    log.info("running %s with %d trials on %d workers (%s kernels)",
             config.mode, config.trials, threads, _kernels.BACKEND)
    report = run_experiment(config, threads=threads)
    if args.format == "csv":
        return report.to_csv()
    return report.to_json() + "\n"


def cmd_batch_phi(args) -> str:
    p, q = _load_batches(args.p), _load_batches(args.q)
    phi_hat, xhat = batch_containment(p, q, args.n2, args.m1, args.m2)
    k = p.family.k
    sizes = (int(p.sizes.max()), int(q.sizes.max()))
    doc = {
        "phi_hat": phi_hat,
        "x_hat": float(xhat.sum()),
        "a": p.batch_count,
        "b": q.batch_count,
        "k": k,
        "rmse_bound": {
            mode: batch_containment_error(phi_hat, k, sizes, args.m1, args.m2, args.n2, mode)
            for mode in ("binomial", "unequal")
        },
    }
    if args.matrix:
        doc["x_hat_matrix"] = xhat.tolist()
    return render(doc, args.format)


def cmd_batch_j(args) -> str:
    p, q = _load_batches(args.p), _load_batches(args.q)
    if p.partition_seed == q.partition_seed:
        log.warning(
            "both batch sets share partition seed %d; shared elements collide on "
            "diagonal pairs, which breaks the independent-batch assumption",
            p.partition_seed,
        )
    res = batch_similarity(p, q, args.n1, args.n2, fallback_rule=args.fallback_rule)
    doc = {
        "j_hat": res.j_hat,
        "j_full_minhash": res.j_fm,
        "used_full_minhash": res.used_full_minhash,
        "valid_pairs": len(res.state.v) if res.state else 0,
        "removed_pairs": [list(pr) for pr in res.state.removed] if res.state else [],
        "m_sq": res.state.cal_m_sq if res.state else None,
        "s_sq": res.state.cal_s_sq if res.state else None,
    }
    return render(doc, args.format)


def cmd_correct_j(args) -> str:
    r = float(correction_ratio(args.n1, args.n2, args.m1, args.m2))
    j_hat, clamped = correct_jaccard(args.j_prime, r)
    doc = {"r": r, "j_hat": j_hat, "clamped": clamped}
    if args.k:
        model = jaccard_error_model(args.j_prime, r, args.m1, args.m2, args.k)
        doc.update(delta_s=model.delta_s, delta_m=model.delta_m, delta_total=model.delta_total)
    return render(doc, args.format)


def cmd_cost(args) -> str:
    est = runtime_estimate(
        CostModel(args.f, args.h, args.s),
        args.n1, args.m1, args.a, args.b, args.k, args.batch_size, args.c1, args.c2,
    )
    return render(est._asdict(), args.format)


# ---------- parser ----------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("-v", "--verbose", action="store_true", help="log to stderr")

    parser = argparse.ArgumentParser(
        prog="overlap-sketch",
        description="Estimate intersection size, containment and Jaccard index from samples.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", parents=[common], help="sample-size planning")
    p.add_argument("--target", choices=("containment", "jaccard"), default="containment")
    p.add_argument("--delta", type=real, required=True)
    p.add_argument("--epsilon", type=real, required=True)
    p.add_argument("--phi", type=real)
    p.add_argument("--n1", type=count)
    p.add_argument("--n2", type=count)
    p.add_argument("--i", type=real, help="expected intersection (jaccard target)")
    p.add_argument("--mode", choices=("valid-case", "posterior-only"), default="valid-case")
    p.add_argument("--alpha1", type=real)
    p.add_argument("--alpha2", type=real)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("pmf", parents=[common], help="overlap likelihood models")
    for name in ("n1", "n2", "i", "m1", "m2"):
        p.add_argument(f"--{name}", type=count, required=True)
    p.add_argument("--models", default="binomial,union")
    p.add_argument("--term-budget", type=count, default=DEFAULT_TERM_BUDGET)
    p.add_argument("--table", action="store_true", help="with --format csv, emit the pmf table")
    p.set_defaults(func=cmd_pmf)

    p = sub.add_parser("estimate", parents=[common], help="estimates from an observed overlap")
    for name in ("x", "n1", "n2", "m1", "m2"):
        p.add_argument(f"--{name}", type=count, required=True)
    p.add_argument("--union-mle", action="store_true")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("sketch", help="MinHash sketches")
    ssub = p.add_subparsers(dest="sketch_cmd", required=True)
    b = ssub.add_parser("build", parents=[common])
    src = b.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="newline-delimited tokens")
    src.add_argument("--interval", type=interval, help="integer range lo..hi")
    b.add_argument("--k", type=count, required=True)
    b.add_argument("--seed", type=count, required=True, help="hash family seed")
    b.add_argument("--batches", type=count, default=0, help="build a stratified batch set")
    b.add_argument("--partition-seed", type=count, default=0)
    b.add_argument("--json", action="store_true", help="write the JSON mirror")
    b.add_argument("--out")
    m = ssub.add_parser("merge", parents=[common])
    m.add_argument("first")
    m.add_argument("second")
    m.add_argument("--out")
    j = ssub.add_parser("jaccard", parents=[common])
    j.add_argument("first")
    j.add_argument("second")
    p.set_defaults(func=cmd_sketch)

    p = sub.add_parser("simulate", parents=[common], help="Monte-Carlo experiments")
    p.add_argument("mode", choices=(*MODES, *_MODE_ALIASES))
    p.add_argument("--config")
    for name in ("n1", "n2", "i", "m1", "m2", "trials", "a", "b", "k"):
        p.add_argument(f"--{name}", type=count)
    p.add_argument("--seed", type=count, help="master seed")
    p.add_argument("--threads", type=count)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("batch-phi", parents=[common], help="containment from batch sketch sets")
    p.add_argument("--p", required=True)
    p.add_argument("--q", required=True)
    for name in ("n2", "m1", "m2"):
        p.add_argument(f"--{name}", type=count, required=True)
    p.add_argument("--matrix", action="store_true")
    p.set_defaults(func=cmd_batch_phi)

    p = sub.add_parser("batch-j", parents=[common], help="Jaccard from batch sketch sets")
    p.add_argument("--p", required=True)
    p.add_argument("--q", required=True)
    p.add_argument("--n1", type=count, required=True)
    p.add_argument("--n2", type=count, required=True)
    p.add_argument("--fallback-rule", choices=("prose", "pseudocode"), default="prose")
    p.set_defaults(func=cmd_batch_j)

    p = sub.add_parser("correct-j", parents=[common], help="correct a sample-level Jaccard")
    p.add_argument("--j-prime", type=real, required=True)
    for name in ("n1", "n2", "m1", "m2"):
        p.add_argument(f"--{name}", type=count, required=True)
    p.add_argument("--k", type=count)
    p.set_defaults(func=cmd_correct_j)

    p = sub.add_parser("cost", parents=[common], help="sketching runtime model")
    for name in ("f", "h", "s"):
        p.add_argument(f"--{name}", type=real, required=True)
    for name in ("n1", "m1", "a", "b", "k", "batch-size"):
        p.add_argument(f"--{name}", type=count, required=True)
    p.add_argument("--c1", type=real, default=50.0)
    p.add_argument("--c2", type=real, default=50.0)
    p.set_defaults(func=cmd_cost)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "format", None) is None:
        args.format = "json"
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        output = args.func(args)
    except (FormatError, MalformedSketchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, OverlapSketchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if output is not None:
        sys.stdout.write(output)
        sys.stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
