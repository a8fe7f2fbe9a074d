"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Seeds are fixed up front (master seed 0 everywhere) and never tuned.
"""
import json
import math
from itertools import combinations

import numpy as np
import pytest

from oracles import enumerate_overlap, instances
from overlap_sketch.batch import batch_similarity, build_batch_sketches, correct_jaccard, correction_ratio
from overlap_sketch.cli import main
from overlap_sketch.likelihood import (
    PopulationPair,
    SampleDesign,
    binomial_pmf,
    exact_log_pmf_raw,
    exact_pmf,
    pmf_from_counts,
    pmf_moments,
    total_variation,
    union_pmf,
)
from overlap_sketch.minhash import HashFamily, build_sketch, merge_sketches
from overlap_sketch.planner import validity_condition
from overlap_sketch.simharness import ExperimentConfig, run_experiment

SEED = 0
SEC4_POP = PopulationPair(10**6, 2 * 10**6, 5 * 10**5)
SEC4_DESIGN = SampleDesign(3 * 10**4, 4 * 10**4)

# frozen after first computation; see the regression check in criterion 3
TV_BINOMIAL_EXACT = 0.004575018572712748


def test_criterion_01_overlap_distribution(criterion):
    rep = run_experiment(ExperimentConfig(SEC4_POP, SEC4_DESIGN, 100, SEED, "overlap-dist"))
    b = rep.bound_values
    u_mean, u_var, _ = pmf_moments(union_pmf(SEC4_POP, SEC4_DESIGN))
    checks = {
        "mean": 295 <= rep.mean <= 305,
        "std": 13 <= rep.std <= 21,
        "model_std": abs(b["binomial_std"] - 17.32) <= 0.01,
        "union_mean": abs(u_mean - 13220.88) <= 0.01 * 13220.88,
        "union_std": abs(math.sqrt(u_var) - 79.22) <= 0.05 * 79.22,
    }
    ok = criterion(
        1,
        all(checks.values()),
        f"mean={rep.mean:.2f} std={rep.std:.2f} model_std={b['binomial_std']:.4f} "
        f"union_mean={u_mean:.2f} union_std={math.sqrt(u_var):.2f} failed={[k for k, v in checks.items() if not v]}",
    )
    assert ok


def _extra_instances(count=300, seed=SEED):
    """Random instances beyond N2 = 12 that still satisfy C(N1,M1)C(N2,M2) <= 1e6."""
    g = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        n1 = int(g.integers(1, 31))
        n2 = int(g.integers(max(n1, 13), 31))
        i = int(g.integers(0, n1 + 1))
        m1, m2 = int(g.integers(1, 4)), int(g.integers(1, 4))
        if m1 <= n1 and math.comb(n1, m1) * math.comb(n2, m2) <= 10**6:
            out.append((n1, n2, i, m1, m2))
    return out


def test_criterion_02_exact_oracle(criterion):
    cases = list(instances(12)) + _extra_instances()
    worst = 0.0
    for case in cases:
        ref = enumerate_overlap(*case)
        _, lp = exact_log_pmf_raw(*case)
        p = np.exp(lp)
        support = set(range(len(p))) | set(ref)
        worst = max(worst, max(abs((p[x] if x < len(p) else 0.0) - float(ref.get(x, 0))) for x in support))
    pop, design = PopulationPair(50, 80, 30, ), SampleDesign(10, 20)
    rep = run_experiment(ExperimentConfig(pop, design, 10**5, SEED, "overlap-dist"))
    tv = total_variation(pmf_from_counts([r.x for r in rep.records]), exact_pmf(pop, design))
    ok = criterion(
        2,
        worst <= 1e-10 and tv < 0.02,
        f"instances={len(cases)} max_abs_err={worst:.2e} (tol 1e-10) mc_tv={tv:.4f} (tol 0.02, 1e5 trials)",
    )
    assert ok


def test_criterion_03_sparse_regime(criterion):
    pop, design = PopulationPair(2000, 3000, 800), SampleDesign(60, 80)
    tv = total_variation(binomial_pmf(pop, design), exact_pmf(pop, design))
    ok = criterion(
        3, tv < 0.05 and math.isclose(tv, TV_BINOMIAL_EXACT, rel_tol=1e-9), f"tv={tv!r} frozen={TV_BINOMIAL_EXACT!r}"
    )
    assert ok


def test_criterion_04_posterior_bound(criterion):
    rep = run_experiment(ExperimentConfig(SEC4_POP, SEC4_DESIGN, 10**4, SEED, "containment"))
    b = rep.bound_values
    mse_i, bound_i = b["empirical_mse_i_hat"], b["mean_mse_bound_i_loose"]
    mse_phi, bound_phi = b["empirical_mse_phi1_valid"], b["valid_case_bound_phi1"]
    ok = criterion(
        4,
        mse_i <= bound_i and mse_phi <= bound_phi,
        f"trials=1e4 mse(I_b)={mse_i:.4e} <= {bound_i:.4e} (ratio {mse_i / bound_i:.3f}); "
        f"mse(phi1|valid)={mse_phi:.3e} <= {bound_phi:.3e}",
    )
    assert ok


def test_criterion_05_chernoff_validity(criterion):
    n = 10**5
    phi, eps = 0.9, 1e-3
    product = validity_condition(phi, eps, n)
    m = math.ceil(math.sqrt(product) * n)
    pop = PopulationPair(n, n, int(phi * n))
    rep = run_experiment(ExperimentConfig(pop, SampleDesign(m, m), 10**4, SEED, "containment"))
    freq = rep.invalid_count / len(rep.records)
    ok = criterion(
        5,
        freq <= 2e-3,
        f"N1=N2=1e5 alpha1*alpha2={product:.4e} ({product * n:.1f}/N1) M={m} invalid_freq={freq:.4f} (tol 2e-3)",
    )
    assert ok


def test_criterion_06_pair_bound(criterion):
    pop, design = PopulationPair(10**4, 10**4, 5000), SampleDesign(1000, 1000)
    rep = run_experiment(ExperimentConfig(pop, design, 1000, SEED, "batch-phi", a=30, b=30, k=100))
    frac = rep.bound_values["pair_fraction_within_3sigma"]
    frac_nz = rep.bound_values["pair_fraction_within_3sigma_nonzero"]
    ok = criterion(6, frac >= 0.9, f"M1=M2=1000 runs=1000 fraction={frac:.4f} (nonzero pairs only {frac_nz:.4f}) tol>=0.90")
    assert ok


def test_criterion_07_batch_containment(criterion):
    pop, design = PopulationPair(10**6, 10**6, 5 * 10**5), SampleDesign(10**5, 10**5)
    rep = run_experiment(ExperimentConfig(pop, design, 30, SEED, "batch-phi", a=100, b=10, k=200))
    bound = rep.bound_values["rmse_bound_nominal"]
    se = rep.std / math.sqrt(rep.n_used)
    bias_ok = rep.bias < 0 or abs(rep.bias) <= 2 * se
    ok = criterion(
        7,
        rep.rmse <= bound and bias_ok,
        f"rmse={rep.rmse:.4f} <= bound={bound:.4f} bias={rep.bias:+.4f} "
        f"({'negative' if rep.bias < 0 else 'non-negative'}, 2se={2 * se:.4f}) "
        f"full-merge rmse={rep.bound_values['phi_full_rmse']:.4f}",
    )
    assert ok


def test_criterion_08_jaccard_zscores(criterion):
    pop, design = PopulationPair(10**5, 2 * 10**5, 8 * 10**4), SampleDesign(2 * 10**4, 2 * 10**4)
    rep = run_experiment(ExperimentConfig(pop, design, 100, SEED, "jaccard-z", k=1000))
    b = rep.bound_values
    frac = b["frac_within_2_over_sqrt_x"]
    ok = criterion(
        8,
        abs(b["z_mean"]) <= 0.5 and b["z_std"] <= 1.5 and frac >= 0.95,
        f"z_mean={b['z_mean']:+.3f} z_std={b['z_std']:.3f} "
        f"frac_within_2/sqrt(x)={frac:.2f} (sampling-only estimator {b['frac_within_2_over_sqrt_x_sampling']:.2f}) tol>=0.95",
    )
    assert ok


def test_criterion_09_planner(criterion, capsys):
    code = main(["plan", "--delta", "0.01", "--epsilon", "0.001", "--phi", "0.1", "--n1", "1e8", "--n2", "5e8"])
    doc = json.loads(capsys.readouterr().out)
    validity = doc["symmetric_alphas"]["validity"]
    accuracy = doc["symmetric_alphas"]["accuracy"]
    ratio = validity_condition(0.9, 1e-3, 10**8) * 10**8 / 760
    ok = criterion(
        9,
        code == 0 and f"{validity:.6f}" == "0.000403" and math.isclose(accuracy, 0.01) and abs(ratio - 1) <= 0.01,
        f"validity_alpha={validity:.6f} accuracy_alpha={accuracy:.4g} product*N1/760={ratio:.4f}",
    )
    assert ok


def test_criterion_10_properties(criterion):
    g = np.random.default_rng(SEED)
    failures = []

    worst_norm = 0.0
    for _ in range(300):
        n1 = int(g.integers(1, 200))
        n2 = int(g.integers(n1, 300))
        pop = PopulationPair(n1, n2, int(g.integers(0, n1 + 1)))
        design = SampleDesign(int(g.integers(1, min(n1, 40) + 1)), int(g.integers(1, min(n2, 40) + 1)))
        for build in (binomial_pmf, exact_pmf):
            worst_norm = max(worst_norm, abs(build(pop, design).prob.sum() - 1.0))
    if worst_norm > 1e-9:
        failures.append("normalization")

    fam = HashFamily.random(32, SEED)
    for _ in range(200):
        s = [build_sketch(g.integers(0, 10**6, int(g.integers(0, 50))), fam) for _ in range(3)]
        ab, ba = merge_sketches(s[0], s[1]), merge_sketches(s[1], s[0])
        left = merge_sketches(ab, s[2])
        right = merge_sketches(s[0], merge_sketches(s[1], s[2]))
        if ab.minima.tolist() != ba.minima.tolist() or left.minima.tolist() != right.minima.tolist():
            failures.append("merge")
            break

    worst_rt = 0.0
    for _ in range(1000):
        n1 = int(g.integers(10, 10**7))
        n2 = n1 + int(g.integers(0, 10**7))
        i = g.uniform(0.01, 1.0) * n1
        m1, m2 = g.uniform(0.001, 1) * n1, g.uniform(0.001, 1) * n2
        x = i * m1 * m2 / (n1 * n2)
        j, _ = correct_jaccard(x / (m1 + m2 - x), float(correction_ratio(n1, n2, m1, m2)))
        truth = i / (n1 + n2 - i)
        worst_rt = max(worst_rt, abs(j - truth) / truth)
    if worst_rt > 1e-9:
        failures.append("round_trip")

    fam = HashFamily.random(40, SEED + 1)
    for _ in range(1000):
        a, b = int(g.integers(1, 6)), int(g.integers(1, 6))
        n = int(g.integers(200, 3000))
        lo = int(g.integers(0, n))
        p = build_batch_sketches(g.choice(n, int(g.integers(20, n // 2)), replace=False), fam, a, int(g.integers(2**32)))
        q = build_batch_sketches(lo + g.choice(n, int(g.integers(20, n // 2)), replace=False), fam, b, int(g.integers(2**32)))
        res = batch_similarity(p, q, 4 * n, 5 * n)
        if res.state is not None and len(res.state.removed) >= a * b:
            failures.append("termination")
            break

    cfg = ExperimentConfig(SEC4_POP, SEC4_DESIGN, 8, SEED, "batch-phi", a=5, b=4, k=50)
    serial = run_experiment(cfg, threads=1).to_json()
    if serial != run_experiment(cfg, threads=2).to_json() or serial != run_experiment(cfg, threads=1).to_json():
        failures.append("determinism")

    ok = criterion(
        10,
        not failures,
        f"normalization_err={worst_norm:.1e} round_trip_err={worst_rt:.1e} "
        f"merge/termination/determinism checked; failures={failures}",
    )
    assert ok
