"""End-to-end acceptance checks.

Every test appends one PASS/FAIL line to CRITERIA (printed in the terminal
summary), then asserts. The Monte Carlo checks share session fixtures that
run each study twice, single-threaded and with two workers, so the
determinism criterion reuses the exact reports the rate criteria graded.
"""

import math
import time

import numpy as np
import pytest

from sid import (
    BetaSid,
    CensoredDataset,
    GaussianKernel,
    KernelSid,
    LaplacianKernel,
    ScenarioSpec,
    TestConfig,
    bootstrap_null_diagnostics,
    build_bootstrap_matrix,
    build_smoothed_processes,
    monte_carlo,
    power_sweep,
    run_test,
    sid_u_bruteforce,
    sid_u_statistic,
    sid_v_event_sum,
    sid_v_quintuple,
)
from sid.estimators import symmetrized_kernel_check, u_statistic_from_gram, v_statistic_from_gram
from sid.kernels import (
    DistanceInducedKernel,
    NormPowerSemimetric,
    SmoothingSpec,
    gram_matrix,
    semimetric_matrix,
)

SEED = 20260819
ALPHA = 0.05
CRITERIA = []


def check(name, ok, detail):
    CRITERIA.append(f"criterion {name}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, CRITERIA[-1]


def rel_err(a, b):
    return abs(a - b) / max(1.0, abs(a), abs(b))


def rate_se(rate, reps):
    return math.sqrt(max(rate * (1.0 - rate), 1e-12) / reps)


@pytest.fixture(scope="session")
def instance_pool():
    rng = np.random.default_rng(SEED)
    pool = []
    for _ in range(50):
        n = int(rng.integers(6, 13))
        p = int(rng.choice([1, 2, 5]))
        y = rng.exponential(1.0, n)
        if rng.random() < 0.3:
            y[1] = y[0]  # tied observed times
        delta = (rng.random(n) < rng.uniform(0.4, 0.9)).astype(np.int64)
        delta[int(rng.integers(n))] = 1
        x = rng.standard_normal((n, p))
        pool.append(CensoredDataset(y, delta, x))
    return pool


def _mc_pair(spec, methods, reps, seed, alphas=(ALPHA,)):
    cfg = TestConfig(bootstrap_reps=500, seed=seed)
    one = monte_carlo(spec, methods, reps, cfg, alphas=alphas, threads=1)
    two = monte_carlo(spec, methods, reps, cfg, alphas=alphas, threads=2)
    return one, two


@pytest.fixture(scope="session")
def crit5_pair():
    spec = ScenarioSpec("ex1-case1", 50, censoring=0.3)
    return _mc_pair(spec, ("sid-gauss", "sid-lap", "sid-1", "sid-0.5"), 300, SEED)


@pytest.fixture(scope="session")
def crit6_pair():
    spec = ScenarioSpec("ex1-case2", 50, censoring=0.6)
    return _mc_pair(spec, ("sid-gauss",), 300, SEED + 1)


def _sweep_pair(base, param, values, methods, reps, seed):
    cfg = TestConfig(bootstrap_reps=500, seed=seed)
    one = power_sweep(base, param, values, methods, reps, cfg, alphas=(ALPHA,), threads=1)
    two = power_sweep(base, param, values, methods, reps, cfg, alphas=(ALPHA,), threads=2)
    return one, two


@pytest.fixture(scope="session")
def crit7a_pair():
    base = ScenarioSpec("ex3-case1", 50, censoring=0.3)
    return _sweep_pair(base, "n", (50, 100, 150), ("sid-gauss",), 200, SEED + 2)


@pytest.fixture(scope="session")
def crit7b_pair():
    base = ScenarioSpec("ex6-case1", 100, theta=0.0)
    return _sweep_pair(base, "theta", (0.0, 0.3, 0.6), ("sid-gauss",), 200, SEED + 3)


@pytest.fixture(scope="session")
def crit7c_pair():
    base = ScenarioSpec("appC-cox-linear", 150, censoring=0.3)
    return _sweep_pair(base, "beta", (0.25, 1.75), ("sid-gauss",), 200, SEED + 4)


def test_criterion_1_oracle_equivalence(instance_pool):
    spec = SmoothingSpec(0.4)
    start = time.monotonic()
    worst = 0.0
    for ds in instance_pool:
        for kernel in (GaussianKernel(1.0), LaplacianKernel(1.0), DistanceInducedKernel(1.0)):
            worst = max(
                worst,
                rel_err(
                    sid_v_event_sum(ds, kernel, spec).value,
                    sid_v_quintuple(ds, kernel, spec).value,
                ),
                rel_err(
                    sid_u_statistic(ds, kernel, spec).value,
                    sid_u_bruteforce(ds, kernel, spec).value,
                ),
            )
    elapsed = time.monotonic() - start
    ok = worst <= 1e-10 and elapsed < 60.0
    check(
        "1",
        ok,
        f"V event-sum vs quintuple and U fast vs brute force on 50 datasets x 3 kernels, "
        f"max rel err {worst:.2e}, {elapsed:.1f}s",
    )


def test_criterion_2_scale_link(instance_pool):
    worst = 0.0
    for ds in instance_pool:
        sp = build_smoothed_processes(ds, SmoothingSpec(0.4))
        for beta in (0.25, 0.5, 1.0, 1.5, 1.75):
            rho = semimetric_matrix(ds.x, NormPowerSemimetric(beta))
            kb = gram_matrix(ds.x, DistanceInducedKernel(beta))
            worst = max(
                worst,
                rel_err(-v_statistic_from_gram(rho, sp), 2.0 * v_statistic_from_gram(kb, sp)),
                rel_err(-u_statistic_from_gram(rho, sp), 2.0 * u_statistic_from_gram(kb, sp)),
            )
    check(
        "2",
        worst <= 1e-10,
        f"rho-weight route vs 2x induced-kernel route, V and U, 5 exponents, "
        f"max rel err {worst:.2e}",
    )


def test_criterion_3_symmetrized_kernel():
    rng = np.random.default_rng(SEED)
    spec = SmoothingSpec(0.5)
    worst = 0.0
    for _ in range(100):
        y4 = rng.exponential(1.0, 4)
        d4 = (rng.random(4) < 0.7).astype(float)
        t = float(rng.exponential(1.0))
        x4 = rng.standard_normal((4, 2))
        k4 = gram_matrix(x4, GaussianKernel(1.0))
        avg, closed = symmetrized_kernel_check(y4, d4, t, spec, k4)
        worst = max(worst, rel_err(avg, closed))
    check(
        "3",
        worst <= 1e-10,
        f"24-permutation average vs closed form on 100 quadruples, max rel err {worst:.2e}",
    )


def test_criterion_4_degenerate_null():
    rng = np.random.default_rng(SEED)
    y = rng.exponential(1.0, 30)
    delta = (rng.random(30) < 0.7).astype(np.int64)
    delta[0] = 1
    ds = CensoredDataset(y, delta, np.full((30, 2), 1.5))
    ok = True
    for div in (
        KernelSid(GaussianKernel()),
        KernelSid(LaplacianKernel()),
        BetaSid(1.0),
        BetaSid(0.5),
    ):
        r = run_test(ds, TestConfig(bootstrap_reps=200, seed=SEED), divergence=div)
        ok = ok and r.statistic == 0.0 and bool(np.all(r.bootstrap_draws == 0.0)) and r.p_value == 1.0
    check("4", ok, "constant covariates: statistic 0.0, every draw 0.0, p-value 1.0, exact")


def test_criterion_5_type1_30pct(crit5_pair):
    report = crit5_pair[0]
    rates = {m: report.rate(m, ALPHA) for m in report.methods}
    ok = all(0.02 <= r <= 0.09 for r in rates.values())
    detail = ", ".join(f"{m}={r:.3f}" for m, r in rates.items())
    check("5", ok, f"ex1-case1 n=50 30% censoring reps=300: {detail}, band [0.02, 0.09]")


def test_criterion_6_type1_60pct(crit6_pair):
    rate = crit6_pair[0].rate("sid-gauss", ALPHA)
    check(
        "6",
        0.02 <= rate <= 0.09,
        f"ex1-case2 n=50 60% covariate-dependent censoring: sid-gauss={rate:.3f}, band [0.02, 0.09]",
    )


def test_criterion_7a_power_in_n(crit7a_pair):
    rates = [r.rate("sid-gauss", ALPHA) for r in crit7a_pair[0].reports]
    ok = rates[0] < rates[1] < rates[2] and rates[2] > 3 * ALPHA
    check(
        "7a",
        ok,
        f"ex3-case1 rates over n=50/100/150: {rates[0]:.3f} < {rates[1]:.3f} < {rates[2]:.3f}, "
        f"last > {3 * ALPHA:.2f}",
    )


def test_criterion_7b_power_in_theta(crit7b_pair):
    sweep = crit7b_pair[0]
    rates = [r.rate("sid-gauss", ALPHA) for r in sweep.reports]
    band = 3.0 * rate_se(ALPHA, 200)
    null_ok = abs(rates[0] - ALPHA) <= band
    mono_ok = all(
        rates[k + 1] >= rates[k] - 2.0 * max(rate_se(rates[k], 200), rate_se(rates[k + 1], 200))
        for k in range(2)
    )
    check(
        "7b",
        null_ok and mono_ok,
        f"ex6-case1 rates over theta=0/0.3/0.6: {rates[0]:.3f}/{rates[1]:.3f}/{rates[2]:.3f}, "
        f"null band 0.05+/-{band:.3f}, nondecreasing within 2 SE",
    )


def test_criterion_7c_power_in_beta(crit7c_pair):
    sweep = crit7c_pair[0]
    lo = sweep.reports[0].rate("sid-0.25", ALPHA)
    hi = sweep.reports[1].rate("sid-1.75", ALPHA)
    margin = 2.0 * rate_se(lo, 200)
    check(
        "7c",
        hi - lo >= margin,
        f"appC-cox-linear n=150: beta=1.75 rate {hi:.3f} vs beta=0.25 rate {lo:.3f}, "
        f"gap {hi - lo:.3f} >= 2 SE = {margin:.3f}",
    )


def test_criterion_8_bootstrap_moments():
    rng = np.random.default_rng(SEED)
    spec = SmoothingSpec(0.4)
    reps = 10_000
    ok = True
    worst_mean, worst_var = 0.0, 0.0
    for i in range(20):
        n = int(rng.integers(15, 35))
        y = rng.exponential(1.0, n)
        delta = (rng.random(n) < 0.7).astype(np.int64)
        delta[0] = 1
        ds = CensoredDataset(y, delta, rng.standard_normal((n, 2)))
        m = build_bootstrap_matrix(ds, GaussianKernel(1.0), spec)
        diag = bootstrap_null_diagnostics(m, reps, seed=SEED + i)
        sd = math.sqrt(diag.closed_form_variance)
        mean_z = abs(diag.mean) / (sd / math.sqrt(reps))
        var_rel = abs(diag.variance - diag.closed_form_variance) / diag.closed_form_variance
        worst_mean = max(worst_mean, mean_z)
        worst_var = max(worst_var, var_rel)
        ok = ok and mean_z <= 4.0 and var_rel <= 0.10
    check(
        "8",
        ok,
        f"20 matrices, B=10000 u-wild draws: worst |mean|/(sd/sqrt(B)) = {worst_mean:.2f} <= 4, "
        f"worst variance error {worst_var:.1%} <= 10%",
    )


def test_criterion_9_determinism(crit5_pair, crit6_pair, crit7a_pair, crit7b_pair, crit7c_pair):
    same = (
        crit5_pair[0] == crit5_pair[1]
        and crit6_pair[0] == crit6_pair[1]
        and crit7a_pair[0] == crit7a_pair[1]
        and crit7b_pair[0] == crit7b_pair[1]
        and crit7c_pair[0] == crit7c_pair[1]
    )
    check("9", same, "criteria 5-7 reports identical across 1-thread and 2-thread runs")
