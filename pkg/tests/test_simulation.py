import dataclasses
import json
import math

import numpy as np
import pytest
from scipy.special import gamma as gamma_fn

import sid.simulation as sim
from sid import (
    SCENARIOS,
    BetaSid,
    BracketFailure,
    CalibrationNotApplicable,
    KernelSid,
    MonteCarloReport,
    ScenarioSpec,
    TestConfig,
    UncalibratedCensoring,
    UnknownScenario,
    calibrate_censoring,
    generate,
    monte_carlo,
    parse_method,
    power_sweep,
)
from sid.kernels import GaussianKernel, LaplacianKernel
from sid.report import (
    REPORT_CSV_COLUMNS,
    SWEEP_CSV_COLUMNS,
    dumps_json,
    report_to_dict,
    sweep_to_dict,
)

EXPECTED_IDS = {
    *(f"ex1-case{i}" for i in (1, 2, 3, 4)),
    *(f"ex2-{f}" for f in ("loglinear", "logquadratic", "logcubic", "logcosine", "logtwolines", "logcircle")),
    *(f"ex3-case{i}" for i in range(1, 7)),
    *(f"ex5-case{i}" for i in range(1, 7)),
    *(f"ex4-cure{i}" for i in (1, 2, 3, 4)),
    "ex6-case1",
    "ex6-case2",
    "appC-poisson",
    "appC-t3",
    "appC-highdim",
    "appC-power-poisson",
    "appC-power-t3",
    "appC-power-normal",
    "appC-power-highdim",
    "appC-cox-linear",
    "appC-cox-nonlinear",
}


def test_registry_ids_exact():
    assert set(SCENARIOS) == EXPECTED_IDS


def test_generate_shapes_and_validity():
    cases = [
        (ScenarioSpec("ex1-case1", 40, lam=1.0), 1),
        (ScenarioSpec("ex1-case4", 40, lam=1.0), 10),
        (ScenarioSpec("ex3-case2", 40, lam=1.0), 6),
        (ScenarioSpec("ex2-logcircle", 40, lam=1.0), 2),
        (ScenarioSpec("appC-highdim", 40, lam=1.0), 20),
        (ScenarioSpec("appC-highdim", 40, lam=1.0, p=35), 35),
        (ScenarioSpec("ex6-case1", 40, theta=0.5), 1),
    ]
    for spec, p in cases:
        ds = generate(spec, 11)
        assert ds.n == 40 and ds.p == p
        assert np.all(ds.y > 0) and set(np.unique(ds.delta)) <= {0, 1}
        assert np.all(np.isfinite(ds.y)) and np.all(np.isfinite(ds.x))


def test_generate_ignores_p_when_not_configurable():
    ds = generate(ScenarioSpec("ex1-case1", 30, lam=1.0, p=7), 3)
    assert ds.p == 1


def test_generate_deterministic():
    spec = ScenarioSpec("ex3-case1", 25, lam=2.0)
    a = generate(spec, 123)
    b = generate(spec, 123)
    assert np.array_equal(a.y, b.y) and np.array_equal(a.x, b.x)
    c = generate(spec, 124)
    assert not np.array_equal(a.y, c.y)


def test_generate_requires_lam():
    with pytest.raises(UncalibratedCensoring):
        generate(ScenarioSpec("ex1-case1", 20, censoring=0.3), 0)


def test_unknown_scenario_and_bad_knobs():
    with pytest.raises(UnknownScenario):
        ScenarioSpec("ex9-case1", 20)
    with pytest.raises(ValueError):
        ScenarioSpec("ex1-case1", 4)
    with pytest.raises(ValueError):
        ScenarioSpec("ex1-case1", 20, censoring=1.5)
    with pytest.raises(ValueError):
        generate(ScenarioSpec("ex6-case1", 20), 0)  # theta missing


def big_sample(scenario_id, lam, m=200_000, theta=None, p=None):
    spec = ScenarioSpec(scenario_id, 10, lam=lam, theta=theta, p=p)
    rng = np.random.default_rng(987)
    return sim._sample_raw(spec, m, lam, rng)


def test_moments_ex1_case1():
    t, c, x = big_sample("ex1-case1", lam=2.0)
    assert t.mean() == pytest.approx(2.0, rel=0.02)
    assert c.mean() == pytest.approx(1.0, rel=0.02)
    assert x.min() >= -1.0 and x.max() <= 1.0
    assert x.mean() == pytest.approx(0.0, abs=0.01)


def test_moments_ex1_case3_weibull():
    t, c, x = big_sample("ex1-case3", lam=1.0)
    # E[C | X=x] = Gamma(1 + 1/k(x)) for unit-scale Weibull
    k = 3.35 + 1.75 * x[:, 0]
    assert c.mean() == pytest.approx(gamma_fn(1.0 + 1.0 / k).mean(), rel=0.02)


def test_moments_ar1_covariance():
    _, _, x = big_sample("ex3-case1", lam=1.0)
    emp = np.corrcoef(x, rowvar=False)
    want = 0.5 ** np.abs(np.subtract.outer(np.arange(6), np.arange(6)))
    assert np.allclose(emp, want, atol=0.02)


def test_moments_ex3_case3_lognormal():
    t, _, x = big_sample("ex3-case3", lam=1.0)
    # log t = 0.2 b'X + 2 eps with Var(b'X) = b' Sigma b
    b = np.array([1.0, 1.0, 1.0, -1.0, -1.0, -1.0])
    sigma = 0.5 ** np.abs(np.subtract.outer(np.arange(6), np.arange(6)))
    var = 0.04 * float(b @ sigma @ b) + 4.0
    logs = np.log(t)
    assert logs.mean() == pytest.approx(0.0, abs=0.03)
    assert logs.var() == pytest.approx(var, rel=0.03)


def test_moments_ex5_covariate_censoring():
    _, c, x = big_sample("ex5-case1", lam=0.7)
    # C | X ~ Exp(mean e^{lam + x1}), so E[C] = e^{lam} E[e^{X1}] = e^{lam + 1/2}
    assert c.mean() == pytest.approx(math.exp(0.7 + 0.5), rel=0.03)


def test_moments_ex6_fixed_censoring():
    t, c, x = big_sample("ex6-case1", lam=0.0, theta=0.8)
    assert c.mean() == pytest.approx(3.0, rel=0.02)
    logs = np.log(t) - 0.8 * x[:, 0]
    assert logs.mean() == pytest.approx(0.0, abs=0.02)
    assert logs.var() == pytest.approx(1.0, rel=0.02)


def test_moments_ex4_cure_fraction():
    # with censoring mean huge, censored fraction -> P(cured) = 0.4
    t, c, _ = big_sample("ex4-cure1", lam=1e6)
    assert np.mean(t > c) == pytest.approx(0.4, abs=0.01)


def test_moments_ex2_twolines():
    t, _, x = big_sample("ex2-logtwolines", lam=1.0)
    # log t = +/-4x + eps, so Var = 16 E[x^2] + 1 = 16/3 + 1
    logs = np.log(t)
    assert logs.var() == pytest.approx(16.0 / 3.0 + 1.0, rel=0.03)
    assert logs.mean() == pytest.approx(0.0, abs=0.05)


def test_moments_appc_poisson():
    _, _, x = big_sample("appC-poisson", lam=1.0)
    assert x.mean() == pytest.approx(3.0, rel=0.02)
    assert x.var() == pytest.approx(3.0, rel=0.03)


def test_calibration_deterministic_and_accurate():
    spec = ScenarioSpec("ex1-case1", 50)
    lam1 = calibrate_censoring(spec, 0.3, seed=99)
    lam2 = calibrate_censoring(spec, 0.3, seed=99)
    assert lam1 == lam2
    # P(T > C) = lam / (1 + lam) for T~Exp(lam), C~Exp(1)
    assert abs(lam1 / (1.0 + lam1) - 0.3) <= 0.01
    lam6 = calibrate_censoring(spec, 0.6, seed=99)
    assert abs(lam6 / (1.0 + lam6) - 0.6) <= 0.01


def test_calibration_logmean_role():
    spec = ScenarioSpec("ex5-case1", 50)
    lam = calibrate_censoring(spec, 0.4, seed=5)
    assert -5.0 <= lam <= 5.0
    rng = np.random.default_rng(1)
    t, c, _ = sim._sample_raw(dataclasses.replace(spec, lam=lam), 200_000, lam, rng)
    assert np.mean(t > c) == pytest.approx(0.4, abs=0.02)


def test_calibration_errors():
    with pytest.raises(CalibrationNotApplicable):
        calibrate_censoring(ScenarioSpec("ex6-case1", 50, theta=0.0), 0.3, seed=0)
    with pytest.raises(ValueError):
        calibrate_censoring(ScenarioSpec("ex1-case1", 50), 0.0, seed=0)
    with pytest.raises(ValueError):
        calibrate_censoring(ScenarioSpec("ex1-case1", 50), 1.0, seed=0)
    # 40% of ex4-cure1 subjects never fail, so censoring below 0.4 is unreachable
    with pytest.raises(BracketFailure):
        calibrate_censoring(ScenarioSpec("ex4-cure1", 50), 0.2, seed=0)


def test_parse_method():
    assert parse_method("sid-gauss") == KernelSid(GaussianKernel())
    assert parse_method("sid-lap") == KernelSid(LaplacianKernel())
    assert parse_method("sid-0.5") == BetaSid(0.5)
    assert parse_method("sid-1") == BetaSid(1.0)
    for bad in ("sid-x", "gauss", "sid-"):
        with pytest.raises(ValueError):
            parse_method(bad)


@pytest.fixture(scope="module")
def small_report():
    spec = ScenarioSpec("ex1-case1", 20, lam=0.42)
    cfg = TestConfig(bootstrap_reps=50, seed=31)
    return monte_carlo(
        spec, ["sid-gauss", "sid-1"], reps=12, cfg=cfg, alphas=(0.01, 0.05, 0.2)
    )


def test_monte_carlo_reproducible_across_threads(small_report):
    spec = ScenarioSpec("ex1-case1", 20, lam=0.42)
    cfg = TestConfig(bootstrap_reps=50, seed=31)
    again = monte_carlo(spec, ["sid-gauss", "sid-1"], reps=12, cfg=cfg, alphas=(0.01, 0.05, 0.2))
    assert again == small_report
    threaded = monte_carlo(
        spec, ["sid-gauss", "sid-1"], reps=12, cfg=cfg, alphas=(0.01, 0.05, 0.2), threads=2
    )
    assert threaded == small_report


def test_monte_carlo_alpha_monotone(small_report):
    for method in small_report.methods:
        r = [small_report.rate(method, a) for a in (0.01, 0.05, 0.2)]
        assert r[0] <= r[1] <= r[2]


def test_monte_carlo_rates_are_exact_fractions(small_report):
    for method in small_report.methods:
        for alpha in small_report.alphas:
            rate = small_report.rate(method, alpha)
            assert rate == int(round(rate * 12)) / 12


def test_monte_carlo_method_rates_independent_of_companions(small_report):
    spec = ScenarioSpec("ex1-case1", 20, lam=0.42)
    cfg = TestConfig(bootstrap_reps=50, seed=31)
    solo = monte_carlo(spec, ["sid-gauss"], reps=12, cfg=cfg, alphas=(0.01, 0.05, 0.2))
    assert solo.rates["sid-gauss"] == small_report.rates["sid-gauss"]


def test_monte_carlo_records_resolved_spec(small_report):
    assert small_report.spec.lam == 0.42
    assert small_report.spec.p == 1
    assert small_report.spec.theta is None


def test_monte_carlo_calibrates_when_needed():
    spec = ScenarioSpec("ex1-case1", 15, censoring=0.3)
    cfg = TestConfig(bootstrap_reps=30, seed=8)
    rep = monte_carlo(spec, ["sid-gauss"], reps=4, cfg=cfg)
    assert rep.spec.lam is not None
    assert abs(rep.spec.lam / (1.0 + rep.spec.lam) - 0.3) <= 0.01


def test_power_sweep_calibrates_once_per_setting(monkeypatch):
    calls = []
    real = sim.calibrate_censoring

    def counting(spec, target, seed):
        calls.append(spec.scenario)
        return real(spec, target, seed)

    monkeypatch.setattr(sim, "calibrate_censoring", counting)
    base = ScenarioSpec("ex1-case1", 15, censoring=0.3)
    cfg = TestConfig(bootstrap_reps=20, seed=44)
    sweep = power_sweep(base, "n", [15, 20], ["sid-gauss"], reps=3, cfg=cfg)
    assert len(calls) == 1
    assert sweep.values == (15, 20)
    assert [r.spec.n for r in sweep.reports] == [15, 20]
    assert len({r.spec.lam for r in sweep.reports}) == 1


def test_power_sweep_beta_param_replaces_methods():
    base = ScenarioSpec("ex1-case1", 15, lam=0.42)
    cfg = TestConfig(bootstrap_reps=20, seed=2)
    sweep = power_sweep(base, "beta", [0.5, 1.5], ["sid-gauss"], reps=3, cfg=cfg)
    assert sweep.reports[0].methods == ("sid-0.5",)
    assert sweep.reports[1].methods == ("sid-1.5",)
    with pytest.raises(ValueError):
        power_sweep(base, "gamma", [1.0], ["sid-gauss"], reps=2, cfg=cfg)


def test_report_serialization_round_trip(small_report):
    d = report_to_dict(small_report)
    assert d["scenario"] == "ex1-case1" and d["n"] == 20 and d["lam"] == 0.42
    assert json.loads(dumps_json(d)) == d
    assert "wall_time_sec" not in json.dumps(d)


def test_report_csv_shape(small_report, tmp_path):
    from sid.report import write_report_csv

    path = tmp_path / "r.csv"
    write_report_csv(small_report, path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == ",".join(REPORT_CSV_COLUMNS)
    assert len(lines) == 1 + 2 * 3  # methods x alphas


def test_sweep_csv_shape(tmp_path):
    from sid.report import write_sweep_csv

    base = ScenarioSpec("ex6-case1", 15)
    cfg = TestConfig(bootstrap_reps=20, seed=13)
    sweep = power_sweep(base, "theta", [0.0, 0.5], ["sid-gauss"], reps=3, cfg=cfg)
    d = sweep_to_dict(sweep)
    assert d["param"] == "theta" and d["values"] == [0.0, 0.5]
    path = tmp_path / "s.csv"
    write_sweep_csv(sweep, path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == ",".join(SWEEP_CSV_COLUMNS)
    assert len(lines) == 1 + 2
    assert lines[1].split(",")[1] == "theta"
