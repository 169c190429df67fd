"""Scenario generators, censoring calibration, and the Monte Carlo harness.

Scenario ids follow the catalog in the README. Exponential laws are
parameterized by their MEAN everywhere (Exp(0.5) has mean 0.5); numpy's
``exponential(scale=...)`` takes exactly that. The free parameter lambda is
either the event-time mean ("event-mean" scenarios), the censoring-time
mean ("censor-mean"), or a log-mean shift of a covariate-dependent
censoring law ("censor-logmean"); "fixed" scenarios specify the censoring
law completely and admit no calibration.
"""

from __future__ import annotations

import dataclasses
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .bootstrap import (
    BetaSid,
    KernelSid,
    MultiplierStream,
    bootstrap_matrix_from_gram,
    critical_value_from_draws,
    wild_draws,
)
from .data import CensoredDataset, TestConfig
from .errors import (
    BracketFailure,
    CalibrationNotApplicable,
    NoEvents,
    UncalibratedCensoring,
    UnknownScenario,
)
from .estimators import build_smoothed_processes, u_statistic_from_gram, v_statistic_from_gram
from .kernels import (
    DistanceInducedKernel,
    GaussianKernel,
    LaplacianKernel,
    gram_matrix,
    median_heuristic,
    resolve_smoothing,
)
from .rng import TAG_CALIBRATION, TAG_DATA, TAG_TEST_SEED, derive_rng, derive_seed

__all__ = [
    "Scenario",
    "ScenarioSpec",
    "MonteCarloReport",
    "SweepResult",
    "SCENARIOS",
    "parse_method",
    "generate",
    "calibrate_censoring",
    "monte_carlo",
    "power_sweep",
    "CALIBRATION_DRAWS",
    "CALIBRATION_TOL",
]

CALIBRATION_DRAWS = 200_000
CALIBRATION_TOL = 0.005
CALIBRATION_MAX_ITER = 40

Sampler = Callable[[int, int, float, float, np.random.Generator], tuple]


@dataclass(frozen=True)
class Scenario:
    """Registry entry: how to sample (T, C, X) and what lambda means."""

    id: str
    lam_role: str  # "event-mean" | "censor-mean" | "censor-logmean" | "fixed"
    sampler: Sampler
    default_p: int = 1
    p_configurable: bool = False
    uses_theta: bool = False


@lru_cache(maxsize=None)
def _ar1_chol(p: int) -> np.ndarray:
    jk = np.arange(p)
    sigma = 0.5 ** np.abs(jk[:, None] - jk[None, :])
    chol = np.linalg.cholesky(sigma)
    chol.flags.writeable = False
    return chol


def _mvn_ar1(n: int, p: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal((n, p)) @ _ar1_chol(p).T


_B6 = np.array([1.0, 1.0, 1.0, -1.0, -1.0, -1.0])
_B6_1 = np.array([0.0, 0.0, 1.0, -1.0, 0.0, 0.0])
_B6_2 = np.array([1.0, 1.0, 0.0, 0.0, 0.0, 0.0])
_B6_CURE = np.array([1.0, 1.0, 1.0, -1.0, 1.0, -1.0])


def _make_ex1(case: int) -> Sampler:
    def sampler(n, p, theta, lam, rng):
        if case == 4:
            x = _mvn_ar1(n, 10, rng)
            t = rng.exponential(lam, n)
            c = rng.exponential(np.exp(x.sum(axis=1) / 20.0), n)
        else:
            x = rng.uniform(-1.0, 1.0, (n, 1))
            t = rng.exponential(lam, n)
            if case == 1:
                c = rng.exponential(1.0, n)
            elif case == 2:
                c = rng.exponential(np.exp(x[:, 0] / 3.0), n)
            else:  # Weibull with covariate-dependent shape, unit scale
                c = rng.weibull(3.35 + 1.75 * x[:, 0])
        return t, c, x

    return sampler


def _make_ex2(form: str) -> Sampler:
    def sampler(n, p, theta, lam, rng):
        if form == "logcircle":
            x = rng.uniform(-1.0, 1.0, (n, 2))
            eps = rng.standard_normal(n)
            eta = (x[:, 0] ** 2 + x[:, 1] ** 2 <= 0.5).astype(np.float64)
            t = np.exp(eta + eps)
        else:
            x = rng.uniform(-1.0, 1.0, (n, 1))
            xv = x[:, 0]
            if form == "logtwolines":
                a = rng.integers(0, 2, n).astype(np.float64)
                eps = rng.standard_normal(n)
                t = np.exp(4.0 * (a * xv - (1.0 - a) * xv) + eps)
            else:
                eps = rng.standard_normal(n)
                eta = {
                    "loglinear": lambda v: 0.5 * v,
                    "logquadratic": lambda v: 1.2 * v**2,
                    "logcubic": lambda v: v**3,
                    "logcosine": lambda v: 0.5 * np.cos(3.0 * v),
                }[form](xv)
                t = np.exp(eta + eps)
        c = rng.exponential(lam, n)
        return t, c, x

    return sampler


def _ex3_event_times(case: int, x: np.ndarray, eps: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    if case == 1:
        return rng.exponential(np.exp(x.sum(axis=1) / 10.0))
    if case == 2:
        return rng.exponential(np.exp((x @ _B6) ** 2 / 2.0))
    if case == 3:
        return np.exp(0.2 * (x @ _B6) + 2.0 * eps)
    if case == 4:
        return np.exp(-0.5 * (x @ _B6) ** 2 + 4.0 * eps)
    if case == 5:
        return np.exp(0.25 * (x @ _B6_1) + 1.5 * (x @ _B6_2) * eps)
    return np.exp(2.0 * (x @ _B6_1) ** 2 + 0.15 * (x @ _B6_2) * eps)


def _make_ex3(case: int, covariate_dependent_censoring: bool) -> Sampler:
    def sampler(n, p, theta, lam, rng):
        x = _mvn_ar1(n, 6, rng)
        eps = rng.standard_normal(n)
        t = _ex3_event_times(case, x, eps, rng)
        if covariate_dependent_censoring:
            c = rng.exponential(np.exp(lam + x[:, 0]), n)
        else:
            c = rng.exponential(lam, n)
        return t, c, x

    return sampler


def _make_ex4(case: int) -> Sampler:
    def sampler(n, p, theta, lam, rng):
        if case in (1, 2):
            x = rng.standard_normal((n, 1))
            xv = x[:, 0]
            mean = np.exp(0.5 * xv) if case == 1 else np.exp(0.5 * xv**2)
            tstar = rng.exponential(mean, n)
        else:
            x = _mvn_ar1(n, 6, rng)
            eps = rng.standard_normal(n)
            lin = x @ _B6_CURE
            tstar = np.exp(0.5 * lin + 3.0 * eps) if case == 3 else np.exp(0.2 * lin**3 + eps)
        # cured subjects never fail; the infinite time stays internal and the
        # emitted observation is (C, delta=0)
        eta = rng.binomial(1, 0.6, n)
        t = np.where(eta == 1, tstar, np.inf)
        c = rng.exponential(lam, n)
        return t, c, x

    return sampler


def _make_ex6(case: int) -> Sampler:
    def sampler(n, p, theta, lam, rng):
        x = rng.standard_normal((n, 1))
        xv = x[:, 0]
        eps = rng.standard_normal(n)
        t = np.exp(theta * (xv if case == 1 else xv**2) + eps)
        c = rng.exponential(3.0, n)
        return t, c, x

    return sampler


def _make_appc_type1(covariates: str) -> Sampler:
    def sampler(n, p, theta, lam, rng):
        if covariates == "poisson":
            x = rng.poisson(3.0, (n, 1)).astype(np.float64)
        else:
            x = rng.standard_t(3, (n, 1))
        t = rng.exponential(lam, n)
        c = rng.exponential(np.exp(x[:, 0] / 3.0), n)
        return t, c, x

    return sampler


def _appc_highdim(n, p, theta, lam, rng):
    x = _mvn_ar1(n, p, rng)
    t = rng.exponential(lam, n)
    c = rng.exponential(np.exp(x.sum(axis=1) / 20.0), n)
    return t, c, x


def _make_appc_power(covariates: str) -> Sampler:
    def sampler(n, p, theta, lam, rng):
        if covariates == "poisson":
            x = rng.poisson(3.0, (n, 1)).astype(np.float64)
        elif covariates == "t3":
            x = rng.standard_t(3, (n, 1))
        elif covariates == "normal":
            x = rng.standard_normal((n, 1))
        else:
            x = _mvn_ar1(n, p, rng)
        t = rng.exponential(np.exp(x.sum(axis=1) ** 2 / 5.0), n)
        c = rng.exponential(lam, n)
        return t, c, x

    return sampler


def _make_appc_cox(linear: bool) -> Sampler:
    def sampler(n, p, theta, lam, rng):
        x = rng.standard_normal((n, 1))
        xv = x[:, 0]
        t = rng.exponential(np.exp(xv / 5.0 if linear else xv**2 / 2.0), n)
        c = rng.exponential(lam, n)
        return t, c, x

    return sampler


def _build_registry() -> dict[str, Scenario]:
    entries = []
    for case in (1, 2, 3, 4):
        entries.append(
            Scenario(f"ex1-case{case}", "event-mean", _make_ex1(case), default_p=10 if case == 4 else 1)
        )
    for form in ("loglinear", "logquadratic", "logcubic", "logcosine", "logtwolines", "logcircle"):
        entries.append(
            Scenario(f"ex2-{form}", "censor-mean", _make_ex2(form), default_p=2 if form == "logcircle" else 1)
        )
    for case in range(1, 7):
        entries.append(Scenario(f"ex3-case{case}", "censor-mean", _make_ex3(case, False), default_p=6))
        entries.append(Scenario(f"ex5-case{case}", "censor-logmean", _make_ex3(case, True), default_p=6))
    for case in (1, 2, 3, 4):
        entries.append(
            Scenario(f"ex4-cure{case}", "censor-mean", _make_ex4(case), default_p=1 if case in (1, 2) else 6)
        )
    for case in (1, 2):
        entries.append(Scenario(f"ex6-case{case}", "fixed", _make_ex6(case), uses_theta=True))
    entries.append(Scenario("appC-poisson", "event-mean", _make_appc_type1("poisson")))
    entries.append(Scenario("appC-t3", "event-mean", _make_appc_type1("t3")))
    entries.append(Scenario("appC-highdim", "event-mean", _appc_highdim, default_p=20, p_configurable=True))
    for cov in ("poisson", "t3", "normal"):
        entries.append(Scenario(f"appC-power-{cov}", "censor-mean", _make_appc_power(cov)))
    entries.append(
        Scenario("appC-power-highdim", "censor-mean", _make_appc_power("highdim"), default_p=20, p_configurable=True)
    )
    entries.append(Scenario("appC-cox-linear", "censor-mean", _make_appc_cox(True)))
    entries.append(Scenario("appC-cox-nonlinear", "censor-mean", _make_appc_cox(False)))
    return {s.id: s for s in entries}


SCENARIOS: dict[str, Scenario] = _build_registry()


@dataclass(frozen=True)
class ScenarioSpec:
    """A scenario id plus the knobs a run needs.

    censoring is the target censoring fraction (None for scenarios whose
    censoring law is fully specified); lam is the resolved calibration
    parameter, usually filled in by calibrate_censoring.
    """

    scenario: str
    n: int
    censoring: float | None = None
    p: int | None = None
    theta: float | None = None
    lam: float | None = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise UnknownScenario(f"unknown scenario id {self.scenario!r}")
        if self.n < 5:
            raise ValueError(f"scenario sample size must be >= 5, got {self.n}")
        if self.censoring is not None and not (0.0 < self.censoring < 1.0):
            raise ValueError(f"target censoring must lie in (0, 1), got {self.censoring}")

    def resolved_p(self) -> int:
        scen = SCENARIOS[self.scenario]
        if scen.p_configurable and self.p is not None:
            return self.p
        return scen.default_p

    def resolved_theta(self) -> float:
        scen = SCENARIOS[self.scenario]
        if not scen.uses_theta:
            return 0.0
        if self.theta is None:
            raise ValueError(f"scenario {self.scenario} requires theta")
        return self.theta


def _sample_raw(spec: ScenarioSpec, m: int, lam: float, rng: np.random.Generator):
    scen = SCENARIOS[spec.scenario]
    return scen.sampler(m, spec.resolved_p(), spec.resolved_theta(), lam, rng)


def generate(spec: ScenarioSpec, rng: np.random.Generator | int) -> CensoredDataset:
    """Sample one dataset from a scenario.

    Requires spec.lam for any scenario with a free censoring parameter
    (raises UncalibratedCensoring otherwise). An int rng is treated as a
    seed for the scenario data stream.
    """
    scen = SCENARIOS[spec.scenario]
    lam = spec.lam
    if scen.lam_role == "fixed":
        lam = 0.0
    elif lam is None:
        raise UncalibratedCensoring(
            f"scenario {spec.scenario} has a free censoring parameter; calibrate first"
        )
    if isinstance(rng, int):
        rng = derive_rng(rng, TAG_DATA)
    t, c, x = _sample_raw(spec, spec.n, lam, rng)
    y = np.minimum(t, c)
    delta = (t <= c).astype(np.int64)
    if int(delta.sum()) == 0:
        raise NoEvents(f"scenario {spec.scenario} produced a fully censored sample")
    return CensoredDataset(y, delta, x)


def calibrate_censoring(spec: ScenarioSpec, target: float, seed: int) -> float:
    """Bisect lambda until the empirical censoring fraction hits target.

    Each evaluation redraws the same 200k-sample stream (common random
    numbers), so the censoring curve is a deterministic monotone function
    of lambda and the whole procedure is a pure function of (spec, target,
    seed). Tolerance 0.005, at most 40 bisection steps. Raises
    CalibrationNotApplicable for fully specified censoring laws and
    BracketFailure when the target cannot be reached inside the bracket.
    """
    scen = SCENARIOS[spec.scenario]
    if scen.lam_role == "fixed":
        raise CalibrationNotApplicable(
            f"scenario {spec.scenario} fixes its censoring law; nothing to calibrate"
        )
    if not (0.0 < target < 1.0):
        raise ValueError(f"target censoring must lie in (0, 1), got {target}")

    def censored_fraction(lam: float) -> float:
        rng = derive_rng(seed, TAG_CALIBRATION)
        t, c, _ = _sample_raw(spec, CALIBRATION_DRAWS, lam, rng)
        return float(np.mean(t > c))

    log_scale = scen.lam_role in ("event-mean", "censor-mean")
    lo, hi = (1e-4, 1e4) if log_scale else (-5.0, 5.0)
    f_lo = censored_fraction(lo)
    f_hi = censored_fraction(hi)
    if abs(f_lo - target) <= CALIBRATION_TOL:
        return lo
    if abs(f_hi - target) <= CALIBRATION_TOL:
        return hi
    if not (min(f_lo, f_hi) < target < max(f_lo, f_hi)):
        raise BracketFailure(
            f"target {target} outside reachable range [{min(f_lo, f_hi):.4f}, {max(f_lo, f_hi):.4f}]"
        )
    increasing = f_hi > f_lo
    for _ in range(CALIBRATION_MAX_ITER):
        mid = math.sqrt(lo * hi) if log_scale else 0.5 * (lo + hi)
        f_mid = censored_fraction(mid)
        if abs(f_mid - target) <= CALIBRATION_TOL:
            return mid
        if (f_mid < target) == increasing:
            lo = mid
        else:
            hi = mid
    raise BracketFailure(f"no convergence to {target} within {CALIBRATION_MAX_ITER} bisection steps")


def parse_method(label: str):
    """Map a method label to its divergence: sid-gauss, sid-lap, or sid-<beta>."""
    if label == "sid-gauss":
        return KernelSid(GaussianKernel())
    if label == "sid-lap":
        return KernelSid(LaplacianKernel())
    if label.startswith("sid-"):
        try:
            return BetaSid(float(label[4:]))
        except ValueError as exc:
            raise ValueError(f"unknown method label {label!r}") from exc
    raise ValueError(f"unknown method label {label!r}")


@dataclass(frozen=True)
class MonteCarloReport:
    """Rejection rates of one scenario for several methods and levels.

    rates[method][str(alpha)] is the fraction of replicates rejected.
    wall_time_sec is informational only: it does not participate in
    equality, and serializers leave it out of the reproducible payload.
    """

    spec: ScenarioSpec
    methods: tuple[str, ...]
    reps: int
    bootstrap_reps: int
    alphas: tuple[float, ...]
    variant: str
    seed: int
    rates: dict
    wall_time_sec: float = field(compare=False, default=0.0)

    def rate(self, method: str, alpha: float) -> float:
        return self.rates[method][str(alpha)]


def _replicate_rejections(args) -> np.ndarray:
    """One Monte Carlo replicate: rejection indicators (methods x alphas)."""
    spec, methods, bootstrap_reps, variant, alphas, master_seed, rep = args
    ds = generate(spec, derive_rng(master_seed, TAG_DATA, rep))
    smoothing = resolve_smoothing(ds.y, "auto")
    sp = build_smoothed_processes(ds, smoothing)
    factor = ds.n * math.sqrt(smoothing.h)
    emat = MultiplierStream(derive_seed(master_seed, TAG_TEST_SEED, rep)).matrix(bootstrap_reps, ds.n)
    divergences = [parse_method(label) for label in methods]
    gamma_med = None
    if any(isinstance(d, KernelSid) for d in divergences):
        gamma_med = median_heuristic(ds.x)
    out = np.zeros((len(methods), len(alphas)), dtype=np.uint8)
    for mi, div in enumerate(divergences):
        if isinstance(div, BetaSid):
            kernel, scale = DistanceInducedKernel(div.beta), 2.0
        else:
            kernel = div.kernel
            if kernel.gamma is None:
                kernel = kernel.with_gamma(gamma_med)
            scale = 1.0
        k = gram_matrix(ds.x, kernel)
        if variant == "u-wild":
            stat = scale * u_statistic_from_gram(k, sp)
        else:
            stat = scale * v_statistic_from_gram(k, sp)
        mvals = bootstrap_matrix_from_gram(k, sp)
        draws = factor * scale * wild_draws(mvals, emat, variant)
        scaled = factor * stat
        for ai, alpha in enumerate(alphas):
            out[mi, ai] = scaled >= critical_value_from_draws(draws, alpha)
    return out


def _resolve_spec(spec: ScenarioSpec, seed: int) -> ScenarioSpec:
    """Fill in lam (calibrating if needed) and the effective p/theta."""
    scen = SCENARIOS[spec.scenario]
    lam = spec.lam
    if scen.lam_role != "fixed" and lam is None:
        if spec.censoring is None:
            raise UncalibratedCensoring(
                f"scenario {spec.scenario} needs either lam or a target censoring rate"
            )
        lam = calibrate_censoring(spec, spec.censoring, derive_seed(seed, TAG_CALIBRATION))
    return dataclasses.replace(
        spec,
        lam=lam,
        p=spec.resolved_p(),
        theta=spec.theta if scen.uses_theta else None,
    )


def monte_carlo(
    spec: ScenarioSpec,
    methods,
    reps: int,
    cfg: TestConfig,
    alphas=None,
    threads: int = 1,
) -> MonteCarloReport:
    """Estimate rejection rates over reps independent replicates.

    Every decision for all alphas comes from a single draw vector per
    (replicate, method). Replicate streams are keyed by (cfg.seed,
    replicate), so the report is a pure function of the arguments and in
    particular independent of the thread count.
    """
    methods = tuple(methods)
    alphas = tuple(alphas) if alphas is not None else (cfg.alpha,)
    start = time.monotonic()
    resolved = _resolve_spec(spec, cfg.seed)
    args = [
        (resolved, methods, cfg.bootstrap_reps, cfg.bootstrap_variant, alphas, cfg.seed, rep)
        for rep in range(reps)
    ]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_replicate_rejections, args, chunksize=max(1, reps // (4 * threads))))
    else:
        results = [_replicate_rejections(a) for a in args]
    counts = np.zeros((len(methods), len(alphas)), dtype=np.int64)
    for r in results:
        counts += r
    rates = {
        method: {str(alpha): int(counts[mi, ai]) / reps for ai, alpha in enumerate(alphas)}
        for mi, method in enumerate(methods)
    }
    return MonteCarloReport(
        spec=resolved,
        methods=methods,
        reps=reps,
        bootstrap_reps=cfg.bootstrap_reps,
        alphas=alphas,
        variant=cfg.bootstrap_variant,
        seed=cfg.seed,
        rates=rates,
        wall_time_sec=time.monotonic() - start,
    )


@dataclass(frozen=True)
class SweepResult:
    """Monte Carlo reports along one grid (n, theta, p, beta, or censoring)."""

    base: ScenarioSpec
    param: str
    values: tuple
    reports: tuple[MonteCarloReport, ...]


_SWEEP_PARAMS = ("n", "theta", "p", "beta", "censoring")


def power_sweep(
    base: ScenarioSpec,
    param: str,
    values,
    methods,
    reps: int,
    cfg: TestConfig,
    alphas=None,
    threads: int = 1,
) -> SweepResult:
    """Run monte_carlo along a one-parameter grid.

    param "beta" sweeps the divergence exponent (each grid point runs the
    single method sid-<value>); the other params modify the scenario spec.
    Calibrations are cached on (scenario, p, theta, censoring), so e.g. an
    n-sweep calibrates once.
    """
    if param not in _SWEEP_PARAMS:
        raise ValueError(f"sweep parameter must be one of {_SWEEP_PARAMS}, got {param!r}")
    methods = tuple(methods)
    lam_cache: dict = {}
    reports = []
    for value in values:
        if param == "beta":
            spec_i, methods_i = base, (f"sid-{value:g}",)
        else:
            spec_i = dataclasses.replace(base, **{param: int(value) if param in ("n", "p") else value})
            methods_i = methods
        scen = SCENARIOS[spec_i.scenario]
        if scen.lam_role != "fixed" and spec_i.lam is None:
            key = (spec_i.scenario, spec_i.resolved_p(), spec_i.theta, spec_i.censoring)
            if key not in lam_cache:
                lam_cache[key] = calibrate_censoring(
                    spec_i, spec_i.censoring, derive_seed(cfg.seed, TAG_CALIBRATION)
                )
            spec_i = dataclasses.replace(spec_i, lam=lam_cache[key])
        reports.append(monte_carlo(spec_i, methods_i, reps, cfg, alphas=alphas, threads=threads))
    return SweepResult(base=base, param=param, values=tuple(values), reports=tuple(reports))
