"""Wild bootstrap calibration of the divergence tests.

The bootstrap matrix M collects, per pair (i, j), the event-time integral
of the doubly centered kernel times the centered failure contrasts:

    M_ij = (1/n) sum_{r in events} U_hat(X_i, X_j; Y_r) V_hat(i, j; Y_r).

A wild draw contracts M with Rademacher multipliers: the U-wild statistic
is 2/(n(n-1)) sum_{i<j} e_i e_j M_ij, the V-wild statistic is
1/n^2 sum_{i,j} e_i e_j M_ij (diagonal included). The observed statistic,
V or U, is compared against the matching wild draws after both sides are
scaled by n h^(1/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import CensoredDataset, TestConfig, TestResult
from .errors import BadMultiplier, DegenerateCovariates
from .estimators import (
    SmoothedProcesses,
    build_smoothed_processes,
    u_statistic_from_gram,
    v_statistic_from_gram,
)
from .kernels import (
    CovariateKernel,
    DistanceInducedKernel,
    GaussianKernel,
    LaplacianKernel,
    SmoothingSpec,
    gram_matrix,
    median_heuristic,
    resolve_smoothing,
)
from .rng import TAG_MULTIPLIER, derive_rng

__all__ = [
    "BootstrapMatrix",
    "MultiplierStream",
    "KernelSid",
    "BetaSid",
    "NullDiagnostics",
    "build_bootstrap_matrix",
    "bootstrap_matrix_from_gram",
    "wild_statistic",
    "wild_draws",
    "critical_value_from_draws",
    "p_value_from_draws",
    "run_test",
    "bootstrap_null_diagnostics",
]


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class BootstrapMatrix:
    """Symmetric n x n matrix of integrated centered kernel products."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError(f"bootstrap matrix must be square, got shape {v.shape}")
        object.__setattr__(self, "values", _readonly(v))

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class KernelSid:
    """Divergence specified by a covariate kernel (gamma may be unresolved)."""

    kernel: CovariateKernel


@dataclass(frozen=True)
class BetaSid:
    """Characteristic-function-weight divergence with exponent beta.

    Equal to twice the DistanceInducedKernel(beta) divergence; both the
    observed statistic and the wild draws carry the factor 2, so decisions
    coincide with the kernel form.
    """

    beta: float

    def __post_init__(self):
        DistanceInducedKernel(self.beta)  # reuse its range validation


@dataclass(frozen=True)
class MultiplierStream:
    """Rademacher multipliers keyed by (seed, replicate).

    The vector for a replicate is a pure function of (seed, replicate);
    replicates may be drawn in any order, across any number of workers.
    """

    seed: int

    def rademacher(self, replicate: int, n: int) -> np.ndarray:
        rng = derive_rng(self.seed, TAG_MULTIPLIER, replicate)
        return rng.integers(0, 2, size=n).astype(np.float64) * 2.0 - 1.0

    def matrix(self, reps: int, n: int) -> np.ndarray:
        """Rows 0..reps-1 stacked; row b equals rademacher(b, n) exactly."""
        out = np.empty((reps, n))
        for b in range(reps):
            out[b] = self.rademacher(b, n)
        return out


def bootstrap_matrix_from_gram(k: np.ndarray, sp: SmoothedProcesses) -> np.ndarray:
    """O(n^3) build of the bootstrap matrix from a precomputed Gram matrix.

    Per event time the at-risk row means and grand mean are shared across
    all pairs, and the centered contrast enters as a rank-one factor. The
    Gram anchor shift (see estimators) leaves U_hat unchanged and makes the
    degenerate constant-covariate case exactly zero. The result is mirrored
    from the upper triangle so M_ij == M_ji holds exactly.
    """
    n = sp.n
    kc = k - k[0, 0]
    m = np.zeros((n, n))
    for idx, r in enumerate(sp.events):
        ar = sp.a[:, r]
        sa = ar.sum()
        kar = kc @ ar
        rowmean = kar / sa
        grand = (ar @ kar) / (sa * sa)
        u_hat = kc - rowmean[:, None] - rowmean[None, :] + grand
        c = sp.w[:, r] * sp.s_hat[idx] - ar * sp.f_hat[idx]
        m += u_hat * np.outer(c, c)
    m /= float(n)
    upper = np.triu(m)
    return upper + np.triu(m, 1).T


def build_bootstrap_matrix(ds: CensoredDataset, kernel: CovariateKernel, spec: SmoothingSpec) -> BootstrapMatrix:
    """Bootstrap matrix for a dataset, kernel, and smoothing spec."""
    sp = build_smoothed_processes(ds, spec)
    return BootstrapMatrix(bootstrap_matrix_from_gram(gram_matrix(ds.x, kernel), sp))


def _check_multipliers(e: np.ndarray) -> np.ndarray:
    e = np.asarray(e, dtype=np.float64)
    if e.ndim != 1 or not np.all(np.abs(e) == 1.0):
        raise BadMultiplier("multipliers must be a 1-d vector of +/-1 entries")
    return e


def wild_statistic(m: BootstrapMatrix, e, variant: str = "v-wild") -> float:
    """One unscaled wild-bootstrap draw from multiplier vector e."""
    e = _check_multipliers(e)
    if e.shape[0] != m.n:
        raise BadMultiplier(f"multiplier length {e.shape[0]} != n {m.n}")
    return float(wild_draws(m.values, e[None, :], variant)[0])


def wild_draws(mvals: np.ndarray, emat: np.ndarray, variant: str) -> np.ndarray:
    """Unscaled wild draws for a batch of multiplier rows."""
    n = mvals.shape[0]
    quad = np.einsum("bi,bi->b", emat @ mvals, emat)
    if variant == "v-wild":
        return quad / float(n) ** 2
    if variant == "u-wild":
        # e_i^2 = 1, so the off-diagonal part is quad minus the trace.
        return (quad - np.trace(mvals)) / float(n * (n - 1))
    raise ValueError(f"unknown bootstrap variant {variant!r}")


def critical_value_from_draws(draws: np.ndarray, alpha: float) -> float:
    """Ascending order statistic at rank ceil((1 - alpha) * B).

    The rank is computed on the mathematically exact product: values within
    1e-9 of an integer snap to it before the ceiling, so e.g. B=10,
    alpha=0.1 gives rank 9, not 10.
    """
    b = draws.shape[0]
    rank = math.ceil(round((1.0 - alpha) * b, 9))
    rank = min(max(rank, 1), b)
    return float(np.sort(draws)[rank - 1])


def p_value_from_draws(draws: np.ndarray, scaled_statistic: float) -> float:
    """(1 + #{draws >= observed}) / (B + 1)."""
    count = int((draws >= scaled_statistic).sum())
    return (1 + count) / (draws.shape[0] + 1)


def _resolve_divergence(ds: CensoredDataset, divergence) -> tuple[CovariateKernel, float | None, float]:
    """Return (concrete kernel, gamma_used, output scale factor)."""
    if isinstance(divergence, BetaSid):
        return DistanceInducedKernel(divergence.beta), None, 2.0
    if isinstance(divergence, KernelSid):
        kernel = divergence.kernel
        if isinstance(kernel, (GaussianKernel, LaplacianKernel)) and kernel.gamma is None:
            try:
                kernel = kernel.with_gamma(median_heuristic(ds.x))
            except DegenerateCovariates:
                # constant covariates make the statistic exactly zero for
                # any scale, so the test can still report that instead of
                # failing where the heuristic has no answer
                kernel = kernel.with_gamma(1.0)
        gamma = kernel.gamma if isinstance(kernel, (GaussianKernel, LaplacianKernel)) else None
        return kernel, gamma, 1.0
    raise TypeError(f"unsupported divergence {divergence!r}")


def run_test(ds: CensoredDataset, cfg: TestConfig, divergence=None) -> TestResult:
    """Run one independence test end to end.

    Resolves the bandwidth and kernel scale, computes the observed
    statistic paired with the configured wild variant (V with v-wild, U
    with u-wild), draws B wild statistics from the replicate-keyed
    multiplier stream, and applies the n h^(1/2) scaling to both sides.
    """
    if divergence is None:
        if cfg.kernel is None:
            raise ValueError("no divergence: provide one, or set kernel in the config")
        divergence = KernelSid(cfg.kernel)
    smoothing = resolve_smoothing(ds.y, cfg.smoothing)
    kernel, gamma_used, scale = _resolve_divergence(ds, divergence)
    k = gram_matrix(ds.x, kernel)
    sp = build_smoothed_processes(ds, smoothing)
    if cfg.bootstrap_variant == "u-wild":
        statistic = scale * u_statistic_from_gram(k, sp)
    else:
        statistic = scale * v_statistic_from_gram(k, sp)
    mvals = bootstrap_matrix_from_gram(k, sp)
    emat = MultiplierStream(cfg.seed).matrix(cfg.bootstrap_reps, ds.n)
    factor = ds.n * math.sqrt(smoothing.h)
    draws = factor * scale * wild_draws(mvals, emat, cfg.bootstrap_variant)
    scaled = factor * statistic
    crit = critical_value_from_draws(draws, cfg.alpha)
    return TestResult(
        statistic=statistic,
        scaled_statistic=scaled,
        bootstrap_draws=draws,
        critical_value=crit,
        p_value=p_value_from_draws(draws, scaled),
        reject=bool(scaled >= crit),
        h_used=smoothing.h,
        gamma_used=gamma_used,
    )


@dataclass(frozen=True)
class NullDiagnostics:
    """Sample moments of unscaled u-wild draws plus the exact variance.

    Conditional on M, Rademacher draws have mean 0 and variance
    (4 / (n(n-1))^2) sum_{i<j} M_ij^2.
    """

    mean: float
    variance: float
    closed_form_variance: float


def bootstrap_null_diagnostics(m: BootstrapMatrix, bootstrap_reps: int, seed: int) -> NullDiagnostics:
    """Monte Carlo moments of B u-wild draws against the closed form."""
    if bootstrap_reps < 2:
        raise ValueError("need at least two draws for a variance")
    emat = MultiplierStream(seed).matrix(bootstrap_reps, m.n)
    draws = wild_draws(m.values, emat, "u-wild")
    off = m.values[np.triu_indices(m.n, k=1)]
    closed = 4.0 * float(off @ off) / float(m.n * (m.n - 1)) ** 2
    return NullDiagnostics(
        mean=float(draws.mean()),
        variance=float(draws.var(ddof=1)),
        closed_form_variance=closed,
    )
