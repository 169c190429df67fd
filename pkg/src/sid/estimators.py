"""Divergence estimators between a censored time and covariates.

The target quantity integrates, against the mean counting-process measure,
the squared distance between the kernel mean embedding of the covariates
among subjects failing at t and among subjects at risk at t. Estimators
plug in Nadaraya-Watson style smoothed processes built from

    w[i][r] = delta_i * W_h(Y_i - Y_r)   (smoothed failure weight)
    a[k][r] = I(Y_k >= Y_r)              (at-risk indicator, ties included)

Every estimator here accepts a dataset plus kernel, while *_from_gram
variants take a precomputed Gram matrix so callers (the bootstrap, the
Monte Carlo harness) can share it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .data import CensoredDataset
from .errors import InstanceTooLarge
from .kernels import (
    CovariateKernel,
    DistanceInducedKernel,
    SmoothingSpec,
    gram_matrix,
    smoothing_weight,
)

__all__ = [
    "SmoothedProcesses",
    "SidEstimate",
    "build_smoothed_processes",
    "v_statistic_from_gram",
    "u_statistic_from_gram",
    "sid_v_event_sum",
    "sid_v_quintuple",
    "sid_u_statistic",
    "sid_u_bruteforce",
    "sid_beta_v",
    "sid_beta_u",
    "projection_u_hat",
    "projection_v_hat",
    "symmetrized_kernel_check",
]

V_QUINTUPLE_MAX_N = 40
U_BRUTEFORCE_MAX_N = 12


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class SmoothedProcesses:
    """Smoothed failure weights and at-risk indicators on the time grid.

    w and a are full n x n matrices (column r evaluates at t = Y_r); events
    lists the uncensored indices in time order; s_hat and f_hat are the
    at-risk fraction and smoothed failure density at each event time.
    """

    y: np.ndarray
    delta: np.ndarray
    w: np.ndarray
    a: np.ndarray
    events: np.ndarray
    s_hat: np.ndarray
    f_hat: np.ndarray
    h: float

    def __post_init__(self):
        for name in ("y", "delta", "w", "a", "events", "s_hat", "f_hat"):
            object.__setattr__(self, name, _readonly(np.asarray(getattr(self, name))))

    @property
    def n(self) -> int:
        return self.y.shape[0]


@dataclass(frozen=True)
class SidEstimate:
    """A computed divergence value together with how it was obtained."""

    value: float
    kind: str
    divergence: str
    h: float


def build_smoothed_processes(ds: CensoredDataset, spec: SmoothingSpec) -> SmoothedProcesses:
    """O(n^2) construction of the w/a matrices and per-event summaries."""
    y = ds.y
    delta = ds.delta.astype(np.float64)
    w = delta[:, None] * smoothing_weight(y[:, None] - y[None, :], spec)
    a = (y[:, None] >= y[None, :]).astype(np.float64)
    ev = np.flatnonzero(ds.delta == 1)
    ev = ev[np.argsort(y[ev], kind="stable")]
    s_hat = a[:, ev].mean(axis=0)
    f_hat = w[:, ev].mean(axis=0)
    return SmoothedProcesses(
        y=y.copy(), delta=ds.delta.copy(), w=w, a=a, events=ev, s_hat=s_hat, f_hat=f_hat, h=spec.h
    )


def _anchored(k: np.ndarray) -> np.ndarray:
    # Every estimator below is invariant to K -> K + c (the per-event
    # contrast vector has zero sum; distinct-tuple sums kill constants by
    # antisymmetry), so anchoring at K[0, 0] is free. It also makes a
    # constant-covariate Gram matrix exactly zero, which turns the
    # degenerate null into bit-exact zeros instead of rounding dust.
    return k - k[0, 0]


def _describe(kernel: CovariateKernel) -> str:
    return repr(kernel)


def v_statistic_from_gram(k: np.ndarray, sp: SmoothedProcesses) -> float:
    """Event-sum V-statistic from a precomputed Gram matrix, O(n^3).

    Per event time, the quintuple sum factorizes into three quadratic
    forms: (sum a)^2 w'Kw - 2 (sum w)(sum a) w'Ka + (sum w)^2 a'Ka.
    """
    n = sp.n
    kc = _anchored(k)
    wm = sp.w[:, sp.events]
    am = sp.a[:, sp.events]
    kw = kc @ wm
    ka = kc @ am
    sw = wm.sum(axis=0)
    sa = am.sum(axis=0)
    s1 = np.einsum("ir,ir->r", wm, kw)
    s2 = np.einsum("ir,ir->r", wm, ka)
    s3 = np.einsum("ir,ir->r", am, ka)
    brackets = sa * sa * s1 - 2.0 * (sw * sa) * s2 + sw * sw * s3
    return float(brackets.sum() / float(n) ** 5)


def sid_v_event_sum(ds: CensoredDataset, kernel: CovariateKernel, spec: SmoothingSpec) -> SidEstimate:
    """V-statistic estimate of the kernel divergence (event-sum form)."""
    sp = build_smoothed_processes(ds, spec)
    value = v_statistic_from_gram(gram_matrix(ds.x, kernel), sp)
    return SidEstimate(value, "v-event-sum", _describe(kernel), spec.h)


def sid_v_quintuple(ds: CensoredDataset, kernel: CovariateKernel, spec: SmoothingSpec) -> SidEstimate:
    """Reference V-statistic: the literal five-fold sum at O(n^5) cost.

    Kept as an independent cross-check of the factorized event-sum form;
    refuses n > 40.
    """
    n = ds.n
    if n > V_QUINTUPLE_MAX_N:
        raise InstanceTooLarge(f"quintuple V-statistic is O(n^5); n={n} exceeds {V_QUINTUPLE_MAX_N}")
    k = gram_matrix(ds.x, kernel)
    y = ds.y
    delta = ds.delta.astype(np.float64)
    total = 0.0
    for r in range(n):
        if ds.delta[r] == 0:
            continue
        # b[i, k] = delta_i W_h(Y_i - Y_r) I(Y_k >= Y_r), straight from the
        # definition; every (i, j, k, l) summand is materialized.
        b = (delta * smoothing_weight(y - y[r], spec))[:, None] * (y >= y[r])[None, :]
        d = b - b.T
        total += float(
            (d[:, None, :, None] * k[:, :, None, None] * d[None, :, None, :]).sum()
        )
    return SidEstimate(total / float(n) ** 5, "v-quintuple", _describe(kernel), spec.h)


def _distinct_quad_sum(k: np.ndarray, alpha, beta, gamma, lam) -> float:
    """Sum of K_ij a_i b_j g_k l_l over pairwise-distinct (i, j, k, l)."""
    g = k * np.outer(alpha, beta)
    np.fill_diagonal(g, 0.0)
    tg = gamma.sum()
    tl = lam.sum()
    tp = gamma @ lam
    gi = gamma[:, None]
    gj = gamma[None, :]
    li = lam[:, None]
    lj = lam[None, :]
    # sum over k != l with both outside {i, j}: subtract the i/j slices from
    # the full outer product, then remove the k == l diagonal the same way.
    inner = (tg - gi - gj) * (tl - li - lj) - (tp - gi * li - gj * lj)
    return float((g * inner).sum())


def u_statistic_from_gram(k: np.ndarray, sp: SmoothedProcesses) -> float:
    """U-statistic over pairwise-distinct quintuples in O(n^3).

    Expanding (w_i a_k - w_k a_i) K_ij (w_j a_l - w_l a_j) gives four
    rank-one patterns; each reduces to an O(n^2) inclusion-exclusion sum
    per event time. Index r is excluded by zeroing the r-entries of both
    vectors (that alone kills every tuple containing r).
    """
    n = sp.n
    kc = _anchored(k)
    total = 0.0
    for r in sp.events:
        wt = sp.w[:, r].copy()
        at = sp.a[:, r].copy()
        wt[r] = 0.0
        at[r] = 0.0
        total += (
            _distinct_quad_sum(kc, wt, wt, at, at)
            - _distinct_quad_sum(kc, wt, at, at, wt)
            - _distinct_quad_sum(kc, at, wt, wt, at)
            + _distinct_quad_sum(kc, at, at, wt, wt)
        )
    n5 = n * (n - 1) * (n - 2) * (n - 3) * (n - 4)
    return total / float(n5)


def sid_u_statistic(ds: CensoredDataset, kernel: CovariateKernel, spec: SmoothingSpec) -> SidEstimate:
    """U-statistic estimate of the kernel divergence."""
    sp = build_smoothed_processes(ds, spec)
    value = u_statistic_from_gram(gram_matrix(ds.x, kernel), sp)
    return SidEstimate(value, "u-statistic", _describe(kernel), spec.h)


def sid_u_bruteforce(ds: CensoredDataset, kernel: CovariateKernel, spec: SmoothingSpec) -> SidEstimate:
    """Reference U-statistic: explicit sum over distinct quintuples.

    (n)_5 terms evaluated directly from the b function; refuses n > 12
    ((12)_5 is already 95040 tuples).
    """
    n = ds.n
    if n > U_BRUTEFORCE_MAX_N:
        raise InstanceTooLarge(f"brute-force U-statistic; n={n} exceeds {U_BRUTEFORCE_MAX_N}")
    k = gram_matrix(ds.x, kernel)
    y = ds.y
    delta = ds.delta.astype(np.float64)
    # b[i, k, r] = delta_i W_h(Y_i - Y_r) I(Y_k >= Y_r)
    b = (delta[:, None] * smoothing_weight(y[:, None] - y[None, :], spec))[:, None, :] * (
        (y[:, None] >= y[None, :]).astype(np.float64)[None, :, :]
    )
    idx = np.array(list(itertools.permutations(range(n), 5)))
    i, j, kk, ll, r = idx.T
    terms = (b[i, kk, r] - b[kk, i, r]) * k[i, j] * (b[j, ll, r] - b[ll, j, r]) * delta[r]
    n5 = n * (n - 1) * (n - 2) * (n - 3) * (n - 4)
    return SidEstimate(float(terms.sum()) / n5, "u-bruteforce", _describe(kernel), spec.h)


def sid_beta_v(ds: CensoredDataset, beta: float, spec: SmoothingSpec) -> SidEstimate:
    """Characteristic-function-weight divergence, V form.

    Defined as twice the distance-induced-kernel estimator; equal to the
    direct semimetric event sum with signs (-, +2, -).
    """
    base = sid_v_event_sum(ds, DistanceInducedKernel(beta), spec)
    return SidEstimate(2.0 * base.value, base.kind, f"beta({beta})", spec.h)


def sid_beta_u(ds: CensoredDataset, beta: float, spec: SmoothingSpec) -> SidEstimate:
    """Characteristic-function-weight divergence, U form (2x kernel U)."""
    base = sid_u_statistic(ds, DistanceInducedKernel(beta), spec)
    return SidEstimate(2.0 * base.value, base.kind, f"beta({beta})", spec.h)


def projection_u_hat(k: np.ndarray, sp: SmoothedProcesses, i: int, j: int, r: int) -> float:
    """Doubly centered kernel over the at-risk set at t = Y_r.

    K_ij minus both at-risk row means plus the at-risk grand mean; adding a
    constant to K leaves the value unchanged.
    """
    risk = sp.a[:, r] > 0.5
    row_i = float(k[i, risk].mean())
    row_j = float(k[j, risk].mean())
    grand = float(k[np.ix_(risk, risk)].mean())
    return float(k[i, j]) - row_i - row_j + grand


def projection_v_hat(sp: SmoothedProcesses, i: int, j: int, r: int) -> float:
    """Product of centered failure-vs-at-risk contrasts at t = Y_r:

    [w_i(r) S_hat(r) - a_i(r) F_hat(r)] * [same for j].
    """
    s = float(sp.a[:, r].mean())
    f = float(sp.w[:, r].mean())
    ci = float(sp.w[i, r]) * s - float(sp.a[i, r]) * f
    cj = float(sp.w[j, r]) * s - float(sp.a[j, r]) * f
    return ci * cj


def symmetrized_kernel_check(y4, delta4, t: float, spec: SmoothingSpec, k4: np.ndarray) -> tuple[float, float]:
    """Evaluate the symmetrized quadruple kernel both ways at time t.

    Returns (average over all 24 argument orders of the raw quadruple form,
    closed three-term form with prefactor 1/12); the two agree up to
    roundoff, which is what tests assert.
    """
    y4 = np.asarray(y4, dtype=np.float64)
    d4 = np.asarray(delta4, dtype=np.float64)
    b = (d4 * smoothing_weight(y4 - t, spec))[:, None] * (y4 >= t)[None, :]

    def raw(i, j, kk, ll):
        return (b[i, kk] - b[kk, i]) * k4[i, j] * (b[j, ll] - b[ll, j])

    avg = sum(raw(*perm) for perm in itertools.permutations(range(4))) / 24.0

    i, j, kk, ll = 0, 1, 2, 3
    term1 = (k4[i, j] - k4[i, ll] - k4[j, kk] + k4[kk, ll]) * (b[i, kk] - b[kk, i]) * (b[j, ll] - b[ll, j])
    term2 = (k4[i, j] - k4[j, ll] - k4[i, kk] + k4[kk, ll]) * (b[i, ll] - b[ll, i]) * (b[j, kk] - b[kk, j])
    term3 = (k4[i, kk] - k4[i, ll] - k4[j, kk] + k4[j, ll]) * (b[i, j] - b[j, i]) * (b[kk, ll] - b[ll, kk])
    closed = (term1 + term2 + term3) / 12.0
    return float(avg), float(closed)
