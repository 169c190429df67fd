"""Covariate kernels, semimetrics, and time-smoothing weights.

Three covariate kernels are supported: Gaussian exp(-d^2/gamma^2), Laplacian
exp(-d/gamma), and the distance-induced kernel
K(x, x') = (|x|^beta + |x'|^beta - |x - x'|^beta) / 2 for 0 < beta < 2.
The matching semimetric is rho(x, x') = K(x, x) + K(x', x') - 2 K(x, x').
Time smoothing uses W_h(u) = W(u / h) / h with a Gaussian-density or
Epanechnikov W.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateCovariates,
    DegenerateTimes,
    DimensionMismatch,
)

__all__ = [
    "CovariateKernel",
    "GaussianKernel",
    "LaplacianKernel",
    "DistanceInducedKernel",
    "NormPowerSemimetric",
    "SmoothingSpec",
    "kernel_value",
    "semimetric_value",
    "gram_matrix",
    "semimetric_matrix",
    "kernel_semimetric_consistency",
    "median_heuristic",
    "silverman_bandwidth",
    "smoothing_weight",
    "resolve_smoothing",
]


def _check_scale(gamma: float | None) -> None:
    if gamma is not None and not (math.isfinite(gamma) and gamma > 0.0):
        raise ValueError(f"kernel scale must be finite and positive, got {gamma}")


@dataclass(frozen=True)
class CovariateKernel:
    """Base type for covariate kernels; use one of the concrete subclasses."""


@dataclass(frozen=True)
class GaussianKernel(CovariateKernel):
    """K(x1, x2) = exp(-||x1 - x2||^2 / gamma^2).

    ``gamma=None`` means "resolve with the median heuristic at test time";
    gram_matrix refuses to run until the scale is concrete.
    """

    gamma: float | None = None

    def __post_init__(self):
        _check_scale(self.gamma)

    def with_gamma(self, gamma: float) -> "GaussianKernel":
        return dataclasses.replace(self, gamma=gamma)


@dataclass(frozen=True)
class LaplacianKernel(CovariateKernel):
    """K(x1, x2) = exp(-||x1 - x2|| / gamma)."""

    gamma: float | None = None

    def __post_init__(self):
        _check_scale(self.gamma)

    def with_gamma(self, gamma: float) -> "LaplacianKernel":
        return dataclasses.replace(self, gamma=gamma)


@dataclass(frozen=True)
class DistanceInducedKernel(CovariateKernel):
    """K(x1, x2) = (||x1||^beta + ||x2||^beta - ||x1 - x2||^beta) / 2.

    Generates the norm-power semimetric rho(x1, x2) = ||x1 - x2||^beta;
    beta must lie strictly inside (0, 2).
    """

    beta: float

    def __post_init__(self):
        if not (math.isfinite(self.beta) and 0.0 < self.beta < 2.0):
            raise ValueError(f"beta must lie in (0, 2), got {self.beta}")


@dataclass(frozen=True)
class NormPowerSemimetric:
    """rho(x1, x2) = ||x1 - x2||^beta with 0 < beta < 2."""

    beta: float

    def __post_init__(self):
        if not (math.isfinite(self.beta) and 0.0 < self.beta < 2.0):
            raise ValueError(f"beta must lie in (0, 2), got {self.beta}")


@dataclass(frozen=True)
class SmoothingSpec:
    """Time-smoothing configuration: W_h(u) = W(u / h) / h.

    kernel is "gaussian" (standard normal density) or "epanechnikov"
    (0.75 (1 - u^2) on [-1, 1]).
    """

    h: float
    kernel: str = "gaussian"

    def __post_init__(self):
        if not (math.isfinite(self.h) and self.h > 0.0):
            raise ValueError(f"bandwidth must be finite and positive, got {self.h}")
        if self.kernel not in ("gaussian", "epanechnikov"):
            raise ValueError(f"unknown smoothing kernel {self.kernel!r}")


def _as_vector(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatch(f"expected a 1-d covariate vector, got shape {arr.shape}")
    return arr


def kernel_value(kernel: CovariateKernel, x1, x2) -> float:
    """Evaluate a kernel on a single pair of covariate vectors."""
    a, b = _as_vector(x1), _as_vector(x2)
    if a.shape != b.shape:
        raise DimensionMismatch(f"covariate lengths differ: {a.shape[0]} vs {b.shape[0]}")
    if isinstance(kernel, GaussianKernel):
        if kernel.gamma is None:
            raise ValueError("Gaussian kernel scale is unresolved; set gamma first")
        return float(np.exp(-np.sum((a - b) ** 2) / kernel.gamma**2))
    if isinstance(kernel, LaplacianKernel):
        if kernel.gamma is None:
            raise ValueError("Laplacian kernel scale is unresolved; set gamma first")
        return float(np.exp(-np.sqrt(np.sum((a - b) ** 2)) / kernel.gamma))
    if isinstance(kernel, DistanceInducedKernel):
        beta = kernel.beta
        na = np.sqrt(np.sum(a**2)) ** beta
        nb = np.sqrt(np.sum(b**2)) ** beta
        nd = np.sqrt(np.sum((a - b) ** 2)) ** beta
        return float(0.5 * (na + nb - nd))
    raise TypeError(f"unsupported kernel {kernel!r}")


def semimetric_value(rho: NormPowerSemimetric, x1, x2) -> float:
    """Evaluate a norm-power semimetric on a single pair."""
    a, b = _as_vector(x1), _as_vector(x2)
    if a.shape != b.shape:
        raise DimensionMismatch(f"covariate lengths differ: {a.shape[0]} vs {b.shape[0]}")
    return float(np.sqrt(np.sum((a - b) ** 2)) ** rho.beta)


def _as_matrix(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise DimensionMismatch(f"expected an (n, p) covariate array, got shape {arr.shape}")
    return arr


def _pairwise_sq_dists(x: np.ndarray) -> np.ndarray:
    # Differences first, then squares: the result is symmetric to exact
    # equality and has an exactly zero diagonal, unlike the expanded
    # x.x + y.y - 2 x.y form.
    diff = x[:, None, :] - x[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def gram_matrix(x, kernel: CovariateKernel) -> np.ndarray:
    """Kernel Gram matrix of an (n, p) covariate array.

    The result is exactly symmetric. Gaussian and Laplacian kernels have a
    unit diagonal; the distance-induced kernel's diagonal is ||X_i||^beta.
    """
    xm = _as_matrix(x)
    sq = _pairwise_sq_dists(xm)
    if isinstance(kernel, GaussianKernel):
        if kernel.gamma is None:
            raise ValueError("Gaussian kernel scale is unresolved; set gamma first")
        return np.exp(-sq / kernel.gamma**2)
    if isinstance(kernel, LaplacianKernel):
        if kernel.gamma is None:
            raise ValueError("Laplacian kernel scale is unresolved; set gamma first")
        return np.exp(-np.sqrt(sq) / kernel.gamma)
    if isinstance(kernel, DistanceInducedKernel):
        beta = kernel.beta
        norms = np.sqrt(np.einsum("ij,ij->i", xm, xm)) ** beta
        # nb_i + nb_j is commutative, sq is symmetric, so the sum stays
        # exactly symmetric; the diagonal is (nb_i + nb_i - 0) / 2 = nb_i.
        return 0.5 * (norms[:, None] + norms[None, :] - np.sqrt(sq) ** beta)
    raise TypeError(f"unsupported kernel {kernel!r}")


def semimetric_matrix(x, rho: NormPowerSemimetric) -> np.ndarray:
    """Pairwise semimetric matrix rho_ij = ||X_i - X_j||^beta."""
    xm = _as_matrix(x)
    return np.sqrt(_pairwise_sq_dists(xm)) ** rho.beta


def kernel_semimetric_consistency(kernel: CovariateKernel, rho: NormPowerSemimetric, x, tol: float = 1e-12) -> bool:
    """Check rho_ij == K_ii + K_jj - 2 K_ij on a sample, to relative tol."""
    k = gram_matrix(x, kernel)
    r = semimetric_matrix(x, rho)
    d = np.diag(k)
    induced = d[:, None] + d[None, :] - 2.0 * k
    scale = max(1.0, float(np.max(np.abs(r))))
    return bool(np.max(np.abs(r - induced)) <= tol * scale)


def median_heuristic(x) -> float:
    """Median-distance bandwidth (median{||X_i - X_j||^2 : i != j} / 2)^(1/2).

    The median is over the n(n-1)/2 unordered pairs; an even pair count
    averages the two middle values (np.median's convention).
    """
    xm = _as_matrix(x)
    n = xm.shape[0]
    if n < 2:
        raise ValueError(f"median heuristic needs at least two observations, got {n}")
    iu, ju = np.triu_indices(n, k=1)
    sq = _pairwise_sq_dists(xm)[iu, ju]
    med = float(np.median(sq))
    if med <= 0.0:
        raise DegenerateCovariates("median pairwise distance is zero")
    return math.sqrt(med / 2.0)


def silverman_bandwidth(y) -> float:
    """Bandwidth (4/3)^(-1/5) * sd(y) * n^(-1/5), sd with ddof=1."""
    arr = np.asarray(y, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 2:
        raise ValueError("bandwidth needs a 1-d sample of at least two times")
    sd = float(np.std(arr, ddof=1))
    # identical values can still leave rounding dust in sd, so test equality
    if sd <= 0.0 or bool(np.all(arr == arr[0])):
        raise DegenerateTimes("observed times have zero standard deviation")
    n = arr.size
    return (4.0 / 3.0) ** (-0.2) * sd * float(n) ** (-0.2)


_GAUSS_NORM = 1.0 / math.sqrt(2.0 * math.pi)


def smoothing_weight(u, spec: SmoothingSpec):
    """Evaluate W_h(u) = W(u / h) / h elementwise; scalars stay scalar."""
    z = np.asarray(u, dtype=np.float64) / spec.h
    if spec.kernel == "gaussian":
        w = _GAUSS_NORM * np.exp(-0.5 * z * z)
    else:
        w = 0.75 * (1.0 - z * z) * (np.abs(z) <= 1.0)
    w = w / spec.h
    return float(w) if np.isscalar(u) or np.ndim(u) == 0 else w


def resolve_smoothing(y, smoothing: SmoothingSpec | str | None) -> SmoothingSpec:
    """Turn "auto"/None into a concrete SmoothingSpec via silverman_bandwidth."""
    if isinstance(smoothing, SmoothingSpec):
        return smoothing
    if smoothing is None or smoothing == "auto":
        return SmoothingSpec(h=silverman_bandwidth(y))
    raise ValueError(f"unknown smoothing spec {smoothing!r}")
