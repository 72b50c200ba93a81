"""Exact Gaussian-process posteriors for function values and gradients.

The model has zero prior mean. Observations are noisy function values,
optionally labeled with an information source; the quantity of interest
is the posterior over the objective's gradient at the incumbent, which
is available in closed form because differentiation is linear.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import NumericalError
from .kernels import (
    REAL,
    SIM,
    DualKernelSpec,
    KernelSpec,
    se_cross,
    se_cross_grad1,
    _check_source,
)


@dataclass(frozen=True)
class LabeledSample:
    """One evaluation: parameters, noisy observation, information source."""

    theta: np.ndarray
    y: float
    source: int = REAL

    def __post_init__(self):
        t = np.atleast_1d(np.asarray(self.theta, dtype=float))
        object.__setattr__(self, "theta", t)
        if not np.all(np.isfinite(t)):
            raise ValueError("sample parameters must be finite")
        if not np.isfinite(self.y):
            raise ValueError("sample observation must be finite")
        _check_source(self.source)


class Dataset:
    """Ordered collection of samples sharing one parameter dimension."""

    def __init__(self, dimension: int):
        if dimension < 1:
            raise ValueError("dimension must be a positive integer")
        self.dimension = int(dimension)
        self.samples: list[LabeledSample] = []

    def append(self, sample: LabeledSample) -> None:
        if sample.theta.size != self.dimension:
            raise ValueError(
                f"sample dimension {sample.theta.size} does not match dataset dimension {self.dimension}"
            )
        self.samples.append(sample)

    def __len__(self) -> int:
        return len(self.samples)

    def thetas(self) -> np.ndarray:
        if not self.samples:
            return np.empty((0, self.dimension))
        return np.stack([s.theta for s in self.samples])

    def ys(self) -> np.ndarray:
        return np.array([s.y for s in self.samples], dtype=float)

    def sources(self) -> np.ndarray:
        return np.array([s.source for s in self.samples], dtype=int)

    def subset(self, mask) -> "Dataset":
        out = Dataset(self.dimension)
        out.samples = [s for s, keep in zip(self.samples, mask) if keep]
        return out


@dataclass(frozen=True)
class GradientBelief:
    """Gaussian belief over the objective gradient at the incumbent."""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        m = np.atleast_1d(np.asarray(self.mean, dtype=float))
        c = np.asarray(self.covariance, dtype=float)
        object.__setattr__(self, "mean", m)
        object.__setattr__(self, "covariance", c)
        if c.shape != (m.size, m.size):
            raise ValueError(f"covariance shape {c.shape} does not match mean length {m.size}")


JITTER_LADDER = (0.0, 1e-10, 1e-8, 1e-6)


def cholesky_with_jitter(K: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of K, escalating diagonal jitter on failure.

    Jitter magnitudes are the ladder entries scaled by the mean diagonal
    of K. Returns (factor, jitter_used); raises NumericalError with the
    attempted magnitudes once the ladder is exhausted.
    """
    scale = float(np.mean(np.diag(K))) if K.size else 1.0
    if not np.isfinite(scale) or scale <= 0:
        scale = 1.0
    attempted = []
    for level in JITTER_LADDER:
        jitter = level * scale
        attempted.append(jitter)
        try:
            L = np.linalg.cholesky(K + jitter * np.eye(K.shape[0]))
            return L, jitter
        except np.linalg.LinAlgError:
            continue
    raise NumericalError(
        f"gram matrix not factorizable after jitter ladder {attempted}",
        attempted_jitters=attempted,
    )


def _noise_vector(data: Dataset, spec) -> np.ndarray:
    if isinstance(spec, DualKernelSpec):
        return np.array([spec.noise_for(s.source) for s in data.samples])
    return np.full(len(data), spec.noise_variance)


def _gram(data: Dataset, spec) -> np.ndarray:
    X = data.thetas()
    if isinstance(spec, DualKernelSpec):
        K = se_cross(X, X, spec.k_f)
        flags = data.sources().astype(float)
        both_real = np.outer(flags, flags)
        K = K + both_real * se_cross(X, X, spec.k_m)
    else:
        K = se_cross(X, X, spec)
    return K + np.diag(_noise_vector(data, spec))


def _cross_vector(data: Dataset, theta: np.ndarray, source: int, spec) -> np.ndarray:
    """Covariances between the data and a query at (theta, source)."""
    X = data.thetas()
    if isinstance(spec, DualKernelSpec):
        k = se_cross(X, theta[None, :], spec.k_f)[:, 0]
        if source == REAL:
            flags = data.sources().astype(float)
            k = k + flags * se_cross(X, theta[None, :], spec.k_m)[:, 0]
        return k
    return se_cross(X, theta[None, :], spec)[:, 0]


def _cross_gradient(data: Dataset, incumbent: np.ndarray, spec) -> np.ndarray:
    """d-by-n stack of gradient cross covariances at the incumbent.

    For the two-source model the belief lives at (incumbent, real), so
    the gap kernel contributes only against real-source samples.
    """
    X = data.thetas()
    if isinstance(spec, DualKernelSpec):
        J = se_cross_grad1(incumbent, X, spec.k_f)
        flags = data.sources().astype(float)
        if np.any(flags):
            J = J + flags[None, :] * se_cross_grad1(incumbent, X, spec.k_m)
        return J
    return se_cross_grad1(incumbent, X, spec)


def _prior_marginal(theta: np.ndarray, source: int, spec) -> float:
    if isinstance(spec, DualKernelSpec):
        v = spec.k_f.outputscale
        if source == REAL:
            v += spec.k_m.outputscale
        return float(v)
    return float(spec.outputscale)


def _prior_gradient_cov(spec) -> np.ndarray:
    if isinstance(spec, DualKernelSpec):
        return np.diag(spec.k_f.outputscale / spec.k_f.lengthscales**2) + np.diag(
            spec.k_m.outputscale / spec.k_m.lengthscales**2
        )
    return np.diag(spec.outputscale / spec.lengthscales**2)


def _as_incumbent(theta, spec) -> np.ndarray:
    t = np.atleast_1d(np.asarray(theta, dtype=float))
    if t.size != spec.dimension:
        raise ValueError(f"expected point of dimension {spec.dimension}, got {t.size}")
    return t


def posterior_zeroth(data: Dataset, theta, spec, source: int = REAL) -> tuple[float, float]:
    """Posterior mean and variance of the objective at (theta, source).

    With a single-source kernel the source flag is ignored.
    """
    theta = _as_incumbent(theta, spec)
    _check_source(source)
    prior = _prior_marginal(theta, source, spec)
    if len(data) == 0:
        return 0.0, prior
    K = _gram(data, spec)
    L, _ = cholesky_with_jitter(K)
    k = _cross_vector(data, theta, source, spec)
    alpha = solve_triangular(L, data.ys(), lower=True)
    beta = solve_triangular(L, k, lower=True)
    mean = float(beta @ alpha)
    var = prior - float(beta @ beta)
    return mean, max(var, 0.0)


def posterior_gradient(data: Dataset, incumbent, spec) -> GradientBelief:
    """Gaussian posterior over the gradient at the incumbent.

    For the two-source model the belief is always taken at the real
    source. Empty data returns the prior belief.
    """
    incumbent = _as_incumbent(incumbent, spec)
    H = _prior_gradient_cov(spec)
    if len(data) == 0:
        return GradientBelief(np.zeros(incumbent.size), H)
    K = _gram(data, spec)
    L, _ = cholesky_with_jitter(K)
    J = _cross_gradient(data, incumbent, spec)
    U = solve_triangular(L, J.T, lower=True)
    alpha = solve_triangular(L, data.ys(), lower=True)
    mean = U.T @ alpha
    cov = H - U.T @ U
    cov = 0.5 * (cov + cov.T)
    return GradientBelief(mean, cov)
