"""Squared-exponential kernels, their derivatives, and the two-source composite.

All functions accept plain numpy arrays. The derivative conventions:
``grad1`` differentiates in the first argument, ``hess12`` is the mixed
second derivative (first argument then second). For two information
sources the composite covariance is ``K_f + s1*s2*K_m`` where the source
flags are 0 for the simulator and 1 for the real system, so the gap
kernel K_m only contributes between two real-system points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SIM = 0
REAL = 1

_VALID_SOURCES = (SIM, REAL)


@dataclass(frozen=True)
class KernelSpec:
    """Squared-exponential kernel hyperparameters.

    outputscale is the signal variance (kernel value at zero lag),
    lengthscales one positive entry per input dimension, and
    noise_variance the observation noise attached to samples drawn
    under this kernel.
    """

    outputscale: float
    lengthscales: np.ndarray
    noise_variance: float = 0.0

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        object.__setattr__(self, "lengthscales", ls)
        if not self.outputscale > 0:
            raise ValueError(f"outputscale must be positive, got {self.outputscale}")
        if ls.ndim != 1 or ls.size == 0 or not np.all(ls > 0):
            raise ValueError("lengthscales must be a 1-D array of positive reals")
        if self.noise_variance < 0:
            raise ValueError(f"noise_variance must be nonnegative, got {self.noise_variance}")

    @property
    def dimension(self) -> int:
        return self.lengthscales.size


@dataclass(frozen=True)
class DualKernelSpec:
    """Composite kernel over (theta, source) pairs.

    k_f covers what both sources share, k_m the extra variability seen
    only on the real system. Observation noise is carried per source:
    real samples use k_f.noise_variance, simulator samples use
    sim_noise_variance when given and k_f.noise_variance otherwise
    (k_m.noise_variance is never consulted).
    """

    k_f: KernelSpec
    k_m: KernelSpec
    sim_noise_variance: float | None = None

    def __post_init__(self):
        if self.k_f.dimension != self.k_m.dimension:
            raise ValueError(
                f"k_f and k_m disagree on dimension: {self.k_f.dimension} vs {self.k_m.dimension}"
            )
        if self.sim_noise_variance is not None and self.sim_noise_variance < 0:
            raise ValueError("sim_noise_variance must be nonnegative")

    @property
    def dimension(self) -> int:
        return self.k_f.dimension

    def noise_for(self, source: int) -> float:
        _check_source(source)
        if source == SIM and self.sim_noise_variance is not None:
            return self.sim_noise_variance
        return self.k_f.noise_variance


def _check_source(source):
    if source not in _VALID_SOURCES:
        raise ValueError(f"information source flag must be 0 (sim) or 1 (real), got {source!r}")


def _as_point(x, spec) -> np.ndarray:
    a = np.atleast_1d(np.asarray(x, dtype=float))
    if a.shape != (spec.dimension,):
        raise ValueError(f"expected point of dimension {spec.dimension}, got shape {a.shape}")
    return a


def se_kernel(a, b, spec: KernelSpec) -> float:
    a = _as_point(a, spec)
    b = _as_point(b, spec)
    z = (a - b) / spec.lengthscales
    return float(spec.outputscale * np.exp(-0.5 * z @ z))


def se_kernel_grad1(a, b, spec: KernelSpec) -> np.ndarray:
    """d k(a, b) / d a."""
    a = _as_point(a, spec)
    b = _as_point(b, spec)
    inv_sq = 1.0 / spec.lengthscales**2
    return -(a - b) * inv_sq * se_kernel(a, b, spec)


def se_kernel_hess12(a, b, spec: KernelSpec) -> np.ndarray:
    """d^2 k(a, b) / d a d b, a d-by-d matrix."""
    a = _as_point(a, spec)
    b = _as_point(b, spec)
    inv_sq = 1.0 / spec.lengthscales**2
    w = (a - b) * inv_sq
    return (np.diag(inv_sq) - np.outer(w, w)) * se_kernel(a, b, spec)


def dual_kernel(theta1, source1, theta2, source2, spec: DualKernelSpec) -> float:
    _check_source(source1)
    _check_source(source2)
    v = se_kernel(theta1, theta2, spec.k_f)
    if source1 == REAL and source2 == REAL:
        v += se_kernel(theta1, theta2, spec.k_m)
    return v


def dual_kernel_grad1(theta1, source1, theta2, source2, spec: DualKernelSpec) -> np.ndarray:
    _check_source(source1)
    _check_source(source2)
    g = se_kernel_grad1(theta1, theta2, spec.k_f)
    if source1 == REAL and source2 == REAL:
        g = g + se_kernel_grad1(theta1, theta2, spec.k_m)
    return g


def dual_kernel_hess12(theta1, source1, theta2, source2, spec: DualKernelSpec) -> np.ndarray:
    _check_source(source1)
    _check_source(source2)
    h = se_kernel_hess12(theta1, theta2, spec.k_f)
    if source1 == REAL and source2 == REAL:
        h = h + se_kernel_hess12(theta1, theta2, spec.k_m)
    return h


# ---------------------------------------------------------------------------
# Vectorized helpers used by the posterior and acquisition code. These are
# exact batched equivalents of the scalar functions above; the scalar forms
# stay the reference implementation in tests.

def se_cross(A: np.ndarray, B: np.ndarray, spec: KernelSpec) -> np.ndarray:
    """Kernel matrix k(A[i], B[j]) for row-stacked points, shape (nA, nB)."""
    As = A / spec.lengthscales
    Bs = B / spec.lengthscales
    sq = np.sum(As**2, axis=1)[:, None] + np.sum(Bs**2, axis=1)[None, :] - 2.0 * As @ Bs.T
    np.maximum(sq, 0.0, out=sq)
    return spec.outputscale * np.exp(-0.5 * sq)


def se_cross_grad1(x: np.ndarray, B: np.ndarray, spec: KernelSpec) -> np.ndarray:
    """Stacked gradients d k(x, B[j]) / d x, shape (d, nB)."""
    k = se_cross(x[None, :], B, spec)[0]
    diff = (x[None, :] - B) / spec.lengthscales**2
    return -(diff * k[:, None]).T
