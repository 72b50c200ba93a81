"""Gradient-information acquisition and query-point search.

A candidate sample is scored by how much it shrinks the total variance of
the gradient belief at the incumbent.  Conditioning on one extra sample is
a rank-one update of the gram matrix, so the score has the closed form

    value = ||g0 - J K^-1 kc||^2 / (k(c,c) + noise - kc' K^-1 kc)

with J the gradient cross-covariance against the existing data, g0 the
gradient cross-covariance against the candidate, and kc the plain
cross-covariance vector.  The observed y never enters.
"""

from __future__ import annotations

import math

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.stats import qmc

from .errors import ConfigurationError
from .gp import Dataset, _cross_gradient, _gram, cholesky_with_jitter
from .kernels import REAL, DualKernelSpec, _check_source, se_cross, se_cross_grad1

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class QueryDomain:
    """Search region for the next query.

    The box is centered on the incumbent with half-width measured in units
    of the mean lengthscale; optional global bounds clip it.
    """

    center: np.ndarray
    half_width: float = 2.0
    bounds: tuple[np.ndarray, np.ndarray] | None = None

    def __post_init__(self):
        center = np.atleast_1d(np.asarray(self.center, dtype=float))
        object.__setattr__(self, "center", center)
        if not np.all(np.isfinite(center)):
            raise ValueError("domain center must be finite")
        if not (self.half_width > 0.0):
            raise ValueError(f"half_width must be positive, got {self.half_width}")
        if self.bounds is not None:
            try:
                low = np.broadcast_to(np.asarray(self.bounds[0], dtype=float), center.shape).copy()
                high = np.broadcast_to(np.asarray(self.bounds[1], dtype=float), center.shape).copy()
            except ValueError:
                raise ValueError("bounds must match the center dimension") from None
            if np.any(low > high):
                raise ValueError("lower bounds exceed upper bounds")
            object.__setattr__(self, "bounds", (low, high))


@dataclass(frozen=True)
class AcquisitionResult:
    theta: np.ndarray
    source: int
    value: float

    def __post_init__(self):
        object.__setattr__(self, "theta", np.atleast_1d(np.asarray(self.theta, dtype=float)))
        if self.value < -1e-9:
            raise ValueError(f"acquisition value must be nonnegative, got {self.value}")


def _mean_lengthscale(spec, source: int) -> float:
    if isinstance(spec, DualKernelSpec):
        if source == REAL:
            stacked = np.concatenate([spec.k_f.lengthscales, spec.k_m.lengthscales])
            return float(np.mean(stacked))
        return float(np.mean(spec.k_f.lengthscales))
    return float(np.mean(spec.lengthscales))


class _GiEvaluator:
    """Batched rank-one evaluation of the trace reduction.

    Factorizes the data gram matrix once; each candidate batch costs two
    triangular solves.
    """

    def __init__(self, data: Dataset, incumbent: np.ndarray, spec, source: int):
        self.spec = spec
        self.source = source
        self.incumbent = incumbent
        self.dual = isinstance(spec, DualKernelSpec)
        if self.dual:
            self.k_f, self.k_m = spec.k_f, spec.k_m
            self.kcc = spec.k_f.outputscale + (spec.k_m.outputscale if source == REAL else 0.0)
            self.noise = spec.noise_for(source)
        else:
            self.k_f, self.k_m = spec, None
            self.kcc = spec.outputscale
            self.noise = spec.noise_variance
        self.n = len(data)
        if self.n:
            self.X = data.thetas()
            self.flags = data.sources().astype(float)
            self.L, _ = cholesky_with_jitter(_gram(data, spec))
            J = _cross_gradient(data, incumbent, spec)
            self.V = solve_triangular(self.L, J.T, lower=True)

    def values(self, candidates: np.ndarray) -> np.ndarray:
        """Trace reductions for row-stacked candidate points."""
        C = np.atleast_2d(np.asarray(candidates, dtype=float))
        G0 = se_cross_grad1(self.incumbent, C, self.k_f)
        if self.dual and self.source == REAL:
            G0 = G0 + se_cross_grad1(self.incumbent, C, self.k_m)
        if self.n == 0:
            return np.sum(G0**2, axis=0) / (self.kcc + self.noise)
        Kc = se_cross(self.X, C, self.k_f)
        if self.dual and self.source == REAL:
            Kc = Kc + self.flags[:, None] * se_cross(self.X, C, self.k_m)
        W = solve_triangular(self.L, Kc, lower=True)
        s = self.kcc + self.noise - np.sum(W**2, axis=0)
        g = G0 - self.V.T @ W
        out = np.sum(g**2, axis=0)
        # A candidate the data already predicts perfectly carries nothing new.
        degenerate = s <= 1e-12 * (self.kcc + self.noise)
        safe = np.where(degenerate, 1.0, s)
        out = out / safe
        out[degenerate] = 0.0
        return out


def gi_value(data: Dataset, incumbent, theta, spec, source: int = REAL) -> float:
    """Expected reduction of the gradient-belief variance trace.

    Scores a hypothetical sample at (theta, source) against the current
    dataset; with a single-source kernel the flag is ignored.
    """
    _check_source(source)
    incumbent = np.atleast_1d(np.asarray(incumbent, dtype=float))
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    evaluator = _GiEvaluator(data, incumbent, spec, source)
    return float(evaluator.values(theta[None, :])[0])


def sim_to_real_gap(data: Dataset, incumbent, prev_sim_utility: float, next_sim_utility: float) -> float:
    """Signed change in acquisition utility between consecutive sim queries.

    The optimizer switches to the real source once this drops to the
    configured threshold; the dataset and incumbent identify the phase the
    utilities belong to.
    """
    return float(next_sim_utility) - float(prev_sim_utility)


def _search_box(domain: QueryDomain, lam_bar: float) -> tuple[np.ndarray, np.ndarray]:
    lo = domain.center - domain.half_width * lam_bar
    hi = domain.center + domain.half_width * lam_bar
    if domain.bounds is not None:
        lo = np.maximum(lo, domain.bounds[0])
        hi = np.minimum(hi, domain.bounds[1])
    if np.any(lo > hi):
        raise ConfigurationError("query search box does not intersect the global bounds")
    return lo, hi


def optimize_query(
    data: Dataset,
    incumbent,
    domain: QueryDomain,
    spec,
    rng: np.random.Generator,
    source: int = REAL,
    n_starts: int = 64,
    evals_per_start: int = 40,
) -> AcquisitionResult:
    """Multi-start search for the candidate with the largest trace reduction.

    Quasi-random starts seeded from rng plus axis-aligned probes one
    lengthscale from the center, each refined by coordinate-wise
    golden-section sweeps.  Deterministic for a given rng state.
    """
    _check_source(source)
    incumbent = np.atleast_1d(np.asarray(incumbent, dtype=float))
    d = incumbent.size
    lam_bar = _mean_lengthscale(spec, source)
    lo, hi = _search_box(domain, lam_bar)
    evaluator = _GiEvaluator(data, incumbent, spec, source)

    best_theta = np.clip(domain.center, lo, hi)
    best_value = -np.inf

    def probe(C: np.ndarray) -> np.ndarray:
        nonlocal best_theta, best_value
        vals = evaluator.values(C)
        i = int(np.argmax(vals))
        if vals[i] > best_value:
            best_value = float(vals[i])
            best_theta = C[i].copy()
        return vals

    sobol = qmc.Sobol(d, scramble=True, seed=int(rng.integers(2**31 - 1)))
    starts = lo + sobol.random(n_starts) * (hi - lo)
    axis = []
    for j in range(d):
        for sign in (1.0, -1.0):
            point = domain.center.copy()
            point[j] += sign * lam_bar
            axis.append(np.clip(point, lo, hi))
    X = np.vstack([starts, np.array(axis)])
    probe(X)

    n_sweeps = 2 if d <= 3 else 1
    iters = max(evals_per_start // (d * n_sweeps) - 2, 2)
    radius = 0.75 * lam_bar
    for sweep in range(n_sweeps):
        rho = radius * (0.4**sweep)
        for j in range(d):
            a = np.maximum(X[:, j] - rho, lo[j])
            b = np.minimum(X[:, j] + rho, hi[j])
            x1 = b - GOLDEN * (b - a)
            x2 = a + GOLDEN * (b - a)
            P = X.copy()
            P[:, j] = x1
            f1 = probe(P)
            P[:, j] = x2
            f2 = probe(P)
            for _ in range(iters):
                upper = f1 >= f2
                # Shrink toward the better interior point on each row.
                b = np.where(upper, x2, b)
                a = np.where(upper, a, x1)
                x2_new = np.where(upper, x1, a + GOLDEN * (b - a))
                x1_new = np.where(upper, b - GOLDEN * (b - a), x2)
                P = X.copy()
                P[:, j] = np.where(upper, x1_new, x2_new)
                fresh = probe(P)
                f1_new = np.where(upper, fresh, f2)
                f2_new = np.where(upper, f1, fresh)
                x1, x2, f1, f2 = x1_new, x2_new, f1_new, f2_new
            take_x1 = f1 >= f2
            X[:, j] = np.where(take_x1, x1, x2)

    value = gi_value(data, incumbent, best_theta, spec, source)
    return AcquisitionResult(theta=best_theta, source=source, value=value)
