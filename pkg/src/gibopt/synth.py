"""Synthetic benchmark objectives.

Ground-truth functions are drawn from the same Gaussian-process family
the optimizer models, so benchmark runs sit exactly inside the model
class ("within-model"). Each objective carries a biased simulator
counterpart built by adding an independent low-amplitude draw, plus an
analytic gradient used by test oracles. A rescaled accuracy metric maps
objective values onto [0, 1] against a quasi-random reference grid.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import qmc

from .errors import ConfigurationError, NumericalError
from .kernels import DualKernelSpec, KernelSpec, se_cross, se_cross_grad1

MAX_SOBOL_DIMENSION = 52

# Relative eigenvalue cutoff for the anchor Gram factorization. Keeps the
# interpolation residual a couple of orders below the 1e-8 contract while
# discarding only numerically void directions.
_EIG_CUTOFF = 1e-10


def sobol_points(n: int, d: int, seed: int | None = None) -> np.ndarray:
    """n quasi-random points in [0, 1)^d; a seed applies a digital scramble.

    The unscrambled sequence starts at the origin, so the first point of
    any dimension is the zero vector.
    """
    if not 1 <= d <= MAX_SOBOL_DIMENSION:
        raise ConfigurationError(
            f"sobol dimension must be between 1 and {MAX_SOBOL_DIMENSION}, got {d}"
        )
    if n < 1:
        raise ConfigurationError(f"sample count must be positive, got {n}")
    sampler = qmc.Sobol(d=d, scramble=seed is not None, seed=seed)
    with warnings.catch_warnings():
        # Balance warnings for non power-of-two counts are irrelevant here.
        warnings.simplefilter("ignore", UserWarning)
        return sampler.random(n)


def benchmark_lengthscale(d: int) -> float:
    """Default lengthscale schedule, 0.1 * sqrt(d) clipped to [0.1, 0.5]."""
    return float(min(max(0.1 * math.sqrt(d), 0.1), 0.5))


def default_benchmark_kernel(d: int) -> KernelSpec:
    lam = benchmark_lengthscale(d)
    return KernelSpec(outputscale=1.0, lengthscales=np.full(d, lam), noise_variance=0.01)


class WithinModelObjective:
    """A noise-free GP interpolant f plus its biased simulator f_sim.

    f passes through (anchors, values_f) exactly; f_sim = f + f_gap where
    the gap interpolates values_gap with the same lengthscales at reduced
    amplitude. Instances are immutable after construction and safe to
    evaluate concurrently.
    """

    def __init__(
        self,
        anchors: np.ndarray,
        values_f: np.ndarray,
        values_gap: np.ndarray,
        kernel_f: KernelSpec,
        kernel_gap: KernelSpec | None,
        rng_seed: int,
        gap_amplitude: float,
        coef_f: np.ndarray,
        coef_gap: np.ndarray | None,
    ):
        self.anchors = anchors
        self.values_f = values_f
        self.values_gap = values_gap
        self.kernel_f = kernel_f
        self.kernel_gap = kernel_gap
        self.rng_seed = rng_seed
        self.gap_amplitude = gap_amplitude
        self._coef_f = coef_f
        self._coef_gap = coef_gap
        self._range: tuple[float, float] | None = None

    @property
    def dimension(self) -> int:
        return self.anchors.shape[1]

    def _as_batch(self, theta) -> np.ndarray:
        arr = np.atleast_1d(np.asarray(theta, dtype=float))
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.shape[1] != self.dimension:
            raise ConfigurationError(
                f"point has dimension {arr.shape[1]}, objective expects {self.dimension}"
            )
        return arr

    def f_batch(self, thetas: np.ndarray) -> np.ndarray:
        cross = se_cross(self._as_batch(thetas), self.anchors, self.kernel_f)
        return cross @ self._coef_f

    def f_sim_batch(self, thetas: np.ndarray) -> np.ndarray:
        cross = se_cross(self._as_batch(thetas), self.anchors, self.kernel_f)
        values = cross @ self._coef_f
        if self._coef_gap is not None:
            values = values + cross @ self._coef_gap
        return values

    def f(self, theta) -> float:
        return float(self.f_batch(theta)[0])

    def f_sim(self, theta) -> float:
        return float(self.f_sim_batch(theta)[0])

    def gradient_f(self, theta) -> np.ndarray:
        point = self._as_batch(theta)[0]
        return se_cross_grad1(point, self.anchors, self.kernel_f) @ self._coef_f

    @property
    def value_range(self) -> tuple[float, float]:
        """Min and max of f over the anchors plus a 4096-point reference grid."""
        if self._range is None:
            grid = np.vstack([self.anchors, sobol_points(4096, self.dimension)])
            values = self.f_batch(grid)
            self._range = (float(values.min()), float(values.max()))
        return self._range

    def dual_spec(self, sim_noise_variance: float | None = None) -> DualKernelSpec:
        """Two-source kernel matching this objective's generative model."""
        if self.kernel_gap is None:
            raise ConfigurationError("objective has no simulator gap to model")
        return DualKernelSpec(
            k_f=self.kernel_f, k_m=self.kernel_gap, sim_noise_variance=sim_noise_variance
        )


def _factor_gram(anchors: np.ndarray, kernel: KernelSpec) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecompose the anchor Gram matrix, escalating jitter on failure."""
    K = se_cross(anchors, anchors, kernel)
    jitter = 0.0
    for _ in range(4):
        try:
            w, U = np.linalg.eigh(K + jitter * np.eye(len(K)))
        except np.linalg.LinAlgError:
            jitter = max(jitter * 10.0, 1e-12 * kernel.outputscale)
            continue
        keep = w > _EIG_CUTOFF * w[-1]
        if np.any(keep):
            return w[keep], U[:, keep]
        jitter = max(jitter * 10.0, 1e-12 * kernel.outputscale)
    raise NumericalError("anchor Gram matrix could not be factorized")


def make_within_model(
    dimension: int,
    function_seed: int,
    kernel_f: KernelSpec | None = None,
    gap_amplitude: float = 0.2,
    n_anchors: int = 1000,
) -> WithinModelObjective:
    """Draw a ground-truth objective and its simulator from the GP prior.

    Two independent streams derived from function_seed generate the target
    values and the simulator gap. The gap shares the target's lengthscales
    with outputscale scaled by gap_amplitude squared, so gap_amplitude is
    the amplitude ratio between bias and target.
    """
    if not 1 <= dimension <= MAX_SOBOL_DIMENSION:
        raise ConfigurationError(f"dimension must be between 1 and {MAX_SOBOL_DIMENSION}")
    if gap_amplitude < 0:
        raise ConfigurationError(f"gap_amplitude must be nonnegative, got {gap_amplitude}")
    if n_anchors < 2:
        raise ConfigurationError(f"need at least two anchors, got {n_anchors}")
    if kernel_f is None:
        kernel_f = default_benchmark_kernel(dimension)
    elif kernel_f.dimension != dimension:
        raise ConfigurationError(
            f"kernel has dimension {kernel_f.dimension}, objective expects {dimension}"
        )

    anchors = sobol_points(n_anchors, dimension)
    w, U = _factor_gram(anchors, kernel_f)
    sqrt_w = np.sqrt(w)

    seed_f, seed_gap = np.random.SeedSequence(function_seed).spawn(2)
    z_f = np.random.default_rng(seed_f).standard_normal(len(w))
    values_f = U @ (sqrt_w * z_f)
    coef_f = U @ (z_f / sqrt_w)

    if gap_amplitude > 0:
        # The gap kernel differs from the target only by a scalar factor,
        # so the same eigenbasis serves both draws and the gap interpolant
        # reduces to extra coefficients against the target's cross-kernel.
        z_gap = np.random.default_rng(seed_gap).standard_normal(len(w))
        values_gap = gap_amplitude * (U @ (sqrt_w * z_gap))
        coef_gap = gap_amplitude * (U @ (z_gap / sqrt_w))
        kernel_gap = KernelSpec(
            outputscale=gap_amplitude**2 * kernel_f.outputscale,
            lengthscales=kernel_f.lengthscales.copy(),
            noise_variance=0.0,
        )
    else:
        values_gap = np.zeros(n_anchors)
        coef_gap = None
        kernel_gap = None

    return WithinModelObjective(
        anchors=anchors,
        values_f=values_f,
        values_gap=values_gap,
        kernel_f=kernel_f,
        kernel_gap=kernel_gap,
        rng_seed=function_seed,
        gap_amplitude=gap_amplitude,
        coef_f=coef_f,
        coef_gap=coef_gap,
    )


def toy_pair():
    """The 1-D sine target and its cosine-biased simulator on [0, 1].

    f peaks at theta = 0.25 with value 1; the simulator adds
    0.4 * cos(2 pi theta) on top of f.
    """

    def f(theta) -> float:
        return math.sin(2.0 * math.pi * float(np.squeeze(theta)))

    def f_sim(theta) -> float:
        t = float(np.squeeze(theta))
        return math.sin(2.0 * math.pi * t) + 0.4 * math.cos(2.0 * math.pi * t)

    return f, f_sim


@dataclass(frozen=True)
class SolutionAccuracy:
    """Objective value rescaled onto [0, 1] against a reference grid."""

    value: float

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"accuracy must lie in [0, 1], got {self.value}")


def solution_accuracy(objective, theta_hat) -> SolutionAccuracy:
    """Affinely rescale the objective at theta_hat so the grid best maps to 1.

    The reference grid is the objective's anchors plus 4096 quasi-random
    points (just the grid for a bare callable). A constant objective gets
    accuracy 1 by convention; off-grid values are clipped to [0, 1].
    """
    theta = np.atleast_1d(np.asarray(theta_hat, dtype=float))
    if isinstance(objective, WithinModelObjective):
        lo, hi = objective.value_range
        value = objective.f(theta)
    else:
        grid = sobol_points(4096, theta.size)
        values = np.array([float(objective(point)) for point in grid])
        lo, hi = float(values.min()), float(values.max())
        value = float(objective(theta))
    span = hi - lo
    if span <= 1e-12 * max(1.0, abs(hi), abs(lo)):
        return SolutionAccuracy(1.0)
    return SolutionAccuracy(float(np.clip((value - lo) / span, 0.0, 1.0)))


_REQUIRED_KEYS = {"kind", "dimension", "rng_seed", "n_anchors", "gap_amplitude", "kernel_f"}
_KERNEL_KEYS = {"outputscale", "lengthscales", "noise_variance"}


def save_objective(objective: WithinModelObjective, path) -> None:
    """Write the seeds and kernel parameters needed to rebuild the objective."""
    payload = {
        "kind": "within_model",
        "dimension": objective.dimension,
        "rng_seed": objective.rng_seed,
        "n_anchors": len(objective.anchors),
        "gap_amplitude": objective.gap_amplitude,
        "kernel_f": {
            "outputscale": objective.kernel_f.outputscale,
            "lengthscales": objective.kernel_f.lengthscales.tolist(),
            "noise_variance": objective.kernel_f.noise_variance,
        },
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def load_objective(path) -> WithinModelObjective:
    """Rebuild an objective saved by save_objective, validating the payload."""
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read objective file {path}: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("kind") != "within_model":
        raise ConfigurationError("objective file must declare kind 'within_model'")
    missing = _REQUIRED_KEYS - payload.keys()
    if missing:
        raise ConfigurationError(f"objective file missing keys: {sorted(missing)}")
    kernel_raw = payload["kernel_f"]
    if not isinstance(kernel_raw, dict) or _KERNEL_KEYS - kernel_raw.keys():
        raise ConfigurationError("objective file has an incomplete kernel description")
    kernel = KernelSpec(
        outputscale=float(kernel_raw["outputscale"]),
        lengthscales=np.asarray(kernel_raw["lengthscales"], dtype=float),
        noise_variance=float(kernel_raw["noise_variance"]),
    )
    return make_within_model(
        dimension=int(payload["dimension"]),
        function_seed=int(payload["rng_seed"]),
        kernel_f=kernel,
        gap_amplitude=float(payload["gap_amplitude"]),
        n_anchors=int(payload["n_anchors"]),
    )
