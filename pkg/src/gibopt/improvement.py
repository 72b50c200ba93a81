"""Commitment test and policy update for gradient-belief optimization.

Given a Gaussian belief over the objective gradient at the incumbent, the
probability that a gradient step of size eta actually improves the objective
has a closed form: the directional derivative along the step direction is a
scalar Gaussian, and improvement holds whenever it clears the curvature
threshold (L/2) * eta * ||step||.
"""

from __future__ import annotations

import math

from dataclasses import dataclass

import numpy as np

from .gp import GradientBelief


@dataclass(frozen=True)
class ImprovementConfig:
    """Hyperparameters of the commitment rule.

    lipschitz_L bounds the gradient's rate of change, step_eta is the step
    size, alpha the confidence required to commit, and normalized selects a
    unit-length step direction instead of the raw mean gradient.
    """

    lipschitz_L: float
    step_eta: float
    alpha: float
    normalized: bool = False

    def __post_init__(self):
        if not (self.lipschitz_L > 0.0):
            raise ValueError(f"lipschitz_L must be positive, got {self.lipschitz_L}")
        if not (self.step_eta > 0.0):
            raise ValueError(f"step_eta must be positive, got {self.step_eta}")
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")


def gauss_cdf(z: float) -> float:
    """Standard normal CDF."""
    return 0.5 * math.erfc(-float(z) / math.sqrt(2.0))


def improvement_confidence(belief: GradientBelief, cfg: ImprovementConfig) -> float:
    """Probability that the configured update step increases the objective.

    With u = mu/||mu||, the directional derivative u.g of a gradient draw
    g ~ N(mu, cov) is N(||mu||, u' cov u).  The step improves the objective
    when u.g exceeds T = (L/2) * eta * ||nu||, where nu is the step vector
    (mu raw, or u when normalized).  A zero-mean belief has no direction and
    gets confidence 0.
    """
    mean = np.asarray(belief.mean, dtype=float)
    cov = np.asarray(belief.covariance, dtype=float)
    eigvals = np.linalg.eigvalsh(cov)
    if eigvals.size and eigvals[0] < -1e-10 * max(1.0, float(eigvals[-1])):
        raise ValueError("covariance is not positive semi-definite")
    norm = float(np.linalg.norm(mean))
    if norm == 0.0:
        return 0.0
    u = mean / norm
    s_sq = max(float(u @ cov @ u), 0.0)
    step_norm = 1.0 if cfg.normalized else norm
    threshold = 0.5 * cfg.lipschitz_L * cfg.step_eta * step_norm
    if s_sq == 0.0:
        return 1.0 if norm > threshold else 0.0
    return gauss_cdf((norm - threshold) / math.sqrt(s_sq))


def commit(belief: GradientBelief, cfg: ImprovementConfig) -> bool:
    """True when the improvement confidence reaches the required level."""
    return improvement_confidence(belief, cfg) >= cfg.alpha


def update_step(incumbent: np.ndarray, belief: GradientBelief, cfg: ImprovementConfig) -> np.ndarray:
    """Ascent step from the incumbent along the believed gradient mean."""
    incumbent = np.asarray(incumbent, dtype=float)
    mean = np.asarray(belief.mean, dtype=float)
    norm = float(np.linalg.norm(mean))
    if norm == 0.0:
        return incumbent.copy()
    direction = mean / norm if cfg.normalized else mean
    return incumbent + cfg.step_eta * direction
