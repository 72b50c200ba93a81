"""Two-axis inverted pendulum disturbed by a rhythmic policy.

A cart-mounted pole is held upright by a fixed LQR loop while a
24-weight periodic policy (12 von Mises basis functions per axis)
injects accelerations that should steer the pole tip along a Lissajous
reference. Episode cost is the time-weighted tracking error; evaluators
expose the negated cost so the optimizer maximizes. The simulator
counterpart runs the same plant under mildly perturbed parameters.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import ConfigurationError
from .optimizer import FunctionEvaluator

log = logging.getLogger(__name__)

DEFAULT_GAIN = np.array([45.4, 11.9, 3.16, 5.74])

EPISODE_STEPS = 2000
CONTROL_DT = 0.01
SUBSTEPS = 10  # RK4 at 1 kHz under the 100 Hz zero-order hold

_TRAJECTORY_HEADER = ["t", "phi", "theta", "x", "y", "x_tip", "y_tip", "x_d", "y_d", "a_x", "a_y"]


@dataclass(frozen=True)
class PendulumParams:
    """Plant constants; defaults describe the reference hardware.

    literal_pole_coupling switches the control term in the pole equation
    from the self-consistent -(1/l) cos(phi) u to the unit-inconsistent
    -(g/l) cos(phi) u. The latter makes the stock gain unusable under the
    100 Hz hold (the fast feedback mode lands outside the sampled-data
    stability region), so it is off by default.
    """

    m: float = 0.1593
    l: float = 0.463
    xi: float = 0.002
    g: float = 9.81
    origin: tuple[float, float] = (0.5, 0.0)
    literal_pole_coupling: bool = False

    def __post_init__(self):
        if self.m <= 0 or self.l <= 0:
            raise ValueError("mass and length must be positive")
        # g = 0 stays legal so the plant can be exercised without gravity.
        if self.g < 0 or self.xi < 0:
            raise ValueError("gravity and friction must be nonnegative")
        origin = (float(self.origin[0]), float(self.origin[1]))
        if len(self.origin) != 2:
            raise ValueError("origin must be an (x, y) pair")
        object.__setattr__(self, "origin", origin)

    @property
    def pole_coupling(self) -> float:
        """Coefficient of cos(phi) u in the pole equation."""
        return self.g / self.l if self.literal_pole_coupling else 1.0 / self.l


@dataclass(frozen=True)
class DmpPolicy:
    """Periodic disturbance policy: 12 basis weights per axis.

    Basis i responds with exp(width * (cos(omega t - centers[i]) - 1));
    the axis acceleration is the basis-weighted average of the weights
    scaled by amplitude. Centers are phase offsets evenly covering one
    period.
    """

    weights: np.ndarray
    amplitude: float = 1.0
    width: float = 1.0
    period: float = 20.0
    centers: np.ndarray = field(init=False)

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float).copy()
        if weights.shape != (24,):
            raise ValueError(f"policy needs 24 weights, got shape {weights.shape}")
        if not np.all(np.isfinite(weights)):
            raise ValueError("policy weights must be finite")
        if self.period <= 0 or self.width <= 0:
            raise ValueError("period and width must be positive")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "centers", 2.0 * math.pi * np.arange(12) / 12.0)

    @property
    def weights_x(self) -> np.ndarray:
        return self.weights[:12]

    @property
    def weights_y(self) -> np.ndarray:
        return self.weights[12:]


@dataclass(frozen=True)
class EpisodeResult:
    cost: float
    trajectory: np.ndarray
    diverged: bool

    def __post_init__(self):
        if self.cost < 0:
            raise ValueError(f"episode cost must be nonnegative, got {self.cost}")


@njit(cache=True)
def _dmp_axis(weights, centers, width, amplitude, phase):
    num = 0.0
    den = 0.0
    for i in range(centers.size):
        basis = math.exp(width * (math.cos(phase - centers[i]) - 1.0))
        num += basis * weights[i]
        den += basis
    return amplitude * num / den


@njit(cache=True)
def _state_derivative(s, u_x, u_y, a_x, a_y, g_over_l, coupling, damp):
    d = np.empty(8)
    d[0] = s[1]
    d[1] = g_over_l * math.sin(s[0]) - coupling * math.cos(s[0]) * u_x - damp * s[1]
    d[2] = s[3]
    d[3] = u_x + a_x
    d[4] = s[5]
    d[5] = g_over_l * math.sin(s[4]) - coupling * math.cos(s[4]) * u_y - damp * s[5]
    d[6] = s[7]
    d[7] = u_y + a_y
    return d


@njit(cache=True)
def _rk4_step(s, u_x, u_y, a_x, a_y, g_over_l, coupling, damp, dt):
    k1 = _state_derivative(s, u_x, u_y, a_x, a_y, g_over_l, coupling, damp)
    k2 = _state_derivative(s + 0.5 * dt * k1, u_x, u_y, a_x, a_y, g_over_l, coupling, damp)
    k3 = _state_derivative(s + 0.5 * dt * k2, u_x, u_y, a_x, a_y, g_over_l, coupling, damp)
    k4 = _state_derivative(s + dt * k3, u_x, u_y, a_x, a_y, g_over_l, coupling, damp)
    return s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@njit(cache=True)
def _episode_core(
    state,
    weights_x,
    weights_y,
    centers,
    width,
    amplitude,
    omega,
    gain,
    sign,
    g_over_l,
    coupling,
    damp,
    length,
    x0,
    y0,
    n_steps,
    control_dt,
    n_sub,
):
    traj = np.full((n_steps, 11), np.nan)
    sub_dt = control_dt / n_sub
    quarter_pi = 0.25 * math.pi
    for k in range(n_steps):
        if not (np.all(np.isfinite(state)) and abs(state[0]) <= quarter_pi and abs(state[4]) <= quarter_pi):
            return traj, True
        t = k * control_dt
        phase = omega * t
        a_x = _dmp_axis(weights_x, centers, width, amplitude, phase)
        a_y = _dmp_axis(weights_y, centers, width, amplitude, phase)
        u_x = sign * (
            gain[0] * state[0] + gain[1] * state[1] + gain[2] * (state[2] - x0) + gain[3] * state[3]
        )
        u_y = sign * (
            gain[0] * state[4] + gain[1] * state[5] + gain[2] * (state[6] - y0) + gain[3] * state[7]
        )
        traj[k, 0] = t
        traj[k, 1] = state[0]
        traj[k, 2] = state[4]
        traj[k, 3] = state[2]
        traj[k, 4] = state[6]
        traj[k, 5] = state[2] + length * math.sin(state[0])
        traj[k, 6] = state[6] + length * math.sin(state[4])
        traj[k, 9] = a_x
        traj[k, 10] = a_y
        for _ in range(n_sub):
            state = _rk4_step(state, u_x, u_y, a_x, a_y, g_over_l, coupling, damp, sub_dt)
    return traj, False


def dmp_accel(policy: DmpPolicy, t: float) -> tuple[float, float]:
    """Disturbance acceleration of both axes at time t."""
    phase = 2.0 * math.pi * float(t) / policy.period
    a_x = _dmp_axis(policy.weights_x, policy.centers, policy.width, policy.amplitude, phase)
    a_y = _dmp_axis(policy.weights_y, policy.centers, policy.width, policy.amplitude, phase)
    return float(a_x), float(a_y)


def _damping(params: PendulumParams) -> float:
    return params.xi / (params.m * params.l**2)


def step_dynamics(state, control, accel, params: PendulumParams, dt: float) -> np.ndarray:
    """One RK4 step of [phi, phi', x, x', theta, theta', y, y'].

    The control pair acts on both the pole and the cart; the disturbance
    pair accelerates the cart only. Both are held constant over dt.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    s = np.asarray(state, dtype=float)
    if s.shape != (8,):
        raise ValueError(f"state must have 8 entries, got shape {s.shape}")
    return _rk4_step(
        s.copy(),
        float(control[0]),
        float(control[1]),
        float(accel[0]),
        float(accel[1]),
        params.g / params.l,
        params.pole_coupling,
        _damping(params),
        float(dt),
    )


def _closed_loop(params: PendulumParams, gain: np.ndarray, sign: float) -> np.ndarray:
    gl = params.g / params.l
    damp = _damping(params)
    A = np.array(
        [
            [0.0, 1.0, 0.0, 0.0],
            [gl, -damp, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 0.0, 0.0],
        ]
    )
    B = np.array([0.0, -params.pole_coupling, 0.0, 1.0])
    return A + sign * np.outer(B, gain)

def lqr_sign(params: PendulumParams, gain: np.ndarray) -> float:
    """Orientation of the control law that stabilizes the linearized loop."""
    gain = np.asarray(gain, dtype=float)
    for sign in (1.0, -1.0):
        if np.max(np.linalg.eigvals(_closed_loop(params, gain, sign)).real) < 0.0:
            if sign < 0:
                log.debug("flipping control sign: +gain is unstable")
            return sign
    raise ConfigurationError("gain stabilizes the linearized pendulum under neither sign")


def lissajous_reference(t, origin: tuple[float, float] = (0.5, 0.0)):
    """Reference tip coordinates at times t (20-second figure-eight)."""
    t = np.asarray(t, dtype=float)
    omega = 2.0 * math.pi / 20.0
    x_d = 0.2 * np.sin(omega * t) * np.cos(omega * t) + origin[0]
    y_d = 0.12 * np.sin(omega * t) + origin[1]
    return x_d, y_d


def tracking_cost(x_tracked, y_tracked, x_d, y_d, dt: float = CONTROL_DT) -> float:
    """Time-weighted absolute tracking error, x-axis weighted 1.2."""
    x_err = np.abs(np.asarray(x_tracked) - np.asarray(x_d))
    y_err = np.abs(np.asarray(y_tracked) - np.asarray(y_d))
    return float(np.sum(1.2 * x_err + y_err) * dt)


def divergence_penalty(n_steps: int = EPISODE_STEPS, dt: float = CONTROL_DT) -> float:
    """Cost charged to a fallen episode: three times the do-nothing cost."""
    t = np.arange(n_steps) * dt
    x_d, y_d = lissajous_reference(t)
    return 3.0 * tracking_cost(np.full(n_steps, 0.5), np.zeros(n_steps), x_d, y_d, dt)


def run_episode(
    policy: DmpPolicy,
    params: PendulumParams = PendulumParams(),
    gain: np.ndarray = DEFAULT_GAIN,
    *,
    track_tip: bool = True,
    initial_state=None,
) -> EpisodeResult:
    """Simulate 20 seconds of disturbance-under-regulation.

    Control updates at 100 Hz with RK4 substeps at 1 kHz. The episode is
    flagged diverged as soon as either tilt angle leaves [-pi/4, pi/4] or
    the state stops being finite, and then costs the penalty ceiling.
    """
    sign = lqr_sign(params, gain)
    if initial_state is None:
        state = np.zeros(8)
        state[2], state[6] = params.origin
    else:
        state = np.asarray(initial_state, dtype=float).copy()
        if state.shape != (8,):
            raise ValueError(f"initial state must have 8 entries, got shape {state.shape}")
    traj, diverged = _episode_core(
        state,
        policy.weights_x.copy(),
        policy.weights_y.copy(),
        policy.centers,
        policy.width,
        policy.amplitude,
        2.0 * math.pi / policy.period,
        np.asarray(gain, dtype=float),
        sign,
        params.g / params.l,
        params.pole_coupling,
        _damping(params),
        params.l,
        params.origin[0],
        params.origin[1],
        EPISODE_STEPS,
        CONTROL_DT,
        SUBSTEPS,
    )
    t = np.arange(EPISODE_STEPS) * CONTROL_DT
    traj[:, 0] = t
    x_d, y_d = lissajous_reference(t, params.origin)
    traj[:, 7] = x_d
    traj[:, 8] = y_d
    if diverged:
        cost = divergence_penalty()
    elif track_tip:
        cost = tracking_cost(traj[:, 5], traj[:, 6], x_d, y_d)
    else:
        cost = tracking_cost(traj[:, 3], traj[:, 4], x_d, y_d)
    return EpisodeResult(cost=cost, trajectory=traj, diverged=diverged)


def perturbed_params(
    params: PendulumParams,
    m_scale: float = 0.9,
    xi_scale: float = 0.9,
    l_scale: float = 1.02,
) -> PendulumParams:
    """Simulator plant: slightly lighter, slicker, and longer than real."""
    return PendulumParams(
        m=params.m * m_scale,
        l=params.l * l_scale,
        xi=params.xi * xi_scale,
        g=params.g,
        origin=params.origin,
        literal_pole_coupling=params.literal_pole_coupling,
    )


def make_evaluator(
    real_params: PendulumParams = PendulumParams(),
    sim_params: PendulumParams | None = None,
    gain: np.ndarray = DEFAULT_GAIN,
    noise_std: float = 0.0,
    seed: int = 0,
    track_tip: bool = True,
) -> FunctionEvaluator:
    """Evaluator mapping 24 policy weights to noisy negated episode cost.

    The simulator probe runs the perturbed plant (sim_params defaults to
    the standard mild perturbation of real_params).
    """
    if sim_params is None:
        sim_params = perturbed_params(real_params)

    def real_fn(weights):
        policy = DmpPolicy(weights=np.asarray(weights, dtype=float))
        return -run_episode(policy, real_params, gain, track_tip=track_tip).cost

    def sim_fn(weights):
        policy = DmpPolicy(weights=np.asarray(weights, dtype=float))
        return -run_episode(policy, sim_params, gain, track_tip=track_tip).cost

    return FunctionEvaluator(real_fn, sim_fn, noise_std=noise_std, seed=seed)


def export_trajectory(result: EpisodeResult, path) -> None:
    """Write the 100 Hz episode trace as CSV."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(_TRAJECTORY_HEADER)
        for row in result.trajectory:
            writer.writerow([repr(float(v)) for v in row])
