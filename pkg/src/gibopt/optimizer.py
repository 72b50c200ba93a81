"""Local Bayesian optimization loops driven by gradient beliefs.

Three variants share one skeleton: sample where the gradient-information
acquisition is largest, update the gradient belief at the incumbent, and
step along the believed gradient once a commitment rule is satisfied.  The
rules differ per variant: a fixed query count, a confidence threshold, or
the confidence threshold fed by a simulator first.
"""

from __future__ import annotations

import math

from dataclasses import dataclass, field

import numpy as np

from .acquisition import QueryDomain, _mean_lengthscale, gi_value, optimize_query, sim_to_real_gap
from .errors import ConfigurationError
from .gp import Dataset, LabeledSample, posterior_gradient
from .improvement import ImprovementConfig, improvement_confidence, update_step
from .kernels import REAL, SIM, DualKernelSpec


class Evaluator:
    """Query interface to the objective and its optional simulator.

    Subclasses implement _real(theta) and, when a simulator exists,
    _sim(theta); the base class keeps the probe counters honest.
    """

    def __init__(self):
        self.queries_real = 0
        self.queries_sim = 0

    @property
    def has_sim(self) -> bool:
        return type(self)._sim is not Evaluator._sim

    def eval_real(self, theta) -> float:
        self.queries_real += 1
        return float(self._real(np.atleast_1d(np.asarray(theta, dtype=float))))

    def eval_sim(self, theta) -> float:
        if not self.has_sim:
            raise NotImplementedError("this evaluator has no simulator probe")
        self.queries_sim += 1
        return float(self._sim(np.atleast_1d(np.asarray(theta, dtype=float))))

    def _real(self, theta) -> float:
        raise NotImplementedError

    def _sim(self, theta) -> float:
        raise NotImplementedError


class FunctionEvaluator(Evaluator):
    """Evaluator over plain callables with Gaussian observation noise."""

    def __init__(self, real_fn, sim_fn=None, noise_std=0.0, seed=0):
        super().__init__()
        self._real_fn = real_fn
        self._sim_fn = sim_fn
        self._noise_std = float(noise_std)
        self._rng = np.random.default_rng(seed)

    @property
    def has_sim(self) -> bool:
        return self._sim_fn is not None

    def _noise(self) -> float:
        if self._noise_std == 0.0:
            return 0.0
        return float(self._rng.normal(0.0, self._noise_std))

    def _real(self, theta) -> float:
        return float(self._real_fn(theta)) + self._noise()

    def _sim(self, theta) -> float:
        if self._sim_fn is None:
            raise NotImplementedError("this evaluator has no simulator probe")
        return float(self._sim_fn(theta)) + self._noise()


@dataclass(frozen=True)
class OptimizerConfig:
    improvement: ImprovementConfig
    kernel: object
    domain: QueryDomain
    budget_real: int
    beta: float = 1.0
    fixed_M: int | None = None
    max_queries_per_update: int | None = None
    max_updates: int | None = None
    seed: int = 0
    evaluate_incumbent_initially: bool = True

    def __post_init__(self):
        if self.budget_real < 1:
            raise ValueError(f"budget_real must be at least 1, got {self.budget_real}")
        if self.fixed_M is not None and self.fixed_M < 1:
            raise ValueError(f"fixed_M must be a positive count, got {self.fixed_M}")
        if self.max_queries_per_update is not None and self.max_queries_per_update < 1:
            raise ValueError(f"max_queries_per_update must be positive, got {self.max_queries_per_update}")
        if self.max_updates is not None and self.max_updates < 1:
            raise ValueError(f"max_updates must be positive, got {self.max_updates}")


@dataclass(frozen=True)
class QueryEvent:
    """Snapshot emitted to an observer after each evaluation lands.

    update_index counts the descent phases already completed when the
    query was spent, and confidence is the improvement confidence of the
    incumbent belief including this sample.
    """

    source: int
    theta: np.ndarray
    y: float
    queries_real: int
    queries_sim: int
    update_index: int
    incumbent: np.ndarray
    confidence: float


@dataclass(frozen=True)
class UpdateRecord:
    """One descent-direction phase: queries spent and how it ended.

    committed means the phase satisfied its commitment rule; stepped means
    the incumbent actually moved (a cap-truncated phase still steps, a
    budget-truncated one does not).
    """

    index: int
    queries_real: int
    queries_sim: int
    confidence: float
    committed: bool
    stepped: bool
    incumbent_after: np.ndarray


@dataclass
class OptimizerState:
    incumbent: np.ndarray
    data: Dataset
    updates_done: int = 0
    queries_real: int = 0
    queries_sim: int = 0
    active_source: int = REAL
    per_update_log: list = field(default_factory=list)


def terminate(state: OptimizerState, config: OptimizerConfig) -> bool:
    """True once the real budget or the update allowance is spent."""
    max_updates = config.max_updates if config.max_updates is not None else config.budget_real
    return state.queries_real >= config.budget_real or state.updates_done >= max_updates


def _window(data: Dataset, incumbent: np.ndarray, spec) -> Dataset:
    """Samples within three mean lengthscales of the incumbent.

    Keeps the gram matrix local and bounded; the radius is measured per
    information source since the two kernels may differ in scale.
    """
    if len(data) == 0:
        return data
    distances = np.linalg.norm(data.thetas() - incumbent, axis=1)
    radius_real = 3.0 * _mean_lengthscale(spec, REAL)
    radius_sim = 3.0 * _mean_lengthscale(spec, SIM)
    radii = np.where(data.sources() == REAL, radius_real, radius_sim)
    return data.subset(distances <= radii)


def _domain_at(config: OptimizerConfig, incumbent: np.ndarray) -> QueryDomain:
    return QueryDomain(center=incumbent, half_width=config.domain.half_width, bounds=config.domain.bounds)


def _project(theta: np.ndarray, config: OptimizerConfig) -> np.ndarray:
    if config.domain.bounds is None:
        return theta
    low, high = config.domain.bounds
    return np.clip(theta, low, high)


def _start(evaluator: Evaluator, config: OptimizerConfig, theta0, observer=None) -> tuple[OptimizerState, np.random.Generator]:
    theta0 = _project(np.atleast_1d(np.asarray(theta0, dtype=float)).copy(), config)
    state = OptimizerState(incumbent=theta0, data=Dataset(theta0.size))
    if config.evaluate_incumbent_initially:
        y = evaluator.eval_real(state.incumbent)
        state.queries_real += 1
        state.data.append(LabeledSample(theta=state.incumbent.copy(), y=y, source=REAL))
        _notify(observer, state, config, REAL, state.incumbent, y)
    return state, np.random.default_rng(config.seed)


def _notify(observer, state, config, source, theta, y) -> None:
    if observer is None:
        return
    _, confidence = _belief_at_incumbent(state, config)
    observer(
        QueryEvent(
            source=source,
            theta=np.asarray(theta, dtype=float).copy(),
            y=float(y),
            queries_real=state.queries_real,
            queries_sim=state.queries_sim,
            update_index=state.updates_done,
            incumbent=state.incumbent.copy(),
            confidence=confidence,
        )
    )


def _belief_at_incumbent(state: OptimizerState, config: OptimizerConfig):
    windowed = _window(state.data, state.incumbent, config.kernel)
    belief = posterior_gradient(windowed, state.incumbent, config.kernel)
    return belief, improvement_confidence(belief, config.improvement)


def _apply_step(state: OptimizerState, belief, config: OptimizerConfig) -> None:
    state.incumbent = _project(update_step(state.incumbent, belief, config.improvement), config)
    state.updates_done += 1


def _log_phase(state, queries_real, queries_sim, confidence, committed, stepped) -> None:
    state.per_update_log.append(
        UpdateRecord(
            index=len(state.per_update_log) + 1,
            queries_real=queries_real,
            queries_sim=queries_sim,
            confidence=confidence,
            committed=committed,
            stepped=stepped,
            incumbent_after=state.incumbent.copy(),
        )
    )


def _execute_query(evaluator, state, config, rng, source: int, observer=None):
    windowed = _window(state.data, state.incumbent, config.kernel)
    domain = _domain_at(config, state.incumbent)
    result = optimize_query(windowed, state.incumbent, domain, config.kernel, rng, source=source)
    if source == SIM:
        y = evaluator.eval_sim(result.theta)
        state.queries_sim += 1
    else:
        y = evaluator.eval_real(result.theta)
        state.queries_real += 1
    state.data.append(LabeledSample(theta=result.theta.copy(), y=y, source=source))
    _notify(observer, state, config, source, result.theta, y)
    return result


def run_gibo(evaluator: Evaluator, config: OptimizerConfig, theta0, observer=None) -> tuple[np.ndarray, OptimizerState]:
    """Fixed-query-count variant: M acquisitions per update, then step."""
    if isinstance(config.kernel, DualKernelSpec):
        raise ConfigurationError("fixed-M optimization uses a single-source kernel")
    if config.fixed_M is None:
        raise ConfigurationError("fixed_M must be set for the fixed-M variant")
    state, rng = _start(evaluator, config, theta0, observer)
    while not terminate(state, config):
        executed = 0
        for _ in range(config.fixed_M):
            if state.queries_real >= config.budget_real:
                break
            _execute_query(evaluator, state, config, rng, REAL, observer)
            executed += 1
        belief, confidence = _belief_at_incumbent(state, config)
        full = executed == config.fixed_M
        if full:
            _apply_step(state, belief, config)
        _log_phase(state, executed, 0, confidence, committed=full, stepped=full)
    return state.incumbent.copy(), state


def _run_phase(evaluator, state, config, rng, start_with_sim: bool, observer=None) -> None:
    """One descent-direction phase of the confidence-gated variants."""
    cap = config.max_queries_per_update
    if cap is None:
        cap = 3 * state.incumbent.size
    active = SIM if start_with_sim else REAL
    state.active_source = active
    phase_real = phase_sim = 0
    pending = None
    # Commitment is only judged on evidence this phase gathered itself, so
    # the query body always runs at least once; a confident carried-over
    # belief cannot chain steps without fresh observations.
    belief, confidence = _belief_at_incumbent(state, config)
    while phase_real + phase_sim < cap:
        if active == REAL and state.queries_real >= config.budget_real:
            break
        if active == SIM:
            if pending is None:
                windowed = _window(state.data, state.incumbent, config.kernel)
                domain = _domain_at(config, state.incumbent)
                pending = optimize_query(windowed, state.incumbent, domain, config.kernel, rng, source=SIM)
            theta = pending.theta
            y = evaluator.eval_sim(theta)
            state.queries_sim += 1
            phase_sim += 1
            state.data.append(LabeledSample(theta=theta.copy(), y=y, source=SIM))
            # Compare the spent query's residual utility with the best
            # fresh candidate on the updated data; once a new sim sample
            # is barely better than resampling, the simulator is drained.
            windowed = _window(state.data, state.incumbent, config.kernel)
            domain = _domain_at(config, state.incumbent)
            spent = gi_value(windowed, state.incumbent, theta, config.kernel, source=SIM)
            pending = optimize_query(windowed, state.incumbent, domain, config.kernel, rng, source=SIM)
            gap = sim_to_real_gap(state.data, state.incumbent, spent, pending.value)
            if config.beta == math.inf or (phase_sim >= 2 and gap <= config.beta):
                active = REAL
                state.active_source = REAL
                pending = None
        else:
            _execute_query(evaluator, state, config, rng, REAL)
            phase_real += 1
        belief, confidence = _belief_at_incumbent(state, config)
        if observer is not None:
            last = state.data.samples[-1]
            observer(
                QueryEvent(
                    source=last.source,
                    theta=last.theta.copy(),
                    y=last.y,
                    queries_real=state.queries_real,
                    queries_sim=state.queries_sim,
                    update_index=state.updates_done,
                    incumbent=state.incumbent.copy(),
                    confidence=confidence,
                )
            )
        if confidence >= config.improvement.alpha:
            break
    committed = confidence >= config.improvement.alpha and phase_real + phase_sim > 0
    stepped = committed or phase_real + phase_sim >= cap
    if stepped:
        _apply_step(state, belief, config)
    _log_phase(state, phase_real, phase_sim, confidence, committed, stepped)


def run_hci_gibo(evaluator: Evaluator, config: OptimizerConfig, theta0, observer=None) -> tuple[np.ndarray, OptimizerState]:
    """Confidence-gated variant: query until a step is probably uphill."""
    if isinstance(config.kernel, DualKernelSpec):
        raise ConfigurationError("the single-source variant needs a single-source kernel")
    state, rng = _start(evaluator, config, theta0, observer)
    while not terminate(state, config):
        _run_phase(evaluator, state, config, rng, start_with_sim=False, observer=observer)
    return state.incumbent.copy(), state


def run_s_hci_gibo(evaluator: Evaluator, config: OptimizerConfig, theta0, observer=None) -> tuple[np.ndarray, OptimizerState]:
    """Two-source variant: drain the simulator before spending real queries.

    Each phase starts on the simulator and moves to the real source once
    the utility decrement between consecutive sim queries falls to beta;
    commitment is always judged for the belief at the real source.
    """
    if not isinstance(config.kernel, DualKernelSpec):
        raise ConfigurationError("the two-source variant needs a dual kernel")
    if not evaluator.has_sim:
        raise ConfigurationError("the two-source variant needs an evaluator with a simulator probe")
    state, rng = _start(evaluator, config, theta0, observer)
    while not terminate(state, config):
        _run_phase(evaluator, state, config, rng, start_with_sim=True, observer=observer)
    return state.incumbent.copy(), state
