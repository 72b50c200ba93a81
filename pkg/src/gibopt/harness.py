"""Seeded batch execution of benchmark suites with CSV and JSON artifacts.

A JSON config names a suite, a set of optimizers, and seeds; the harness
expands that into independent runs, executes them (optionally in a
process pool), and writes three files into the output directory:

* results.csv - one row per evaluation event across all runs
* summary.json - solution-accuracy curves aggregated per optimizer/dim
* manifest.json - config echo and library version for exact reruns

All outputs are byte-deterministic for a given config, independent of
the worker count: rows are buffered per run and written in run_id order,
and floats are serialized with their shortest round-trip representation.
"""

from __future__ import annotations

import csv
import json
import os

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from .acquisition import QueryDomain
from .errors import ConfigurationError
from .improvement import ImprovementConfig
from .kernels import DualKernelSpec, KernelSpec
from .optimizer import FunctionEvaluator, OptimizerConfig, run_gibo, run_hci_gibo, run_s_hci_gibo
from .pendulum import DmpPolicy, PendulumParams, divergence_penalty, make_evaluator, perturbed_params, run_episode
from .synth import benchmark_lengthscale, make_within_model, sobol_points, solution_accuracy, toy_pair

SUITES = ("within_model", "toy1d", "pendulum")
OPTIMIZERS = ("gibo", "hci_gibo", "s_hci_gibo")

CSV_HEADER = (
    "run_id,suite,optimizer,dim,function_seed,run_seed,real_queries,sim_queries,"
    "update_index,incumbent_value,solution_accuracy,committed_confidence"
)

PENDULUM_DIMENSION = 24

# Observation noise streams must not collide with the optimizer's own
# candidate-start streams, which are seeded with the plain run seed.
_EVALUATOR_SEED_OFFSET = 10_000

# Fraction of the objective scale given to the simulator gap model when a
# suite does not define its own (the pendulum's parameter perturbation).
_PENDULUM_GAP_FRACTION = 0.2

# The 1-D toy pair carries a fixed additive simulator offset of 0.4.
_TOY_GAP_AMPLITUDE = 0.4

# Sentinel for "the config explicitly asked for an unbounded domain", as
# opposed to None meaning "not configured, use the suite default".
NO_BOUNDS = ()


def _fail(path: str, detail: str):
    raise ConfigurationError(f"{path} {detail}")


def _as_bool(value, path: str) -> bool:
    if not isinstance(value, bool):
        _fail(path, f"must be a boolean, got {value!r}")
    return value


def _as_int(value, path: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(path, f"must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        _fail(path, f"must be at least {minimum}, got {value}")
    return value


def _as_float(value, path: str, minimum: float | None = None, positive: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, f"must be a number, got {value!r}")
    value = float(value)
    if positive and value <= 0:
        _fail(path, f"must be positive, got {value}")
    if minimum is not None and value < minimum:
        _fail(path, f"must be at least {minimum}, got {value}")
    return value


def _as_unit_open(value, path: str) -> float:
    value = _as_float(value, path)
    if not 0.0 < value < 1.0:
        _fail(path, f"must be within (0, 1), got {value}")
    return value


def _check_keys(payload: dict, allowed, path: str = "") -> None:
    for key in payload:
        if key not in allowed:
            prefix = f"{path}." if path else ""
            raise ConfigurationError(f"unknown key '{prefix}{key}'")


@dataclass(frozen=True)
class ImprovementOverrides:
    alpha: float | None = None
    step_eta: float | None = None
    lipschitz_L: float | None = None
    normalized: bool | None = None


@dataclass(frozen=True)
class KernelOverrides:
    outputscale: float | None = None
    lengthscales: float | tuple | None = None
    noise_variance: float | None = None


@dataclass(frozen=True)
class DomainOverrides:
    half_width: float | None = None
    # None = unset, NO_BOUNDS = explicitly unbounded, tuple = box
    bounds: tuple | None = None


@dataclass(frozen=True)
class PendulumOverrides:
    m: float | None = None
    l: float | None = None
    xi: float | None = None
    g: float | None = None
    origin: tuple | None = None
    literal_pole_coupling: bool | None = None
    track_tip: bool | None = None
    sim_m_scale: float | None = None
    sim_xi_scale: float | None = None
    sim_l_scale: float | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    suite: str
    optimizers: tuple
    seeds: tuple
    dims: tuple
    n_functions: int
    budget_real: int
    beta: float | None
    gap_amplitude: float
    noise_std: float | None
    fixed_M: int | None
    max_updates: int | None
    max_queries_per_update: int | None
    improvement: ImprovementOverrides
    kernel: KernelOverrides
    domain: DomainOverrides
    pendulum: PendulumOverrides


@dataclass(frozen=True)
class PlannedRun:
    run_id: str
    suite: str
    optimizer: str
    dim: int
    function_seed: int
    run_seed: int


@dataclass(frozen=True)
class RunSettings:
    """Fully resolved knobs for one suite at one dimension."""

    alpha: float
    step_eta: float
    lipschitz_L: float
    normalized: bool
    beta: float
    noise_std: float
    outputscale: float
    lengthscales: tuple
    noise_variance: float
    half_width: float
    bounds: tuple | None
    fixed_M: int
    max_updates: int | None
    max_queries_per_update: int | None
    start: tuple


_TOP_KEYS = (
    "suite",
    "optimizers",
    "seeds",
    "dims",
    "n_functions",
    "budget_real",
    "beta",
    "gap_amplitude",
    "noise_std",
    "fixed_M",
    "max_updates",
    "max_queries_per_update",
    "improvement",
    "kernel",
    "domain",
    "pendulum",
)


def _parse_improvement(payload) -> ImprovementOverrides:
    if not isinstance(payload, dict):
        _fail("improvement", "must be an object")
    _check_keys(payload, ("alpha", "step_eta", "lipschitz_L", "normalized"), "improvement")
    out = ImprovementOverrides(
        alpha=_as_unit_open(payload["alpha"], "improvement.alpha") if "alpha" in payload else None,
        step_eta=_as_float(payload["step_eta"], "improvement.step_eta", positive=True)
        if "step_eta" in payload
        else None,
        lipschitz_L=_as_float(payload["lipschitz_L"], "improvement.lipschitz_L", positive=True)
        if "lipschitz_L" in payload
        else None,
        normalized=_as_bool(payload["normalized"], "improvement.normalized")
        if "normalized" in payload
        else None,
    )
    return out


def _parse_kernel(payload, suite: str, dims: tuple) -> KernelOverrides:
    if not isinstance(payload, dict):
        _fail("kernel", "must be an object")
    _check_keys(payload, ("outputscale", "lengthscales", "noise_variance"), "kernel")
    lengthscales = None
    if "lengthscales" in payload:
        raw = payload["lengthscales"]
        if isinstance(raw, list):
            if len(dims) > 1:
                _fail("kernel.lengthscales", "must be a scalar when several dims are configured")
            if len(raw) != dims[0]:
                _fail("kernel.lengthscales", f"needs {dims[0]} entries, got {len(raw)}")
            lengthscales = tuple(
                _as_float(v, f"kernel.lengthscales[{i}]", positive=True) for i, v in enumerate(raw)
            )
        else:
            lengthscales = _as_float(raw, "kernel.lengthscales", positive=True)
    return KernelOverrides(
        outputscale=_as_float(payload["outputscale"], "kernel.outputscale", positive=True)
        if "outputscale" in payload
        else None,
        lengthscales=lengthscales,
        noise_variance=_as_float(payload["noise_variance"], "kernel.noise_variance", minimum=0.0)
        if "noise_variance" in payload
        else None,
    )


def _parse_domain(payload) -> DomainOverrides:
    if not isinstance(payload, dict):
        _fail("domain", "must be an object")
    _check_keys(payload, ("half_width", "bounds"), "domain")
    bounds = None
    if "bounds" in payload:
        raw = payload["bounds"]
        if raw is None:
            bounds = NO_BOUNDS
        else:
            if not isinstance(raw, list) or len(raw) != 2:
                _fail("domain.bounds", "must be null or a [low, high] pair")
            low = _as_float(raw[0], "domain.bounds[0]")
            high = _as_float(raw[1], "domain.bounds[1]")
            if low >= high:
                _fail("domain.bounds", f"low must be below high, got [{low}, {high}]")
            bounds = (low, high)
    return DomainOverrides(
        half_width=_as_float(payload["half_width"], "domain.half_width", positive=True)
        if "half_width" in payload
        else None,
        bounds=bounds,
    )


def _parse_pendulum(payload) -> PendulumOverrides:
    if not isinstance(payload, dict):
        _fail("pendulum", "must be an object")
    keys = (
        "m",
        "l",
        "xi",
        "g",
        "origin",
        "literal_pole_coupling",
        "track_tip",
        "sim_m_scale",
        "sim_xi_scale",
        "sim_l_scale",
    )
    _check_keys(payload, keys, "pendulum")
    origin = None
    if "origin" in payload:
        raw = payload["origin"]
        if not isinstance(raw, list) or len(raw) != 2:
            _fail("pendulum.origin", "must be an [x, y] pair")
        origin = (_as_float(raw[0], "pendulum.origin[0]"), _as_float(raw[1], "pendulum.origin[1]"))

    def opt_float(key, **kw):
        return _as_float(payload[key], f"pendulum.{key}", **kw) if key in payload else None

    def opt_bool(key):
        return _as_bool(payload[key], f"pendulum.{key}") if key in payload else None

    return PendulumOverrides(
        m=opt_float("m", positive=True),
        l=opt_float("l", positive=True),
        xi=opt_float("xi", minimum=0.0),
        g=opt_float("g", minimum=0.0),
        origin=origin,
        literal_pole_coupling=opt_bool("literal_pole_coupling"),
        track_tip=opt_bool("track_tip"),
        sim_m_scale=opt_float("sim_m_scale", positive=True),
        sim_xi_scale=opt_float("sim_xi_scale", positive=True),
        sim_l_scale=opt_float("sim_l_scale", positive=True),
    )


def config_from_dict(payload) -> ExperimentConfig:
    """Validate a parsed JSON object and apply structural defaults."""
    if not isinstance(payload, dict):
        raise ConfigurationError("config must be a JSON object")
    _check_keys(payload, _TOP_KEYS)

    if "suite" not in payload:
        _fail("suite", "is required")
    suite = payload["suite"]
    if suite not in SUITES:
        _fail("suite", f"must be one of {list(SUITES)}, got {suite!r}")

    if "optimizers" not in payload or not isinstance(payload["optimizers"], list) or not payload["optimizers"]:
        _fail("optimizers", "must be a non-empty list")
    optimizers = []
    for name in payload["optimizers"]:
        if name not in OPTIMIZERS:
            _fail("optimizers", f"must contain only {list(OPTIMIZERS)}, got {name!r}")
        if name in optimizers:
            _fail("optimizers", f"lists {name!r} twice")
        optimizers.append(name)

    if "seeds" not in payload or not isinstance(payload["seeds"], list) or not payload["seeds"]:
        _fail("seeds", "must be a non-empty list")
    seeds = []
    for value in payload["seeds"]:
        seed = _as_int(value, "seeds", minimum=0)
        if seed in seeds:
            _fail("seeds", f"lists {seed} twice")
        seeds.append(seed)

    if suite == "within_model":
        dims_raw = payload.get("dims", [2])
        if not isinstance(dims_raw, list) or not dims_raw:
            _fail("dims", "must be a non-empty list")
        dims = []
        for value in dims_raw:
            dim = _as_int(value, "dims", minimum=1)
            if dim > 52:
                _fail("dims", f"must stay within 1..52, got {dim}")
            if dim in dims:
                _fail("dims", f"lists {dim} twice")
            dims.append(dim)
        n_functions = _as_int(payload.get("n_functions", 1), "n_functions", minimum=1)
    else:
        if "dims" in payload:
            _fail("dims", f"only applies to the within_model suite, not {suite!r}")
        if "n_functions" in payload:
            _fail("n_functions", f"only applies to the within_model suite, not {suite!r}")
        dims = [1] if suite == "toy1d" else [PENDULUM_DIMENSION]
        n_functions = 1

    if "gap_amplitude" in payload and suite != "within_model":
        _fail("gap_amplitude", f"only applies to the within_model suite, not {suite!r}")
    gap_amplitude = _as_float(payload.get("gap_amplitude", 0.2), "gap_amplitude", minimum=0.0)
    if suite == "within_model" and "s_hci_gibo" in optimizers and gap_amplitude == 0.0:
        _fail("gap_amplitude", "must be positive when s_hci_gibo is scheduled")

    if "pendulum" in payload and suite != "pendulum":
        _fail("pendulum", f"settings only apply to the pendulum suite, not {suite!r}")

    return ExperimentConfig(
        suite=suite,
        optimizers=tuple(optimizers),
        seeds=tuple(seeds),
        dims=tuple(dims),
        n_functions=n_functions,
        budget_real=_as_int(payload.get("budget_real", 200), "budget_real", minimum=1),
        beta=_as_float(payload["beta"], "beta", positive=True) if "beta" in payload else None,
        gap_amplitude=gap_amplitude,
        noise_std=_as_float(payload["noise_std"], "noise_std", minimum=0.0)
        if "noise_std" in payload
        else None,
        fixed_M=_as_int(payload["fixed_M"], "fixed_M", minimum=1) if "fixed_M" in payload else None,
        max_updates=_as_int(payload["max_updates"], "max_updates", minimum=1)
        if "max_updates" in payload
        else None,
        max_queries_per_update=_as_int(
            payload["max_queries_per_update"], "max_queries_per_update", minimum=1
        )
        if "max_queries_per_update" in payload
        else None,
        improvement=_parse_improvement(payload.get("improvement", {})),
        kernel=_parse_kernel(payload.get("kernel", {}), suite, tuple(dims)),
        domain=_parse_domain(payload.get("domain", {})),
        pendulum=_parse_pendulum(payload.get("pendulum", {})),
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file: {exc}") from None
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config is not valid JSON: {exc}") from None
    return config_from_dict(payload)


def config_to_json(config: ExperimentConfig) -> dict:
    """Echo a config as a JSON object that loads back to an equal config."""
    out = {
        "suite": config.suite,
        "optimizers": list(config.optimizers),
        "seeds": list(config.seeds),
        "budget_real": config.budget_real,
    }
    if config.suite == "within_model":
        out["dims"] = list(config.dims)
        out["n_functions"] = config.n_functions
        out["gap_amplitude"] = config.gap_amplitude
    if config.beta is not None:
        out["beta"] = config.beta
    if config.noise_std is not None:
        out["noise_std"] = config.noise_std
    if config.fixed_M is not None:
        out["fixed_M"] = config.fixed_M
    if config.max_updates is not None:
        out["max_updates"] = config.max_updates
    if config.max_queries_per_update is not None:
        out["max_queries_per_update"] = config.max_queries_per_update

    improvement = {
        key: getattr(config.improvement, key)
        for key in ("alpha", "step_eta", "lipschitz_L", "normalized")
        if getattr(config.improvement, key) is not None
    }
    if improvement:
        out["improvement"] = improvement

    kernel = {}
    if config.kernel.outputscale is not None:
        kernel["outputscale"] = config.kernel.outputscale
    if config.kernel.lengthscales is not None:
        raw = config.kernel.lengthscales
        kernel["lengthscales"] = list(raw) if isinstance(raw, tuple) else raw
    if config.kernel.noise_variance is not None:
        kernel["noise_variance"] = config.kernel.noise_variance
    if kernel:
        out["kernel"] = kernel

    domain = {}
    if config.domain.half_width is not None:
        domain["half_width"] = config.domain.half_width
    if config.domain.bounds is not None:
        domain["bounds"] = None if config.domain.bounds == NO_BOUNDS else list(config.domain.bounds)
    if domain:
        out["domain"] = domain

    pendulum = {}
    for key in (
        "m",
        "l",
        "xi",
        "g",
        "literal_pole_coupling",
        "track_tip",
        "sim_m_scale",
        "sim_xi_scale",
        "sim_l_scale",
    ):
        value = getattr(config.pendulum, key)
        if value is not None:
            pendulum[key] = value
    if config.pendulum.origin is not None:
        pendulum["origin"] = list(config.pendulum.origin)
    if pendulum:
        out["pendulum"] = pendulum
    return out


def _default_lipschitz(outputscale: float, lengthscales) -> float:
    mean_ls = float(np.mean(lengthscales))
    return 1.6 * float(np.sqrt(outputscale)) / mean_ls**2


def resolve_run_settings(config: ExperimentConfig, dim: int) -> RunSettings:
    """Apply suite defaults on top of any user overrides."""
    suite = config.suite
    if suite == "within_model":
        default_ls = float(benchmark_lengthscale(dim))
        defaults = {
            "alpha": 0.9,
            "step_eta": 0.2,
            "beta": 5.0,
            "noise_std": 0.1,
            "outputscale": 1.0,
            "lengthscales": (default_ls,) * dim,
            "noise_variance": 0.01,
            "bounds": (0.0, 1.0),
            "start": (0.5,) * dim,
        }
    elif suite == "toy1d":
        defaults = {
            "alpha": 0.9,
            "step_eta": 0.04,
            "beta": 5.0,
            "noise_std": 0.1,
            "outputscale": 1.0,
            "lengthscales": (0.1,),
            "noise_variance": 0.01,
            "bounds": (0.0, 1.0),
            "start": (0.6,),
        }
    else:
        defaults = {
            "alpha": 0.95,
            "step_eta": 0.2,
            "beta": 1.0,
            "noise_std": 0.06,
            "outputscale": 4.0,
            "lengthscales": (0.3,) * PENDULUM_DIMENSION,
            "noise_variance": 0.005,
            "bounds": None,
            "start": (0.0,) * PENDULUM_DIMENSION,
        }

    outputscale = (
        config.kernel.outputscale if config.kernel.outputscale is not None else defaults["outputscale"]
    )
    if config.kernel.lengthscales is None:
        lengthscales = defaults["lengthscales"]
    elif isinstance(config.kernel.lengthscales, tuple):
        lengthscales = config.kernel.lengthscales
    else:
        lengthscales = (config.kernel.lengthscales,) * dim
    noise_variance = (
        config.kernel.noise_variance
        if config.kernel.noise_variance is not None
        else defaults["noise_variance"]
    )

    if config.improvement.lipschitz_L is not None:
        lipschitz = config.improvement.lipschitz_L
    elif suite == "pendulum":
        lipschitz = 12.0
    else:
        lipschitz = _default_lipschitz(outputscale, lengthscales)

    if config.domain.bounds is None:
        bounds = defaults["bounds"]
    elif config.domain.bounds == NO_BOUNDS:
        bounds = None
    else:
        bounds = config.domain.bounds

    half_width = config.domain.half_width
    if half_width is None:
        half_width = 0.3 if suite in ("toy1d", "pendulum") else 3.0 * float(np.mean(lengthscales))

    return RunSettings(
        alpha=config.improvement.alpha if config.improvement.alpha is not None else defaults["alpha"],
        step_eta=config.improvement.step_eta
        if config.improvement.step_eta is not None
        else defaults["step_eta"],
        lipschitz_L=lipschitz,
        normalized=config.improvement.normalized if config.improvement.normalized is not None else True,
        beta=config.beta if config.beta is not None else defaults["beta"],
        noise_std=config.noise_std if config.noise_std is not None else defaults["noise_std"],
        outputscale=outputscale,
        lengthscales=lengthscales,
        noise_variance=noise_variance,
        half_width=half_width,
        bounds=bounds,
        fixed_M=config.fixed_M if config.fixed_M is not None else dim,
        max_updates=config.max_updates,
        max_queries_per_update=config.max_queries_per_update,
        start=defaults["start"],
    )


def plan_runs(config: ExperimentConfig) -> list:
    plans = []
    for optimizer in config.optimizers:
        for dim in config.dims:
            for function_seed in range(config.n_functions):
                for run_seed in config.seeds:
                    run_id = (
                        f"{config.suite}-{optimizer}-d{dim:02d}-f{function_seed:03d}-s{run_seed:04d}"
                    )
                    plans.append(
                        PlannedRun(
                            run_id=run_id,
                            suite=config.suite,
                            optimizer=optimizer,
                            dim=dim,
                            function_seed=function_seed,
                            run_seed=run_seed,
                        )
                    )
    return plans


def _scaled_gap_kernel(kernel_f: KernelSpec, amplitude: float) -> KernelSpec:
    return KernelSpec(
        outputscale=amplitude**2 * kernel_f.outputscale,
        lengthscales=kernel_f.lengthscales.copy(),
        noise_variance=0.0,
    )


def _build_problem(config: ExperimentConfig, plan: PlannedRun, settings: RunSettings):
    """Evaluator, optimizer kernel, and truth probes for one run."""
    kernel_f = KernelSpec(
        outputscale=settings.outputscale,
        lengthscales=np.asarray(settings.lengthscales, dtype=float),
        noise_variance=settings.noise_variance,
    )
    wants_sim = plan.optimizer == "s_hci_gibo"
    evaluator_seed = _EVALUATOR_SEED_OFFSET + plan.run_seed

    if plan.suite == "within_model":
        objective = make_within_model(
            plan.dim,
            function_seed=plan.function_seed,
            kernel_f=kernel_f,
            gap_amplitude=config.gap_amplitude,
        )
        evaluator = FunctionEvaluator(
            objective.f,
            objective.f_sim if wants_sim else None,
            noise_std=settings.noise_std,
            seed=evaluator_seed,
        )
        kernel = objective.dual_spec() if wants_sim else kernel_f

        def value_fn(theta):
            return float(objective.f(theta))

        def sa_fn(theta, _value):
            return solution_accuracy(objective, theta).value

        return evaluator, kernel, value_fn, sa_fn

    if plan.suite == "toy1d":
        f, f_sim = toy_pair()
        evaluator = FunctionEvaluator(
            f, f_sim if wants_sim else None, noise_std=settings.noise_std, seed=evaluator_seed
        )
        kernel = (
            DualKernelSpec(k_f=kernel_f, k_m=_scaled_gap_kernel(kernel_f, _TOY_GAP_AMPLITUDE))
            if wants_sim
            else kernel_f
        )
        grid = sobol_points(4096, 1)
        values = np.array([f(g) for g in grid])
        low, high = float(values.min()), float(values.max())

        def value_fn(theta):
            return float(f(theta))

        def sa_fn(_theta, value):
            return float(np.clip((value - low) / (high - low), 0.0, 1.0))

        return evaluator, kernel, value_fn, sa_fn

    overrides = config.pendulum
    base = PendulumParams()
    params = PendulumParams(
        m=overrides.m if overrides.m is not None else base.m,
        l=overrides.l if overrides.l is not None else base.l,
        xi=overrides.xi if overrides.xi is not None else base.xi,
        g=overrides.g if overrides.g is not None else base.g,
        origin=overrides.origin if overrides.origin is not None else base.origin,
        literal_pole_coupling=overrides.literal_pole_coupling
        if overrides.literal_pole_coupling is not None
        else base.literal_pole_coupling,
    )
    track_tip = overrides.track_tip if overrides.track_tip is not None else True
    sim_params = None
    if wants_sim:
        scale_kw = {}
        if overrides.sim_m_scale is not None:
            scale_kw["m_scale"] = overrides.sim_m_scale
        if overrides.sim_xi_scale is not None:
            scale_kw["xi_scale"] = overrides.sim_xi_scale
        if overrides.sim_l_scale is not None:
            scale_kw["l_scale"] = overrides.sim_l_scale
        sim_params = perturbed_params(params, **scale_kw)
    evaluator = make_evaluator(
        real_params=params,
        sim_params=sim_params,
        noise_std=settings.noise_std,
        seed=evaluator_seed,
        track_tip=track_tip,
    )
    kernel = (
        DualKernelSpec(
            k_f=kernel_f,
            k_m=_scaled_gap_kernel(kernel_f, _PENDULUM_GAP_FRACTION),
            sim_noise_variance=settings.noise_variance,
        )
        if wants_sim
        else kernel_f
    )
    # The do-nothing policy's cost anchors the accuracy scale; by
    # construction the divergence penalty is three times that cost.
    zero_cost = divergence_penalty() / 3.0

    def value_fn(theta):
        episode = run_episode(DmpPolicy(weights=np.asarray(theta, dtype=float)), params, track_tip=track_tip)
        return -episode.cost

    def sa_fn(_theta, value):
        cost = -value
        return float(np.clip((zero_cost - cost) / zero_cost, 0.0, 1.0))

    return evaluator, kernel, value_fn, sa_fn


_RUNNERS = {"gibo": run_gibo, "hci_gibo": run_hci_gibo, "s_hci_gibo": run_s_hci_gibo}


def _execute_run(config: ExperimentConfig, plan: PlannedRun):
    settings = resolve_run_settings(config, plan.dim)
    evaluator, kernel, value_fn, sa_fn = _build_problem(config, plan, settings)
    start = np.asarray(settings.start, dtype=float)
    optimizer_config = OptimizerConfig(
        improvement=ImprovementConfig(
            lipschitz_L=settings.lipschitz_L,
            step_eta=settings.step_eta,
            alpha=settings.alpha,
            normalized=settings.normalized,
        ),
        kernel=kernel,
        domain=QueryDomain(center=start, half_width=settings.half_width, bounds=settings.bounds),
        budget_real=config.budget_real,
        beta=settings.beta,
        fixed_M=settings.fixed_M if plan.optimizer == "gibo" else None,
        max_queries_per_update=settings.max_queries_per_update,
        max_updates=settings.max_updates,
        seed=plan.run_seed,
    )

    rows = []
    cache = {"theta": None, "value": None, "sa": None}

    def observe(event):
        if cache["theta"] is None or not np.array_equal(event.incumbent, cache["theta"]):
            value = value_fn(event.incumbent)
            cache["theta"] = event.incumbent.copy()
            cache["value"] = value
            cache["sa"] = sa_fn(event.incumbent, value)
        rows.append(
            (
                event.queries_real,
                event.queries_sim,
                event.update_index,
                cache["value"],
                cache["sa"],
                event.confidence,
            )
        )

    runner = _RUNNERS[plan.optimizer]
    runner(evaluator, optimizer_config, start, observer=observe)
    return plan.run_id, rows


def _aligned_curves(plans_by_id: dict, results: dict, budget: int) -> dict:
    """Solution-accuracy step curves averaged per (optimizer, dim)."""
    groups = {}
    for run_id, rows in results.items():
        plan = plans_by_id[run_id]
        groups.setdefault((plan.optimizer, plan.dim), []).append(rows)
    curves = {}
    for (optimizer, dim), row_lists in sorted(groups.items()):
        aligned = np.empty((len(row_lists), budget))
        for i, rows in enumerate(row_lists):
            level = rows[0][4]
            grid = np.empty(budget)
            # SA is a step function between evaluations: carry the last
            # value whose cumulative real-query count fits the grid point
            pointer = 0
            for q in range(1, budget + 1):
                while pointer < len(rows) and rows[pointer][0] <= q:
                    level = rows[pointer][4]
                    pointer += 1
                grid[q - 1] = level
            aligned[i] = grid
        curves.setdefault(optimizer, {})[str(dim)] = {
            "real_queries": list(range(1, budget + 1)),
            "sa_mean": [float(v) for v in aligned.mean(axis=0)],
            "sa_std": [float(v) for v in aligned.std(axis=0)],
            "n_runs": len(row_lists),
        }
    return curves


def run_suite(config: ExperimentConfig, out_dir, jobs: int = 1) -> dict:
    """Execute every planned run and write the three artifact files."""
    if jobs < 1:
        raise ConfigurationError(f"jobs must be at least 1, got {jobs}")
    os.makedirs(out_dir, exist_ok=True)
    plans = plan_runs(config)
    plans_by_id = {p.run_id: p for p in plans}

    results = {}
    errors = []
    if jobs == 1:
        for plan in plans:
            try:
                run_id, rows = _execute_run(config, plan)
                results[run_id] = rows
            except Exception as exc:
                errors.append({"run_id": plan.run_id, "error": f"{type(exc).__name__}: {exc}"})
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {pool.submit(_execute_run, config, plan): plan for plan in plans}
            for future, plan in futures.items():
                try:
                    run_id, rows = future.result()
                    results[run_id] = rows
                except Exception as exc:
                    errors.append({"run_id": plan.run_id, "error": f"{type(exc).__name__}: {exc}"})
    errors.sort(key=lambda e: e["run_id"])
    if plans and not results:
        raise RuntimeError(f"all {len(plans)} runs failed; first error: {errors[0]['error']}")

    with open(os.path.join(str(out_dir), "results.csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER.split(","))
        for run_id in sorted(results):
            plan = plans_by_id[run_id]
            for real, sim, update, value, sa, confidence in results[run_id]:
                writer.writerow(
                    [
                        run_id,
                        plan.suite,
                        plan.optimizer,
                        plan.dim,
                        plan.function_seed,
                        plan.run_seed,
                        real,
                        sim,
                        update,
                        repr(float(value)),
                        repr(float(sa)),
                        repr(float(confidence)),
                    ]
                )

    summary = {
        "suite": config.suite,
        "budget_real": config.budget_real,
        "n_runs": len(plans),
        "n_failed": len(errors),
        "errors": errors,
        "curves": _aligned_curves(plans_by_id, results, config.budget_real),
    }
    with open(os.path.join(str(out_dir), "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")

    manifest = {
        "library_version": __version__,
        "suite": config.suite,
        "seeds": list(config.seeds),
        "config": config_to_json(config),
    }
    with open(os.path.join(str(out_dir), "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary
