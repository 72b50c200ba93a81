"""Local Bayesian optimization driven by gradient information.

The library estimates objective gradients with a derivative Gaussian
process, queries new evaluations where they are most informative about
the gradient at the current incumbent, and commits to a policy update
only once the update is likely to improve the objective. A second,
cheaper information source (a biased simulator) can be exhausted before
spending evaluations on the expensive real objective.
"""

__version__ = "0.1.0"

from .errors import ConfigurationError, NumericalError
from .kernels import KernelSpec, DualKernelSpec, SIM, REAL
from .gp import LabeledSample, Dataset, GradientBelief, posterior_zeroth, posterior_gradient
from .improvement import ImprovementConfig, gauss_cdf, improvement_confidence, commit, update_step
from .acquisition import QueryDomain, AcquisitionResult, gi_value, optimize_query, sim_to_real_gap
from .optimizer import (
    Evaluator,
    FunctionEvaluator,
    OptimizerConfig,
    OptimizerState,
    UpdateRecord,
    run_gibo,
    run_hci_gibo,
    run_s_hci_gibo,
    terminate,
)
from .synth import (
    SolutionAccuracy,
    WithinModelObjective,
    benchmark_lengthscale,
    default_benchmark_kernel,
    load_objective,
    make_within_model,
    save_objective,
    sobol_points,
    solution_accuracy,
    toy_pair,
)

__all__ = [
    "ConfigurationError",
    "NumericalError",
    "KernelSpec",
    "DualKernelSpec",
    "SIM",
    "REAL",
    "LabeledSample",
    "Dataset",
    "GradientBelief",
    "posterior_zeroth",
    "posterior_gradient",
    "ImprovementConfig",
    "gauss_cdf",
    "improvement_confidence",
    "commit",
    "update_step",
    "QueryDomain",
    "AcquisitionResult",
    "gi_value",
    "optimize_query",
    "sim_to_real_gap",
    "Evaluator",
    "FunctionEvaluator",
    "OptimizerConfig",
    "OptimizerState",
    "UpdateRecord",
    "run_gibo",
    "run_hci_gibo",
    "run_s_hci_gibo",
    "terminate",
    "SolutionAccuracy",
    "WithinModelObjective",
    "benchmark_lengthscale",
    "default_benchmark_kernel",
    "load_objective",
    "make_within_model",
    "save_objective",
    "sobol_points",
    "solution_accuracy",
    "toy_pair",
]
