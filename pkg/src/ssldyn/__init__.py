"""Numerical laboratory for the training dynamics of linear self-supervised
learners: stop-gradient and EMA procedures, the gradient flow they replace,
their equilibria, stability spectra, conservation laws, and Monte-Carlo
convergence statistics."""

from .analysis import (
    EmpiricalDecay,
    NotEquilibriumError,
    StabilityReport,
    balance_residual,
    collapse_bound_check,
    empirical_stability_probe,
    integrability_defect,
    linearize,
)
from .dynamics import (
    AlgoKind,
    DiagRecord,
    Trajectory,
    flow_rhs,
    flow_rhs_norm,
    integrate_flow,
    read_trajectory_csv,
    run_discrete,
    step_discrete,
    write_trajectory_csv,
)
from .equilibria import (
    EquilibriumSet,
    Limit,
    ScalarMoments,
    classify_limit,
    critical_coincidence,
    materialize_equilibrium,
    solve_equilibria,
)
from .gradients import (
    GradPair,
    InconsistentMomentsError,
    eval_objectives,
    grad_E,
    grad_P,
    grad_Q,
    residual_R,
)
from .model import (
    AlphaSchedule,
    ConstantAlpha,
    DataMoments,
    Dims,
    HyperParams,
    LinearRampAlpha,
    ModelState,
    load_sample_pairs_csv,
    moments_from_samples,
    random_state,
    spawn_rng,
)
from .montecarlo import AlgoStats, TrialConfig, TrialStats, run_monte_carlo, run_scalar_flow

__version__ = "0.1.0"

__all__ = [
    "AlgoKind",
    "AlgoStats",
    "AlphaSchedule",
    "ConstantAlpha",
    "DataMoments",
    "DiagRecord",
    "Dims",
    "EmpiricalDecay",
    "EquilibriumSet",
    "GradPair",
    "HyperParams",
    "InconsistentMomentsError",
    "Limit",
    "LinearRampAlpha",
    "ModelState",
    "NotEquilibriumError",
    "ScalarMoments",
    "StabilityReport",
    "Trajectory",
    "TrialConfig",
    "TrialStats",
    "balance_residual",
    "classify_limit",
    "collapse_bound_check",
    "critical_coincidence",
    "empirical_stability_probe",
    "eval_objectives",
    "flow_rhs",
    "flow_rhs_norm",
    "grad_E",
    "grad_P",
    "grad_Q",
    "integrability_defect",
    "integrate_flow",
    "linearize",
    "load_sample_pairs_csv",
    "materialize_equilibrium",
    "moments_from_samples",
    "random_state",
    "read_trajectory_csv",
    "residual_R",
    "run_discrete",
    "run_monte_carlo",
    "run_scalar_flow",
    "solve_equilibria",
    "spawn_rng",
    "step_discrete",
    "write_trajectory_csv",
]
