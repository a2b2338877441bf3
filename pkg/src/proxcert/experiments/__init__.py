from .mpc import (
    MpcSpec,
    StateSpaceModel,
    build_prediction_matrices,
    condensed_lipschitz,
    mpc_closed_loop,
    mpc_to_lasso,
    rollout_objective,
    spacecraft_model,
    spacecraft_mpc,
)
from .lasso import LassoInstance, gen_lasso, lasso_problem
from .diagnostics import (
    DiagnosticReport,
    azuma_coverage,
    hoeffding_coverage,
    martingale_diagnostic,
)

__all__ = [
    "MpcSpec",
    "StateSpaceModel",
    "build_prediction_matrices",
    "condensed_lipschitz",
    "mpc_closed_loop",
    "mpc_to_lasso",
    "rollout_objective",
    "spacecraft_model",
    "spacecraft_mpc",
    "LassoInstance",
    "gen_lasso",
    "lasso_problem",
    "DiagnosticReport",
    "azuma_coverage",
    "hoeffding_coverage",
    "martingale_diagnostic",
]
