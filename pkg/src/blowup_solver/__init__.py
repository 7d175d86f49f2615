"""Blow-up points of ODE Cauchy problems via singularity-free transforms."""

__version__ = "0.1.0"

from blowup_solver.core.blowup import (  # noqa: E402
    BlowupEstimate,
    characterize,
    estimate_x_star,
    fit_power_law,
)
from blowup_solver.core.codes import (  # noqa: E402
    EstimateMethod,
    ExitCode,
    GKind,
    RatioTrend,
    TerminationReason,
    TransformKind,
    translate_code,
)
from blowup_solver.core.errors import BlowupError  # noqa: E402
from blowup_solver.core.expr import differentiate, evaluate, parse, to_string  # noqa: E402
from blowup_solver.core.odecore import (  # noqa: E402
    OdeSystem,
    StopRule,
    Trajectory,
    integrate,
    rk4_step,
)
from blowup_solver.core.problems import (  # noqa: E402
    TestProblem,
    exact_transformed_state,
    get_problem,
)
from blowup_solver.core.transforms import (  # noqa: E402
    CauchyProblem,
    GChoice,
    ProbeGrid,
    TransformedSystem,
    check_g_admissibility,
    differential_transform_1,
    differential_transform_2,
    nonlocal_transform_1,
    nonlocal_transform_2,
)

__all__ = [
    "BlowupError",
    "BlowupEstimate",
    "CauchyProblem",
    "EstimateMethod",
    "ExitCode",
    "GChoice",
    "GKind",
    "OdeSystem",
    "ProbeGrid",
    "RatioTrend",
    "StopRule",
    "TerminationReason",
    "TestProblem",
    "Trajectory",
    "TransformKind",
    "TransformedSystem",
    "characterize",
    "check_g_admissibility",
    "differential_transform_1",
    "differential_transform_2",
    "differentiate",
    "estimate_x_star",
    "evaluate",
    "exact_transformed_state",
    "fit_power_law",
    "get_problem",
    "integrate",
    "nonlocal_transform_1",
    "nonlocal_transform_2",
    "parse",
    "rk4_step",
    "to_string",
    "translate_code",
]
