"""Randomized Kaczmarz, two-subspace Kaczmarz and the two inertial variants."""
from .run import CHUNK, RunTrace, StopRule, run
from .steps import (
    EPS_PARALLEL,
    SolverKind,
    SolverState,
    StepDiagnostics,
    airk_coefficient,
    airk_step,
    mirk_compact_update,
    mirk_step,
    require_standardized,
    rk_step,
    tsk_step,
)

__all__ = [
    "CHUNK", "EPS_PARALLEL", "RunTrace", "SolverKind", "SolverState", "StepDiagnostics", "StopRule",
    "airk_coefficient", "airk_step", "mirk_compact_update", "mirk_step", "require_standardized",
    "rk_step", "run", "tsk_step",
]
