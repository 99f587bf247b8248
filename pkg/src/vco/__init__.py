"""View-change-aware committee configuration for parallel BFT networks."""

from .benders import BendersCut, BendersState, Infeasible, IterationLimit, q_star, solve_normal_case, solve_vco
from .model import BackupPlan, Configuration, Instance, normal_objective, total_objective
from .oracle import oracle_solve_normal, oracle_solve_vco
from .sequencer import ViewState, init_view_state, on_leader_failure, replay_failure_schedule
from .sim import SimConfig, SimMetrics, run

__all__ = [
    "BackupPlan", "BendersCut", "BendersState", "Configuration", "Infeasible", "Instance", "IterationLimit",
    "SimConfig", "SimMetrics", "ViewState", "init_view_state", "normal_objective", "on_leader_failure",
    "oracle_solve_normal", "oracle_solve_vco", "q_star", "replay_failure_schedule", "run", "solve_normal_case",
    "solve_vco", "total_objective",
]
