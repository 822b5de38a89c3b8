"""State, delays, histories and the delayed right-hand side."""

from .delays import DelayMatrix
from .history import BallisticHistory, HermiteTable, HistoryBuffer, InitialHistory, SampledHistory
from .rhs import initial_history_max_speed, max_speed, mean_velocity
from .scenario import Scenario, build_scenario, rng_streams
from .state import AgentState, SystemState

__all__ = [
    "AgentState",
    "BallisticHistory",
    "DelayMatrix",
    "HermiteTable",
    "HistoryBuffer",
    "InitialHistory",
    "SampledHistory",
    "Scenario",
    "SystemState",
    "build_scenario",
    "initial_history_max_speed",
    "max_speed",
    "mean_velocity",
    "rng_streams",
]
