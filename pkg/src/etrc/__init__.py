"""Robust LQR synthesis and event-triggered control of uncertain linear systems."""

from ._backend import BACKEND
from .errors import EtrcError
from .iet_bounds import dynamic_tau, static_tau
from .riccati import solve_care, synthesize_matched, synthesize_unmatched
from .scenario import PRESETS, load_scenario, parse_scenario, serialize_scenario
from .simulator import ScenarioRun, SimTrace, lyapunov_diagnostics, metrics, simulate
from .triggering import TriggerRule
from .uncertainty import UncertainPlant, bound_matrices

__version__ = "0.1.0"
