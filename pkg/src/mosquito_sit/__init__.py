"""Sterile insect technique models: ODE life cycle, reaction-diffusion SIT and backstepping releases."""

from .config import SimConfig, load, preset
from .control import ControlEvalContext, feedback_u
from .ode import equilibria, integrate, life_cycle_rhs, sit_rhs
from .params import BioParams, ControlParams, derived_rates
from .pde import GridSpec, KFieldParams, PdeState
from .simulation import RunReport, run

__all__ = [
    "BioParams",
    "ControlEvalContext",
    "ControlParams",
    "GridSpec",
    "KFieldParams",
    "PdeState",
    "RunReport",
    "SimConfig",
    "derived_rates",
    "equilibria",
    "feedback_u",
    "integrate",
    "life_cycle_rhs",
    "load",
    "preset",
    "run",
    "sit_rhs",
]
