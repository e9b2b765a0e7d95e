"""Descent methods for the preconditioned l1 objective and the end-to-end driver."""

from .driver import METHODS, SolveConfig, SolveReport, solve_l1
from .homotopy import HomotopyResult, HomotopySchedule, homotopy_solve
from .katyusha import KatyushaResult, katyusha_params, katyusha_quarter
from .sgd import SgdConfig, SgdResult, sgd_solve
from .smoothing import SmoothedObjective, huber_value_grad

__all__ = [
    "METHODS",
    "HomotopyResult",
    "HomotopySchedule",
    "KatyushaResult",
    "SgdConfig",
    "SgdResult",
    "SmoothedObjective",
    "SolveConfig",
    "SolveReport",
    "homotopy_solve",
    "huber_value_grad",
    "katyusha_params",
    "katyusha_quarter",
    "sgd_solve",
    "solve_l1",
]
