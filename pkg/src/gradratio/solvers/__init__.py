"""Reconstruction algorithms."""

from .baselines import reconstruct_l1_minus_l2, reconstruct_lp, reconstruct_tv
from .cg import cg_solve
from .config import (ConvergenceTrace, Fidelity, SolverConfig, WlsWeights, system_operator,
                     wls_weights)
from .l1l2 import L1L2State, evaluate_lagrangian, reconstruct_l1l2
from .sart import reconstruct_sart

SOLVERS = {
    "l1l2": reconstruct_l1l2,
    "tv": reconstruct_tv,
    "lp": reconstruct_lp,
    "l1ml2": reconstruct_l1_minus_l2,
}

__all__ = [
    "ConvergenceTrace", "Fidelity", "L1L2State", "SOLVERS", "SolverConfig", "WlsWeights",
    "cg_solve", "evaluate_lagrangian", "reconstruct_l1_minus_l2", "reconstruct_l1l2",
    "reconstruct_lp", "reconstruct_sart", "reconstruct_tv", "system_operator", "wls_weights",
]
