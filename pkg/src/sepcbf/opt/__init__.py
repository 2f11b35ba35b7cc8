"""Optimization layer: dense QP solver, CBF-QP assembly and the max-margin plane."""

from .cbfqp import VIRTUAL_WEIGHT, ClassKappa, FilterResult, QpLayout, assemble_cbf_qp, safety_filter
from .margin import MarginResult, SeparationFailure, max_margin_hyperplane
from .qp import QpInfeasible, QpProblem, QpSolution, kkt_residual, solve_qp

__all__ = [
    "VIRTUAL_WEIGHT",
    "ClassKappa",
    "FilterResult",
    "MarginResult",
    "QpInfeasible",
    "QpLayout",
    "QpProblem",
    "QpSolution",
    "SeparationFailure",
    "assemble_cbf_qp",
    "kkt_residual",
    "max_margin_hyperplane",
    "safety_filter",
    "solve_qp",
]
