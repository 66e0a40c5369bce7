"""Two-piece mollifier bounds for the proportion of critical-line zeros."""

from .functional import (
    C12Variant,
    ConfigError,
    DomainError,
    EvaluationError,
    Formula,
    FunctionalReport,
    MollifierConfig,
    ShiftedConstants,
    apply_q_operator,
    eval_c11,
    eval_c12,
    eval_c22,
    eval_c_shifted,
    eval_kappa_star,
    eval_total,
    kappa_from_c,
    q_operator_components,
)
from .poly_core import Jet2, JetPoly, Polynomial

__version__ = "0.1.0"
