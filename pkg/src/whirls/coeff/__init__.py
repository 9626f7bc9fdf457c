from .coefficient import (Coefficient, CoefficientError, DeltaDecision, Discriminant, ValidityBox,
                          constant, discriminant, eval_with_partials, from_config, from_expr,
                          p_growth, power_law, zero_discriminant_pair)
from .dual import DomainError, Dual3
from .expr import ExprSyntaxError, evaluate, parse_expr, unparse

__all__ = [
    "Coefficient", "CoefficientError", "DeltaDecision", "Discriminant", "DomainError", "Dual3",
    "ExprSyntaxError", "ValidityBox", "constant", "discriminant", "eval_with_partials", "evaluate",
    "from_config", "from_expr", "p_growth", "parse_expr", "power_law", "unparse",
    "zero_discriminant_pair",
]
