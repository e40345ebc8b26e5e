from .gcd import BothZeroError, gcd_poly
from .parse import NonPolynomialError, ParseError, parse_poly
from .poly import (
    DivisionNotExact,
    Poly2,
    content,
    diff_poly,
    divides,
    eval_poly,
    exact_div,
    normalize,
    to_text,
)

__all__ = [
    "BothZeroError",
    "DivisionNotExact",
    "NonPolynomialError",
    "ParseError",
    "Poly2",
    "content",
    "diff_poly",
    "divides",
    "eval_poly",
    "exact_div",
    "gcd_poly",
    "normalize",
    "parse_poly",
    "to_text",
]
