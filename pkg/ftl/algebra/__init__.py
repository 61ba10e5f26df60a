"""
Exact algebra for the finite-type lab.

Polynomials in (z, conj z), closed-form smooth expressions, Taylor jets,
complex vector fields and derivative lists.
"""

from .expr import (
    BumpPhi,
    Exp,
    JetArgs,
    Poly,
    Product,
    RecipSqrt,
    Scale,
    SmoothExpr,
    Sum,
    add,
    bump_derivative,
    derive,
    mul,
    reciprocal,
    scale,
)
from .fields import Field, apply_field, bracket, combine, pair_drho
from .jets import Jet, JetSpace, get_space
from .lists import ListSpec, enumerate_lists, list_apply, list_tensors, word_tensors
from .poly import CPoly, monomial

__all__ = [
    "BumpPhi",
    "CPoly",
    "Exp",
    "Field",
    "Jet",
    "JetArgs",
    "JetSpace",
    "ListSpec",
    "Poly",
    "Product",
    "RecipSqrt",
    "Scale",
    "SmoothExpr",
    "Sum",
    "add",
    "apply_field",
    "bracket",
    "bump_derivative",
    "combine",
    "derive",
    "enumerate_lists",
    "get_space",
    "list_apply",
    "list_tensors",
    "monomial",
    "mul",
    "pair_drho",
    "reciprocal",
    "scale",
    "word_tensors",
]
