"""Configuration-avoiding Cantor-type sets in rings of integers of local fields."""

from .errors import (
    DerivativeVanishes,
    FieldSpecError,
    HenselError,
    IndeterminateAtPrecision,
    InfeasibleParameters,
    LocalAvoidError,
    PrecisionExhausted,
    SpecMismatchError,
)
from .field import (
    Ball,
    Element,
    FieldSpec,
    abs_value,
    ball_contains,
    ball_of,
    hensel_lift,
    make_field_spec,
    subdivide,
    valuation,
)

__version__ = "0.1.0"
