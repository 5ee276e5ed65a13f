"""Exception hierarchy shared by every module of the package."""


class LocalAvoidError(Exception):
    """Base class for all package errors."""


class FieldSpecError(LocalAvoidError, ValueError):
    """Invalid local-field description (non-prime p, reducible residue
    polynomial, non-Eisenstein coefficients, ...)."""


class SpecMismatchError(LocalAvoidError, ValueError):
    """Arithmetic between elements of different fields."""


class PrecisionExhausted(LocalAvoidError):
    """A result would need more uniformizer digits than the field carries."""


class HenselError(LocalAvoidError):
    """Hensel's hypothesis could not be certified, or iteration did not converge."""


class InfeasibleParameters(LocalAvoidError, ValueError):
    """Scale parameters violate a precondition of an avoidance step."""


class DerivativeVanishes(InfeasibleParameters):
    """A derivative lower bound could not be certified on the given balls."""


class IndeterminateAtPrecision(LocalAvoidError):
    """A quantity is zero to all carried digits, so its valuation is unknown."""
