"""Exception taxonomy shared across the package.

Every error raised on purpose derives from PatchIQError so callers (and the
CLI exit-code mapping) can distinguish our failures from genuine bugs.
"""


class PatchIQError(Exception):
    """Base class for all intentional package errors."""


class DimensionError(PatchIQError, ValueError):
    """Operand shapes are incompatible for the requested operation."""


class AxisError(PatchIQError, IndexError):
    """An axis argument is out of range for the operand's rank."""


class ParameterError(PatchIQError, ValueError):
    """A numeric hyperparameter is outside its legal range."""


class GraphError(PatchIQError, RuntimeError):
    """The autodiff graph contract was violated (e.g. non-scalar loss)."""


class NumericError(PatchIQError, ArithmeticError):
    """A non-finite value appeared where finiteness is required."""


class ConfigError(PatchIQError, ValueError):
    """A configuration document or value is invalid."""


class DataError(PatchIQError, ValueError):
    """A manifest, image file, or dataset spec failed to parse or validate."""


class EmptyInputError(PatchIQError, ValueError):
    """An operation received an empty input where at least one element is required."""


class UndefinedCorrelationError(PatchIQError, ValueError):
    """A correlation is undefined (constant sequence); never silently reported as 0."""


class GradientCheckError(PatchIQError, AssertionError):
    """A finite-difference comparison exceeded its tolerance."""
