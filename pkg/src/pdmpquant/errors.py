class PdmpError(Exception):
    """Base class for package errors."""


class ConfigError(PdmpError, ValueError):
    """Invalid configuration, parameters or missing metadata."""


class DomainError(PdmpError, ValueError):
    """A point or time outside the domain where an operation is defined."""


class NumericError(PdmpError, ArithmeticError):
    """A numerical procedure (root-find, quadrature) failed to converge."""


class ModelMismatchError(PdmpError):
    """A grid or functional was built for a different model."""


class QuantizationError(PdmpError):
    """Grid cannot serve a query, e.g. a mode with no node at some step."""
