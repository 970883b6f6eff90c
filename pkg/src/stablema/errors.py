"""Exception types shared across the package."""


class StablemaError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(StablemaError, ValueError):
    """A parameter point violates its family's domain constraints."""


class ModelError(StablemaError):
    """A model-level assumption fails (degenerate kernel, non-finite norm)."""


class NumericError(StablemaError):
    """A numerical routine failed to reach its certified accuracy."""
