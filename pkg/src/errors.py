"""
Exception types shared across the simulator and fit modules.

Author:
Nikki Hess (nkhess@umich.edu)
"""

class HRCError(Exception):
    """Base class for every error raised by this package."""

class ValidationError(HRCError, ValueError):
    """
    An argument or configuration value violates an invariant.

    :param message: human readable description
    :type message: str

    :param location: dotted location of the offending value, e.g. "cavity.L1"
    :type location: str | None
    """

    def __init__(self, message: str, location: str | None = None):
        self.location = location
        if location:
            message = f"{location}: {message}"
        super().__init__(message)

class NonPhysicalMirrorError(ValidationError):
    """Reflectivity and transmissivity add up to more than unity."""

class ConfigError(ValidationError):
    """Config file is empty, malformed, or has missing/unknown keys."""

class NumericalError(HRCError, ArithmeticError):
    """A computation could not produce a finite answer."""

class SingularMatrixError(NumericalError):
    """
    Raised when a 2x2 matrix is too close to singular to invert.

    :param determinant: the magnitude of the offending determinant
    :type determinant: float
    """

    def __init__(self, determinant: float):
        self.determinant = determinant
        super().__init__(f"matrix is singular (|det| = {determinant:.3e})")

class NoSplitResonanceError(NumericalError):
    """The resonance condition has no real solution for this configuration."""

class FitError(NumericalError):
    """
    A fit failed. The partial result, if any, is attached as diagnostics.
    """

    def __init__(self, message: str, result=None):
        self.result = result
        super().__init__(message)

class DegenerateFitError(FitError):
    """The data does not support the requested model (e.g. one peak instead of two)."""
