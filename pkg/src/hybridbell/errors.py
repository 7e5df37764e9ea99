"""Exception types shared across the package."""


class HybridBellError(Exception):
    """Base class for all package errors."""


class CutoffExceeded(HybridBellError, ValueError):
    """A Fock index lies outside the truncated space."""


class CutoffTooSmall(HybridBellError, ValueError):
    """The truncation discards more probability mass than allowed.

    ``required`` carries the smallest cutoff that would satisfy the
    tolerance when it can be determined.
    """

    def __init__(self, message, required=None, tail_mass=None):
        super().__init__(message)
        self.required = required
        self.tail_mass = tail_mass


class ShapeError(HybridBellError, ValueError):
    pass


class MatrixStructureMismatch(HybridBellError, ValueError):
    """Correlation matrix does not have the expected sparsity pattern."""


class NormalizationDrift(HybridBellError, RuntimeError):
    """Quadrature grid fails to reproduce the Wigner normalization."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NotSaturated(HybridBellError):
    pass


class AlwaysViolating(HybridBellError):
    pass


class SingularJacobian(HybridBellError, RuntimeError):
    pass


class ConfigError(HybridBellError, ValueError):
    pass


class DegenerateEigenspaceWarning(UserWarning):
    """Second and third eigenvalues of T^T T coincide; the optimal
    settings are not unique (any orthonormal choice is valid)."""


class QRangeBoundaryWarning(UserWarning):
    """The best pseudospin shift sits on the upper edge of the scanned range."""
