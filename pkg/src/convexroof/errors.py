"""Exception types shared across the package."""


class ConvexRoofError(Exception):
    """Base class for all package-specific errors."""


class NotHermitianError(ConvexRoofError):
    """Matrix violates the Hermitian symmetry tolerance."""


class NoConvergenceError(ConvexRoofError):
    """The eigensolver failed to converge."""


class RankDeficientError(ConvexRoofError):
    """Matrix is numerically rank deficient and cannot be projected."""


class NotDensityMatrixError(ConvexRoofError):
    """Input fails the density-matrix checks (Hermitian, PSD, unit trace)."""


class BadBipartitionError(ConvexRoofError):
    """Requested subsystem dimensions do not factor the Hilbert space."""


class RankMismatchError(ConvexRoofError):
    """Semi-unitary column count does not match the state rank."""


class BadDimensionsError(ConvexRoofError):
    """Vector length is incompatible with the requested reshape."""


class NotPSDError(ConvexRoofError):
    """Model parameters produce a matrix with a negative eigenvalue."""


class NonFiniteError(ConvexRoofError):
    """A function evaluation returned NaN or infinity."""
