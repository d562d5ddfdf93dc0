"""Exception types shared across the package.

Every error that a caller is expected to branch on gets its own class;
plain precondition violations raise ValueError.
"""


class ChiralEdgeError(Exception):
    """Base class for all package-specific errors."""


class ShapeMismatch(ChiralEdgeError):
    """A matrix does not have the required dimensions."""


class RangeZero(ChiralEdgeError):
    """Hopping range must be a positive integer."""


class ZeroMomentum(ChiralEdgeError):
    """Exponentiated momentum must be nonzero."""


class NotSelfAdjoint(ChiralEdgeError):
    """Operation requires a self-adjoint model."""


class NotChiral(ChiralEdgeError):
    """Model does not anticommute with the supplied grading."""


class UnbalancedGrading(ChiralEdgeError):
    """Graded components have unequal dimension; square off-diagonal block unavailable."""


class UnbalancedGradingWarning(UserWarning):
    """Grading accepted but unbalanced; winding and edge-index operations will refuse it."""


class SingularLeadingHop(ChiralEdgeError):
    """A_R is numerically singular; the companion-matrix route is unavailable."""


class SingularRightHop(ChiralEdgeError):
    """B_R is numerically singular; leftward propagation is unavailable."""


class BorderlineEigenvalue(ChiralEdgeError):
    """An eigenvalue sits inside the unit-circle tolerance band; clean splitting refused."""


class ZeroMode(ChiralEdgeError):
    """All window entries are numerically zero; no decay rate can be fitted."""


class TooFewCells(ChiralEdgeError):
    """Half-space truncation needs at least 4R unit cells."""


class GapNotCertified(ChiralEdgeError):
    """A spectral gap required by the operation could not be certified."""


class AmbiguousKernel(ChiralEdgeError):
    """Singular values fall inside the undecidable band; increase the truncation size."""


class NonConvergent(ChiralEdgeError):
    """Adaptive refinement hit its sample cap without meeting its target."""


class CertificateFailed(ChiralEdgeError):
    """A homotopy-stage invertibility certificate fell below threshold after refinement."""


class SpectrumOnCriticalLine(ChiralEdgeError):
    """Spectrum of the loop coefficient touches Re = 1/2; upstream numerics are suspect."""


class ExhaustedRedraws(ChiralEdgeError):
    """Random ensemble could not reach the requested gap floor within the redraw budget."""


class ParseError(ChiralEdgeError):
    """A model or family file is malformed."""
