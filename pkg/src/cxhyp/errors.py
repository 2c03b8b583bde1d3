"""Exception types shared across the package."""


class CxhypError(Exception):
    """Base class for all package errors."""


class DimensionError(CxhypError):
    """Vector or matrix has the wrong shape for the ambient form."""


class ZeroVectorError(CxhypError):
    """An operation that needs a nonzero vector received (numerically) zero."""


class OutsideDomainError(CxhypError):
    """Point does not satisfy the closed Siegel domain inequality."""


class NotInGroupError(CxhypError):
    """Matrix fails the form-preservation or unit-determinant test."""

    def __init__(self, message, form_residual=None, det_residual=None):
        super().__init__(message)
        self.form_residual = form_residual
        self.det_residual = det_residual


class DegenerateFrameError(CxhypError):
    """Frame completion failed: orthogonal complement is not 1-dimensional
    or no unit-norm scaling exists."""


class GramSchmidtError(CxhypError):
    """Indefinite Gram-Schmidt broke down and the retry bound was exhausted."""


class DegenerateConfigurationError(CxhypError):
    """A boundary configuration made a required Hermitian product vanish."""

    def __init__(self, message, which=None):
        super().__init__(message)
        self.which = which


class NotFullRankError(CxhypError):
    """Tuple lifts do not span the full space; the constructive congruence
    needs n+1 projectively independent lifts."""


class NotLoxodromicError(CxhypError):
    """Operation requires a loxodromic element."""


class MarginalClassificationError(CxhypError):
    """Largest eigenvalue modulus sits on the loxodromic decision boundary."""

    def __init__(self, message, max_modulus=None):
        super().__init__(message)
        self.max_modulus = max_modulus


class ClusterAmbiguityError(CxhypError):
    """Two unit-circle eigenvalue clusters are closer than the merge
    threshold but were not merged."""


class InconsistentRegularityError(CxhypError):
    """Resultant-sign test and eigenvalue-gap oracle disagree."""


class InvalidPairError(CxhypError):
    """The two elements do not form a valid pair (common fixed point, etc.)."""


class NormalizationError(CxhypError):
    """A required cross-frame Hermitian product vanishes, so the requested
    normalization convention cannot be applied."""


class CollisionError(CxhypError):
    """Eigenpoint collision could not be resolved within the retry budget."""
