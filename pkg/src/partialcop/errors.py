"""Exception hierarchy shared by all modules."""


class PartialCopError(Exception):
    """Base class for all library errors."""


class ParameterOutOfRange(PartialCopError):
    """A copula family parameter violates its admissible range."""


class EvaluationAtBoundary(PartialCopError):
    """Density or h-function evaluated at an argument where it is undefined."""


class UnsupportedFamily(PartialCopError):
    """The requested operation is not defined for this copula family."""


class RootNotBracketed(PartialCopError):
    """Internal inversion failure; must not occur for valid inputs."""


class NonpositiveDensity(PartialCopError):
    """A candidate density underflowed or was nonpositive at a quadrature node."""


class DensityUnavailable(PartialCopError):
    """The copula has no density (or only a cdf handle is available)."""


class NonConvergent(PartialCopError):
    """A limit extrapolation failed to stabilize within its tolerance."""


class SingularDesign(PartialCopError):
    """The regression design matrix is rank deficient."""


class DegenerateResiduals(PartialCopError):
    """A residual vector has zero variance; correlation is undefined."""


class OptimizerDiverged(PartialCopError):
    """A likelihood optimizer failed to converge."""
