"""Exception types shared across the package."""


class SupportShapeError(Exception):
    """Base class for all package errors."""


class InvalidArgument(SupportShapeError):
    """An argument is outside its documented range."""


class PoleEvaluation(SupportShapeError):
    """A spherical quantity with a 1/sin(psi) factor was requested inside the pole band."""


class NonConvexSample(SupportShapeError):
    """A surface Jacobian sample came out negative beyond tolerance."""


class SingularPoint(SupportShapeError):
    """Fundamental solution requested at (numerically) zero distance."""


class RankDeficiency(SupportShapeError):
    """The collocation matrix is numerically rank deficient."""


class DegenerateEigenvalue(SupportShapeError):
    """Shape-derivative density requested for a multiple eigenvalue."""


class MissedEigenvalue(SupportShapeError):
    """Eigenvalue count over a bracket disagrees with the Weyl estimate."""


class InfeasibleStart(SupportShapeError):
    """Solver start point violates linear constraints beyond recoverable slack."""


class AuditFailure(SupportShapeError):
    """Analytic gradient disagrees with finite differences beyond the audit tolerance."""


class UnknownProblem(SupportShapeError):
    """Problem name not in the catalog."""


class InvalidParams(SupportShapeError):
    """Problem parameters inconsistent with the requested problem."""
