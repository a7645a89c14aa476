"""Exception types shared across the package."""


class QuadfcError(Exception):
    """Base class for all package errors."""


class DomainError(QuadfcError, ValueError):
    """An argument lies outside the operation's mathematical domain."""


class GimbalLockError(QuadfcError):
    """Euler kinematics evaluated too close to pitch = +/-90 deg."""


class SynthesisError(QuadfcError):
    """Controller gain synthesis failed (Riccati iteration did not converge)."""


class QpSolverError(QuadfcError):
    """QP solver hit its iteration cap without a verdict (distinct from infeasible)."""


class TableMismatchError(QuadfcError):
    """Explicit-control table was generated from a different configuration."""


class FitError(QuadfcError, ValueError):
    """Least-squares fit is degenerate or unidentifiable."""


class DetectionError(QuadfcError):
    """No usable spectral peak found."""


class ConfigError(QuadfcError, ValueError):
    """Malformed scenario or preset configuration."""
