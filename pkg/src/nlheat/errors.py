"""Exception types shared across the package."""

from __future__ import annotations


class InvalidExponentError(ValueError):
    """An L^p exponent outside the range a routine supports."""


class ZeroElementError(ValueError):
    """The duality pairing was requested at u = 0, where it is undefined."""


class DomainMismatchError(ValueError):
    """Two grid objects built over different Domain1D instances were mixed."""


class InvalidTimeError(ValueError):
    """A time argument outside the admissible range (t < 0, or t <= 0)."""


class NonlinearityEvaluationError(RuntimeError):
    """A reaction term produced a non-finite value.

    Carries the offending point as attributes ``t``, ``x``, ``v``.
    """

    def __init__(self, t: float, x: float, v: float):
        self.t = t
        self.x = x
        self.v = v
        super().__init__(
            f"reaction term returned a non-finite value at t={t!r}, x={x!r}, v={v!r}"
        )


class GridAlignmentError(ValueError):
    """A prescribed time point does not sit on the trajectory's time grid."""


class OracleSizeError(ValueError):
    """A dense oracle was asked to work above its size cap."""


class NotPeriodicError(ValueError):
    """A trajectory's endpoints differ by more than the gluing tolerance.

    Carries the measured residual as attribute ``residual``.
    """

    def __init__(self, residual: float, tol: float):
        self.residual = residual
        self.tol = tol
        super().__init__(
            f"endpoint mismatch {residual:.3e} exceeds gluing tolerance {tol:.3e}"
        )


class ConfigError(ValueError):
    """A problem configuration failed validation."""


class BlowUpError(RuntimeError):
    """A time stepper produced a non-finite snapshot.

    Carries the first bad step index as attribute ``step_index``.
    """

    def __init__(self, step_index: int, message: str = ""):
        self.step_index = step_index
        super().__init__(
            message or f"non-finite snapshot at step {step_index}"
        )


class SolverFailure(RuntimeError):
    """Base class for outer-iteration failures; carries the partial report."""

    def __init__(self, message: str, report=None):
        self.report = report
        super().__init__(message)


class MaxIterExceeded(SolverFailure):
    """The damped Picard iteration hit its iteration cap."""


class BallExit(SolverFailure):
    """An iterate reached the outer radius.

    A run ending here usually means the inward-pointing condition fails on
    the shell; ``transversality_check`` probes it directly.
    """


class NonFiniteValue(SolverFailure):
    """An iterate of the outer iteration became non-finite."""
