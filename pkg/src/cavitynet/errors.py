"""Exception types shared across the package."""


class CavityNetError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(CavityNetError, ValueError):
    """A physical parameter is outside its allowed domain."""


class PortMismatchError(CavityNetError, ValueError):
    """Two networks with incompatible port counts were composed."""


class ModeConflictError(CavityNetError, ValueError):
    """Two components declare incompatible data for the same mode label."""


class SingularLoopError(CavityNetError, ArithmeticError):
    """A feedback connection has 1 - S[out, in] numerically zero."""


class DegenerateSystemError(CavityNetError, ArithmeticError):
    """The linear steady-state system is singular (no dissipation at all)."""


class NoResonanceError(CavityNetError):
    """A spectrum has no resolvable dip to fit."""


class StallError(CavityNetError):
    """The tuning controller could not reach its target.

    The partial trace is attached as ``trace``.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace if trace is not None else []


class ConfigError(CavityNetError):
    """A scenario file failed to parse or validate."""
