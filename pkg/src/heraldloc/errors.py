"""Exception types raised across the package."""


class HeraldlocError(Exception):
    """Base class for all package errors."""


class DomainError(HeraldlocError, ValueError):
    """An argument lies outside the domain where the operation is defined."""


class TruncationError(HeraldlocError):
    """A sampled function carries non-negligible weight outside its window."""


class ResolutionError(HeraldlocError, ValueError):
    """A grid is too coarse for the structure being sampled."""


class WindowSizeError(HeraldlocError):
    """A guided mode has not decayed at the edges of the computational window."""


class NumericError(HeraldlocError, ArithmeticError):
    """A numerical kernel failed to converge."""


class DegenerateHeraldError(HeraldlocError):
    """The heralding projector has (numerically) zero detection probability."""


class RealizationError(HeraldlocError):
    """One or more disorder realizations failed inside an ensemble run."""

    def __init__(self, failures):
        self.failures = dict(failures)
        lines = [f"realization {r}: {msg}" for r, msg in sorted(self.failures.items())]
        super().__init__("ensemble aborted; " + "; ".join(lines))
