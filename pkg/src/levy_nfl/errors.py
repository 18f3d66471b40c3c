"""Exception hierarchy shared by every analysis module."""

from __future__ import annotations


class LevyNflError(Exception):
    """Base class for all errors raised by this package."""


class InvalidTriplet(LevyNflError, ValueError):
    pass


class SchemaError(LevyNflError, ValueError):
    pass


class QuadratureDivergence(LevyNflError):
    """Adaptive quadrature did not settle, or an integral is of the form inf - inf."""


class IntegrabilityFailure(LevyNflError):
    """A moment integral diverges; ``tails`` names the offending directions."""

    def __init__(self, message: str, tails: list | None = None):
        super().__init__(message)
        self.tails = tails or []


class UndecidableTail(LevyNflError):
    pass


class TiltNotIntegrable(LevyNflError):
    pass


class UnsupportedVariant(LevyNflError):
    pass


class ConvergenceFailure(LevyNflError):
    pass


class PreconditionError(LevyNflError):
    pass


class IaoPresent(LevyNflError):
    """No numeraire portfolio: an immediate arbitrage lies in the recession cone."""

    def __init__(self, certificate):
        super().__init__(f"immediate arbitrage opportunity present: xi={certificate.xi}")
        self.certificate = certificate


class NotAnIAO(LevyNflError):
    pass


class NoEsmm(LevyNflError):
    def __init__(self, witness):
        super().__init__(f"no supermartingale measure: immediate arbitrage xi={witness.xi}")
        self.witness = witness


class ConstrainedMarket(LevyNflError):
    pass


class CholeskyFailure(LevyNflError):
    pass


class NonPositiveWealth(LevyNflError):
    pass


class MonotonicityViolation(LevyNflError):
    pass


class HorizonCapReached(LevyNflError):
    def __init__(self, message: str, report):
        super().__init__(message)
        self.report = report
