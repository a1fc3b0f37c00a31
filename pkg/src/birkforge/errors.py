"""Exception hierarchy shared across the package.

Every error that can cross the CLI boundary has a stable exit code; the
mapping lives in cli.EXIT_CODES and nowhere else.
"""

from __future__ import annotations


class BirkforgeError(Exception):
    """Base class for all package errors."""


class SeriesFormatError(BirkforgeError):
    """Malformed series/certificate JSON or an invalid rational literal."""


class ResonanceAtOrder(BirkforgeError):
    """Some lambda.(alpha-beta) vanishes within the working order."""

    def __init__(self, message: str, combination: tuple[int, int] | None = None):
        super().__init__(message)
        self.combination = combination


class OrderExceedsCertification(BirkforgeError):
    """A computation was requested beyond the frequency's certified order."""


class HypothesisViolated(BirkforgeError):
    """An identity verifier's precondition fails; names the offending exponent."""

    def __init__(self, message: str, exponent: tuple[int, int, int, int] | None = None):
        super().__init__(message)
        self.exponent = exponent


class SymmetryViolated(BirkforgeError):
    """Input lacks the h_{alpha beta} = h_{beta alpha} real symmetry."""

    def __init__(self, message: str, exponent: tuple[int, int, int, int] | None = None):
        super().__init__(message)
        self.exponent = exponent


class NonRealResidual(BirkforgeError):
    """choose_coefficient received a residual with nonzero imaginary part."""


class SearchBudgetExhausted(BirkforgeError):
    """The stage search ran out of candidates before satisfying all constraints."""


class TauTooSmall(BirkforgeError):
    """The stage inequality is unsatisfiable at the requested sizes."""


class StageCertificateInvalid(BirkforgeError):
    """A stage certificate failed re-verification against its final frequency."""


class GrowthCheckFailed(BirkforgeError):
    """A forged stage's normal-form coefficient did not exceed its factorial bound."""

    def __init__(self, message: str, stage_index: int | None = None):
        super().__init__(message)
        self.stage_index = stage_index


class NormalizationOrderInfeasible(BirkforgeError):
    """The truncation order a run would need is beyond any feasible budget.

    Raised instead of starting a computation whose term count is known in
    advance to be astronomically large (the guard is forge's max_order).
    """

    def __init__(self, message: str, required_order: int, max_order: int):
        super().__init__(message)
        self.required_order = required_order
        self.max_order = max_order
