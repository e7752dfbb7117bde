"""Exception hierarchy shared by every module.

All errors derive from :class:`SpecroundError`. Errors that describe bad
input additionally derive from :class:`ValueError` so generic callers can
catch them the usual way.
"""

from __future__ import annotations


class SpecroundError(Exception):
    """Base class for all package errors."""


class InvalidMatrix(SpecroundError, ValueError):
    """A matrix argument is non-finite or has the wrong shape."""


class NotPSD(SpecroundError, ValueError):
    """A matrix expected to be positive semidefinite has a negative eigenvalue."""


class DegenerateInstance(SpecroundError, ValueError):
    """The weighted moment matrix of an instance is zero."""


class InvalidInstance(SpecroundError, ValueError):
    """A vector instance violates its field invariants."""


class DimensionError(SpecroundError, ValueError):
    """Operands have incompatible dimensions."""


class NotIsotropic(SpecroundError, ValueError):
    """The weighted moment matrix of an instance is not the identity."""


class NumericalFailure(SpecroundError, ArithmeticError):
    """A numerical routine lost accuracy beyond its stated tolerance."""


class IterationCapExceeded(SpecroundError):
    """The swap loop hit its iteration cap before certifying.

    The partial :class:`~specround.rounding.SwapState` is available as
    ``state`` so callers can inspect or resume the run.
    """

    def __init__(self, message: str, state=None):
        super().__init__(message)
        self.state = state


class RangeCollapse(SpecroundError):
    """The residual matrix left after the large weights has rank zero."""


class CertificateViolation(SpecroundError):
    """A runtime-checked guarantee failed; this indicates a bug."""


class DegenerateCosts(SpecroundError, ValueError):
    """The fractional cost is zero so cost-normalized quantities are undefined."""


class EmptySparsifier(SpecroundError, ValueError):
    """A sparsifier edge set is empty."""


class GraphError(SpecroundError, ValueError):
    """Base class for graph-related input errors."""


class Disconnected(GraphError):
    """Two vertices lie in different components of the positive-weight graph."""


class DisconnectedSupport(Disconnected):
    """The support of a fractional edge solution is not connected."""


class InvalidCut(GraphError):
    """A cut side is empty or contains every vertex."""


class GraphFormatError(GraphError):
    """An edge-list file is malformed. ``lineno`` is 1-based."""

    def __init__(self, message: str, lineno: int | None = None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class Infeasible(SpecroundError):
    """The relaxation solver never reached a finite objective."""


class BudgetTooSmall(SpecroundError, ValueError):
    """The budget is below the threshold required by budgeted rounding."""


class UnluckyRun(SpecroundError):
    """Every retry of budgeted rounding overshot the budget."""


class InvalidParams(SpecroundError, ValueError):
    """Concentration-bound parameters are out of range."""


class HypothesisViolation(SpecroundError):
    """A simulated chain broke one of the assumptions of the tail bound."""
