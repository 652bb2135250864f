"""Exception hierarchy shared by all xtalk modules."""


class XtalkError(Exception):
    """Base class; ``code`` is the machine-readable tag used in CLI error JSON."""

    code = "error"


class InvalidPatternError(XtalkError, ValueError):
    code = "invalid-pattern"


class InvalidSpecError(XtalkError, ValueError):
    code = "invalid-spec"


class WireIndexError(XtalkError, IndexError):
    code = "wire-out-of-range"


class NoTransitionError(XtalkError, ValueError):
    code = "no-transition"


class NoCrossingError(XtalkError, RuntimeError):
    code = "no-crossing"


class NotSettledError(XtalkError, RuntimeError):
    code = "not-settled"


class UnsupportedModelError(XtalkError, ValueError):
    code = "unsupported-model"


class GridMismatchError(XtalkError, ValueError):
    code = "grid-mismatch"


class BudgetError(XtalkError, RuntimeError):
    code = "budget-exceeded"


class BuildError(XtalkError, RuntimeError):
    code = "build-error"
