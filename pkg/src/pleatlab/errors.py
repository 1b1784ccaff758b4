"""Exception hierarchy shared by all pleatlab modules."""


class PleatlabError(Exception):
    """Base class for every error raised by the library."""


class ExprSyntaxError(PleatlabError, ValueError):
    def __init__(self, message: str, offset: int, expected: frozenset = frozenset()):
        self.offset = offset
        self.expected = frozenset(expected)
        detail = f"{message} at offset {offset}"
        if self.expected:
            detail += f" (expected one of: {', '.join(sorted(self.expected))})"
        super().__init__(detail)


class NonIntegerExponentError(ExprSyntaxError):
    pass


class UnknownIdentifierError(PleatlabError, ValueError):
    def __init__(self, name: str, offset: int = -1):
        self.name = name
        self.offset = offset
        where = f" at offset {offset}" if offset >= 0 else ""
        super().__init__(f"unknown identifier {name!r}{where}")


class UnboundParameterError(PleatlabError, KeyError):
    pass


class DomainError(PleatlabError, ArithmeticError):
    pass


class OffSurfaceError(PleatlabError, ValueError):
    pass


class ChartBreakdownError(PleatlabError):
    pass


class NewtonDivergenceError(PleatlabError):
    pass


class CorrectorError(PleatlabError):
    """Criminant corrector failed (divergence or singular Jacobian)."""


class ConvergenceError(PleatlabError):
    pass


class StepUnderflowError(PleatlabError):
    pass


class InadmissibleParameterError(PleatlabError, ValueError):
    pass


class FitError(PleatlabError):
    pass


class DegenerateError(PleatlabError):
    """A genericity condition fails within the numeric margin."""

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)
