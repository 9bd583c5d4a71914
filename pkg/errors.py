"""
Errors Module

Exception hierarchy shared by the expression engine, the equality oracle, the
Cremona layer and the V-matrix calculus. Every error derives from
NCAlgebraError and from the closest builtin exception, so callers may catch
either the domain error or the generic one.
"""


class NCAlgebraError(Exception):
    """Base class for all errors raised by this package."""


class CommutatorInverse(NCAlgebraError, ZeroDivisionError):
    """
    Raised when inverting an element of the commutator ideal.

    The commutativization of the operand is zero, so the element has no
    inverse in A. The offending expression is kept on the exception.
    """

    def __init__(self, expr, message: str | None = None):
        self.expr = expr
        super().__init__(message or f"cannot invert {expr}: it lies in the commutator ideal")


class DependentImages(NCAlgebraError, ValueError):
    """Raised when substitution images have vanishing Jacobian determinant."""


class InternalGateViolation(NCAlgebraError, RuntimeError):
    """Raised when an inversion node evaluates to zero after the gate admitted it."""


class BudgetExceeded(NCAlgebraError, MemoryError):
    """Raised when an expression store or a rational function outgrows its budget."""


class DivisionByZero(NCAlgebraError, ZeroDivisionError):
    """Raised when inverting the zero rational function."""


class NonUnitConstantTerm(NCAlgebraError, ZeroDivisionError):
    """Raised when inverting a truncated series whose constant term is zero."""


class SingularConstantTerm(NCAlgebraError, ZeroDivisionError):
    """Raised when the constant-term matrix of a series matrix is singular."""


class SingularMatrix(NCAlgebraError, ValueError):
    """Raised when a GL2 matrix over Q(x) has zero determinant."""


class SingularCommDet(NCAlgebraError, ValueError):
    """Raised when a V-matrix (or a requested pivot minor) has zero commutative determinant."""


class DegenerateSum(NCAlgebraError, ValueError):
    """Raised when closure_sum is asked for a sum whose commutativization vanishes."""


class ExprSyntaxError(NCAlgebraError, ValueError):
    """
    Raised by the grammars on malformed input.

    Attributes:
        text: the input that failed to parse
        position: 0-based character offset of the failure
    """

    def __init__(self, message: str, text: str = "", position: int = 0):
        self.text = text
        self.position = position
        super().__init__(f"{message} (at position {position})")
