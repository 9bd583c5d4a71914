"""
Commutative Rational Functions Module

Exact arithmetic in K = Q(x, y), the field the noncommutative algebra maps
onto when its variables are allowed to commute. Polynomials (Poly2) are
sympy sparse polynomials over QQ in x, y with graded-lex order; a CommRat is
a lazy numerator/denominator pair that is compared by cross-multiplication
and only gcd-reduced on request or when it grows past the configured degree.

The module also hosts the commutativization map phi from expressions to K
and the Jacobian determinant used to gate substitutions.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from numbers import Rational

from sympy.polys.domains import QQ
from sympy.polys.orderings import grlex
from sympy.polys.rings import PolyElement, ring

from config import get_settings
from errors import BudgetExceeded, DivisionByZero, InternalGateViolation
from ncexpr import NCExpr, NodeKind, topological_order

log = logging.getLogger(__name__)

POLY_RING, X, Y = ring("x,y", QQ, grlex)

# Sparse map (deg_x, deg_y) -> nonzero rational coefficient.
Poly2 = PolyElement

_GENERATORS = {"x": X, "y": Y}


def to_qq(value):
    """Convert an int, Fraction or QQ element into a QQ element."""
    if isinstance(value, Fraction):
        return QQ(value.numerator, value.denominator)
    if isinstance(value, int):
        return QQ(value)
    return value


def qq_to_fraction(value) -> Fraction:
    """Convert a QQ element into a Python Fraction."""
    return Fraction(int(value.numerator), int(value.denominator))


def total_degree(p: Poly2) -> int:
    """Total degree of a polynomial; the zero polynomial has degree -1."""
    return max((sum(monom) for monom in p.itermonoms()), default=-1)


def poly_to_text(p: Poly2) -> str:
    """
    Canonical text of a polynomial.

    Terms are listed in graded-lex order (x > y), exponents use ``^`` and
    products an explicit ``*``.

    Examples:
        >>> poly_to_text(X*Y - 1)
        'x*y-1'
        >>> poly_to_text(X**2/2 - Y)
        '1/2*x^2-y'
    """
    if not p:
        return "0"
    parts = []
    for index, (monom, coeff) in enumerate(p.terms()):
        c = qq_to_fraction(coeff)
        factors = []
        for name, exp in zip("xy", monom):
            if exp == 1:
                factors.append(name)
            elif exp > 1:
                factors.append(f"{name}^{exp}")
        if abs(c) != 1 or not factors:
            factors.insert(0, fraction_to_text(abs(c)))
        body = "*".join(factors)
        if c < 0:
            parts.append("-" + body)
        else:
            parts.append(body if index == 0 else "+" + body)
    return "".join(parts)


def _floor(*items: "CommRat") -> int:
    return max(item.reduced_degree for item in items)


def fraction_to_text(c: Fraction) -> str:
    """Render a rational as ``p`` or ``p/q``."""
    c = Fraction(c)
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _settle(num: Poly2, den: Poly2, floor: int = 0) -> "CommRat":
    """
    Build a CommRat from raw parts, applying the cheap normalizations and budgets.

    A gcd reduction runs once the denominator degree exceeds both the
    configured reduce_degree and twice the degree left by the last reduction
    of any operand (floor).
    """
    if not den:
        raise DivisionByZero("denominator is zero")
    if not num:
        return ZERO
    if den.is_ground:
        if den != POLY_RING.one:
            num = num.quo_ground(den.LC)
        return CommRat(num, POLY_RING.one)
    settings = get_settings()
    if total_degree(den) > max(settings.reduce_degree, 2 * floor):
        result = CommRat(num, den).reduce()
        num, den = result.numerator, result.denominator
        floor = total_degree(den)
    if max(total_degree(num), total_degree(den)) > settings.max_degree:
        raise BudgetExceeded(
            f"rational function of degree {max(total_degree(num), total_degree(den))} "
            f"exceeds the budget of {settings.max_degree}"
        )
    return CommRat(num, den, floor)


@dataclass(frozen=True, eq=False)
class CommRat:
    """
    An element of K = Q(x, y) stored as numerator / denominator.

    The pair is not kept in lowest terms; equality is decided by
    cross-multiplication. Use reduce() for the canonical form.
    """

    numerator: Poly2
    denominator: Poly2 = field(default_factory=lambda: POLY_RING.one)
    reduced_degree: int = 0

    def __post_init__(self):
        if not self.denominator:
            raise DivisionByZero("denominator is zero")

    @classmethod
    def constant(cls, value) -> "CommRat":
        return cls(POLY_RING.ground_new(to_qq(value)))

    @classmethod
    def from_poly(cls, p: Poly2) -> "CommRat":
        return cls(p)

    @property
    def is_zero(self) -> bool:
        return not self.numerator

    @property
    def is_constant(self) -> bool:
        return self.numerator.is_ground and self.denominator.is_ground

    def constant_value(self) -> Fraction:
        """The value of a constant rational function."""
        if not self.is_constant:
            raise ValueError(f"{self} is not constant")
        if not self.numerator:
            return Fraction(0)
        return qq_to_fraction(self.numerator.LC) / qq_to_fraction(self.denominator.LC)

    def is_univariate_x(self) -> bool:
        """True when neither numerator nor denominator involves y."""
        return all(monom[1] == 0 for p in (self.numerator, self.denominator) for monom in p.itermonoms())

    def degree(self) -> int:
        return max(total_degree(self.numerator), total_degree(self.denominator))

    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        if self.denominator == other.denominator:
            return _settle(self.numerator + other.numerator, self.denominator, _floor(self, other))
        return _settle(
            self.numerator * other.denominator + other.numerator * self.denominator,
            self.denominator * other.denominator,
            _floor(self, other),
        )

    __radd__ = __add__

    def __neg__(self):
        return CommRat(-self.numerator, self.denominator, self.reduced_degree)

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        if self.is_zero or other.is_zero:
            return ZERO
        return _settle(self.numerator * other.numerator, self.denominator * other.denominator, _floor(self, other))

    __rmul__ = __mul__

    def inverse(self) -> "CommRat":
        """
        Multiplicative inverse.

        Raises:
            DivisionByZero: if the function is zero
        """
        if self.is_zero:
            raise DivisionByZero("cannot invert the zero rational function")
        return _settle(self.denominator, self.numerator, self.reduced_degree)

    def __truediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return other * self.inverse()

    def __pow__(self, exponent: int):
        if not isinstance(exponent, int):
            return NotImplemented
        if exponent < 0:
            return self.inverse() ** (-exponent)
        return _settle(self.numerator ** exponent, self.denominator ** exponent, self.reduced_degree)

    def __eq__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return equals(self, other)

    __hash__ = None

    @cached_property
    def canonical(self) -> "CommRat":
        """The gcd-reduced form with monic denominator, computed once per value."""
        return _lowest_terms(self)

    def reduce(self) -> "CommRat":
        return reduce(self)

    def __bool__(self) -> bool:
        return not self.is_zero

    def diff(self, var: str) -> "CommRat":
        """Partial derivative with respect to ``"x"`` or ``"y"`` (quotient rule)."""
        gen = _GENERATORS[var]
        num, den = self.numerator, self.denominator
        if den == POLY_RING.one:
            return _settle(num.diff(gen), den)
        return _settle(num.diff(gen) * den - num * den.diff(gen), den * den)

    def evaluate(self, x_value, y_value) -> Fraction:
        """
        Value at a rational point.

        Raises:
            DivisionByZero: if the denominator vanishes at the point
        """
        point = (to_qq(x_value), to_qq(y_value))
        den = self.denominator(*point)
        if not den:
            raise DivisionByZero(f"{self} has a pole at {point}")
        return qq_to_fraction(self.numerator(*point)) / qq_to_fraction(den)

    def compose(self, fx: "CommRat", fy: "CommRat") -> "CommRat":
        """Substitute x -> fx and y -> fy (the field endomorphism of K they define)."""
        num = _evaluate_poly(self.numerator, fx, fy)
        den = _evaluate_poly(self.denominator, fx, fy)
        return num / den

    def to_text(self) -> str:
        """
        Canonical text: the reduced numerator, followed by ``/(den)`` when the
        denominator is not 1.

        Examples:
            >>> CommRat(X*Y - 1, X).to_text()
            '(x*y-1)/(x)'
        """
        reduced = self.reduce()
        if reduced.denominator == POLY_RING.one:
            return poly_to_text(reduced.numerator)
        return f"({poly_to_text(reduced.numerator)})/({poly_to_text(reduced.denominator)})"

    def __str__(self):
        return self.to_text()

    def __repr__(self):
        return f"CommRat({self.to_text()})"


def _coerce(value):
    if isinstance(value, CommRat):
        return value
    if isinstance(value, PolyElement):
        return CommRat(value)
    if isinstance(value, (int, Rational)):
        return CommRat.constant(Fraction(value))
    return NotImplemented


def _evaluate_poly(p: Poly2, fx: CommRat, fy: CommRat) -> CommRat:
    x_powers = {0: ONE}
    y_powers = {0: ONE}
    result = ZERO
    for (i, j), coeff in p.terms():
        if i not in x_powers:
            x_powers[i] = fx ** i
        if j not in y_powers:
            y_powers[j] = fy ** j
        result = result + CommRat.constant(coeff) * x_powers[i] * y_powers[j]
    return result


ZERO = CommRat(POLY_RING.zero)
ONE = CommRat(POLY_RING.one)
CX = CommRat(X)
CY = CommRat(Y)


def arith(op: str, a: CommRat, b: CommRat | None = None) -> CommRat:
    """
    Field operations of K by name.

    Args:
        op: one of "add", "sub", "mul", "neg", "inv"
        a: first operand
        b: second operand for the binary operations

    Returns:
        CommRat: the (lazily unreduced) result

    Raises:
        DivisionByZero: for inv of zero
        ValueError: for an unknown operation name

    Examples:
        >>> arith("add", CX, CY).to_text()
        'x+y'
        >>> arith("inv", CX + 1).to_text()
        '(1)/(x+1)'
    """
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "neg":
        return -a
    if op == "inv":
        return a.inverse()
    raise ValueError(f"unknown field operation {op!r}")


def equals(a: CommRat, b: CommRat) -> bool:
    """
    Decide a = b in K by cross-multiplication, without any gcd.

    Examples:
        >>> equals(CommRat(X**2 - 1, X - 1), CX + 1)
        True
        >>> equals(CX, CY)
        False
    """
    if a.denominator == b.denominator:
        return a.numerator == b.numerator
    return a.numerator * b.denominator == b.numerator * a.denominator


def reduce(a: CommRat) -> CommRat:
    """
    Divide out the gcd of numerator and denominator.

    The result has a monic denominator (leading coefficient 1 in graded-lex
    order), so two equal functions reduce to identical parts.

    Examples:
        >>> reduce(CommRat(X**2 - 1, X - 1)).to_text()
        'x+1'
        >>> reduce(CommRat(POLY_RING.zero, X*Y)).denominator == POLY_RING.one
        True
    """
    return a.canonical


def _lowest_terms(a: CommRat) -> CommRat:
    if a.is_zero:
        return ZERO
    _, num, den = a.numerator.cofactors(a.denominator)
    lead = den.LC
    if lead != QQ.one:
        num = num.quo_ground(lead)
        den = den.quo_ground(lead)
    return CommRat(num, den, total_degree(den))


def jacobian_det(f: CommRat, g: CommRat) -> CommRat:
    """
    Jacobian determinant df/dx * dg/dy - df/dy * dg/dx.

    A nonzero value means f and g are algebraically independent (char 0),
    which is the condition under which x -> f, y -> g extends to an
    endomorphism of the noncommutative algebra.

    Examples:
        >>> jacobian_det(CX, CY) == 1
        True
        >>> jacobian_det(CX, CX).is_zero
        True
    """
    return f.diff("x") * g.diff("y") - f.diff("y") * g.diff("x")


def commutativize(e: NCExpr) -> CommRat:
    """
    The commutativization phi(e) in K.

    Structural recursion over the expression DAG (run bottom-up over a
    topological order): Mul becomes the commutative product, Inv the
    reciprocal. Results are memoized on the expression store.

    Args:
        e: a gated expression

    Returns:
        CommRat: phi(e)

    Raises:
        InternalGateViolation: if an inversion node has a zero operand

    Examples:
        >>> from ncexpr import var_x, var_y
        >>> x, y = var_x(), var_y()
        >>> commutativize(x * y - y * x).is_zero
        True
    """
    store = e.store
    cache = store.comm_cache
    if e.id in cache:
        return cache[e.id]
    for nid in topological_order(e, skip=cache):
        node = store.node(nid)
        kind = node.kind
        if kind is NodeKind.CONST:
            value = CommRat.constant(node.value)
        elif kind is NodeKind.VAR_X:
            value = CX
        elif kind is NodeKind.VAR_Y:
            value = CY
        elif kind is NodeKind.ADD:
            value = cache[node.children[0]] + cache[node.children[1]]
        elif kind is NodeKind.NEG:
            value = -cache[node.children[0]]
        elif kind is NodeKind.MUL:
            value = cache[node.children[0]] * cache[node.children[1]]
        else:
            operand = cache[node.children[0]]
            if operand.is_zero:
                raise InternalGateViolation(f"inversion node {nid} has a zero commutativization")
            value = operand.inverse()
        cache[nid] = value
    return cache[e.id]
