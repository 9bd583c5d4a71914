"""
Grammar Module

Text front ends for the engine, written with pyparsing:

- NC grammar: x, y, integer and p/q literals, +, -, *, unary minus, inv(...)
  and parentheses. No division and no powers; * is left-associative and
  binds looser than unary minus, which binds looser than inv(...).
- Comm grammar: commutative rational functions in x, y with +, -, *, /,
  unary minus and nonnegative integer powers (^).
- V-entry grammar: alpha + beta*x + gamma*y with rational coefficients;
  products of variables and powers are rejected.
- Word grammar: Cremona words built from tau, t[P,Q;R,S], p[P,Q;R,S] and
  inner(expr), separated by whitespace or *.

Parsing happens in two passes: pyparsing produces a small syntax tree, then
the tree is turned into engine values. The inversion gate therefore fires
once per inv(...) with the offending subexpression.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import pyparsing as pp

from commrat import CX, CY, CommRat
from errors import ExprSyntaxError
from ncexpr import ExprStore, NCExpr, add, const, default_store, inv, mul, neg, sub, var_x, var_y

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class _Tree:
    op: str
    args: tuple = ()
    loc: int = 0


def _fold_product(ops: dict):
    """Fold [a, op, b, op, c] left-associatively into a tree."""

    def action(s, loc, toks):
        items = list(toks)
        acc = items[0]
        for index in range(1, len(items), 2):
            acc = _Tree(ops[items[index]], (acc, items[index + 1]), loc)
        return acc

    return action


def _checked_fraction(s, loc, text: str) -> Fraction:
    if "/" in text and int(text.split("/")[1]) == 0:
        raise pp.ParseFatalException(s, loc, "zero denominator in rational literal")
    return Fraction(text)


def _rational_action(s, loc, toks):
    return _Tree("num", (_checked_fraction(s, loc, toks[0]),), loc)


def _rational():
    integer = pp.Word(pp.nums)
    return pp.Combine(integer + pp.Opt("/" + integer)).set_parse_action(_rational_action)


def _variables():
    x = pp.Keyword("x").set_parse_action(lambda s, loc, toks: _Tree("x", (), loc))
    y = pp.Keyword("y").set_parse_action(lambda s, loc, toks: _Tree("y", (), loc))
    return x | y


def _nc_element() -> pp.ParserElement:
    expr = pp.Forward()
    lpar, rpar = pp.Suppress("("), pp.Suppress(")")
    inv_call = (pp.Suppress(pp.Keyword("inv")) + lpar + expr + rpar).set_parse_action(
        lambda s, loc, toks: _Tree("inv", (toks[0],), loc)
    )
    atom = inv_call | _rational() | _variables() | (lpar + expr + rpar)
    unary = pp.Forward()
    negated = (pp.Suppress("-") + unary).set_parse_action(lambda s, loc, toks: _Tree("neg", (toks[0],), loc))
    unary <<= negated | atom
    product = (unary + pp.ZeroOrMore(pp.Literal("*") + unary)).set_parse_action(_fold_product({"*": "mul"}))
    total = (product + pp.ZeroOrMore(pp.one_of("+ -") + product)).set_parse_action(_fold_product({"+": "add", "-": "sub"}))
    expr <<= total
    return expr


def _comm_element() -> pp.ParserElement:
    expr = pp.Forward()
    lpar, rpar = pp.Suppress("("), pp.Suppress(")")
    integer = pp.Word(pp.nums).set_parse_action(lambda s, loc, toks: _Tree("num", (Fraction(int(toks[0])),), loc))
    atom = integer | _variables() | (lpar + expr + rpar)
    exponent = pp.Word(pp.nums).set_parse_action(lambda s, loc, toks: int(toks[0]))
    power = (atom + pp.Opt(pp.Suppress("^") + exponent)).set_parse_action(
        lambda s, loc, toks: toks[0] if len(toks) == 1 else _Tree("pow", (toks[0], toks[1]), loc)
    )
    unary = pp.Forward()
    negated = (pp.Suppress("-") + unary).set_parse_action(lambda s, loc, toks: _Tree("neg", (toks[0],), loc))
    unary <<= negated | power
    product = (unary + pp.ZeroOrMore(pp.one_of("* /") + unary)).set_parse_action(_fold_product({"*": "mul", "/": "div"}))
    total = (product + pp.ZeroOrMore(pp.one_of("+ -") + product)).set_parse_action(_fold_product({"+": "add", "-": "sub"}))
    expr <<= total
    return expr


def _ventry_element() -> pp.ParserElement:
    variable = pp.one_of("x y")
    term = pp.Group(
        (_rational_text() + pp.Suppress("*") + variable)
        | variable
        | _rational_text()
    )
    sign = pp.one_of("+ -")
    first = pp.Group(pp.Opt(sign, "+") + term)
    rest = pp.Group(sign + term)
    return first + pp.ZeroOrMore(rest)


def _rational_text():
    integer = pp.Word(pp.nums)
    return pp.Combine(integer + pp.Opt("/" + integer)).set_parse_action(lambda s, loc, toks: _checked_fraction(s, loc, toks[0]))


def _word_element() -> pp.ParserElement:
    comm = _comm_element()
    lbr, rbr, comma, semi = pp.Suppress("["), pp.Suppress("]"), pp.Suppress(","), pp.Suppress(";")
    matrix = lbr + comm + comma + comm + semi + comm + comma + comm + rbr
    tau = pp.Keyword("tau").set_parse_action(lambda s, loc, toks: _Tree("tau", (), loc))
    t_gen = (pp.Suppress(pp.Keyword("t")) + matrix).set_parse_action(lambda s, loc, toks: _Tree("t", tuple(toks), loc))
    p_gen = (pp.Suppress(pp.Keyword("p")) + matrix).set_parse_action(lambda s, loc, toks: _Tree("p", tuple(toks), loc))
    inner = (pp.Suppress(pp.Keyword("inner")) + pp.Suppress("(") + _nc_element() + pp.Suppress(")")).set_parse_action(
        lambda s, loc, toks: _Tree("inner", (toks[0],), loc)
    )
    generator = tau | t_gen | p_gen | inner
    return pp.Opt(generator + pp.ZeroOrMore(pp.Opt(pp.Suppress("*")) + generator))


@lru_cache(maxsize=None)
def _grammar(name: str) -> pp.ParserElement:
    builders = {"nc": _nc_element, "comm": _comm_element, "ventry": _ventry_element, "word": _word_element}
    return builders[name]()


def _parse(name: str, text: str) -> pp.ParseResults:
    try:
        return _grammar(name).parse_string(text, parse_all=True)
    except pp.ParseBaseException as exc:
        raise ExprSyntaxError(f"cannot parse {text!r}: {exc.msg}", text, exc.loc) from None


def _build_nc(tree: _Tree, store: ExprStore) -> NCExpr:
    op = tree.op
    if op == "num":
        return const(tree.args[0], store)
    if op == "x":
        return var_x(store)
    if op == "y":
        return var_y(store)
    operands = [_build_nc(arg, store) for arg in tree.args]
    if op == "neg":
        return neg(operands[0])
    if op == "inv":
        return inv(operands[0])
    if op == "add":
        return add(*operands)
    if op == "sub":
        return sub(*operands)
    return mul(*operands)


def _build_comm(tree: _Tree) -> CommRat:
    op = tree.op
    if op == "num":
        return CommRat.constant(tree.args[0])
    if op == "x":
        return CX
    if op == "y":
        return CY
    if op == "pow":
        return _build_comm(tree.args[0]) ** tree.args[1]
    operands = [_build_comm(arg) for arg in tree.args]
    if op == "neg":
        return -operands[0]
    if op == "add":
        return operands[0] + operands[1]
    if op == "sub":
        return operands[0] - operands[1]
    if op == "mul":
        return operands[0] * operands[1]
    return operands[0] / operands[1]


def parse_nc(text: str, store: ExprStore | None = None) -> NCExpr:
    """
    Parse an expression of the NC grammar.

    Args:
        text: e.g. "x*y - y*x" or "inv(x + 1)*y"
        store: target expression store (default store when omitted)

    Returns:
        NCExpr: the normal form of the parsed expression

    Raises:
        ExprSyntaxError: on malformed input, with the failing position
        CommutatorInverse: if an inv(...) operand lies in the commutator ideal

    Examples:
        >>> str(parse_nc("x*y - y*x"))
        'x*y - y*x'
    """
    tree = _parse("nc", text)[0]
    return _build_nc(tree, store or default_store())


def parse_comm(text: str) -> CommRat:
    """
    Parse a commutative rational function.

    Raises:
        ExprSyntaxError: on malformed input
        DivisionByZero: when dividing by an expression equal to zero

    Examples:
        >>> parse_comm("(x^2+1)/(x-2)").to_text()
        '(x^2+1)/(x-2)'
    """
    return _build_comm(_parse("comm", text)[0])


def parse_ventry(text: str):
    """
    Parse a V-entry such as "x", "2*x-1/3*y+4" or "0".

    Raises:
        ExprSyntaxError: on malformed input, including products and powers
    """
    from vmatrix import VEntry

    alpha = beta = gamma = Fraction(0)
    for sign, term in _parse("ventry", text):
        factor = -1 if sign == "-" else 1
        if len(term) == 2:
            coeff, name = term[0], term[1]
        elif term[0] in ("x", "y"):
            coeff, name = Fraction(1), term[0]
        else:
            coeff, name = term[0], ""
        coeff *= factor
        if name == "x":
            beta += coeff
        elif name == "y":
            gamma += coeff
        else:
            alpha += coeff
    return VEntry(alpha, beta, gamma)


def parse_word(text: str, store: ExprStore | None = None) -> list:
    """
    Parse a Cremona word, e.g. "tau t[0,x;1,0]" or "t[1,0;0,x] * inner(inv(x)*y)".

    Matrix entries use the Comm grammar and must not involve y.

    Raises:
        ExprSyntaxError: on malformed input or a matrix entry depending on y
        SingularMatrix: for a matrix with zero determinant
        CommutatorInverse: for a non-invertible conjugator
    """
    from cremona import GL2Rat, Inner, PMap, Tau, TMap

    store = store or default_store()
    word = []
    for tree in _parse("word", text):
        if tree.op == "tau":
            word.append(Tau())
        elif tree.op == "inner":
            word.append(Inner(_build_nc(tree.args[0], store)))
        else:
            entries = [_build_comm(arg) for arg in tree.args]
            if not all(entry.is_univariate_x() for entry in entries):
                raise ExprSyntaxError("matrix entries must be rational functions of x alone", text, tree.loc)
            matrix = GL2Rat(*entries)
            word.append(TMap(matrix) if tree.op == "t" else PMap(matrix))
    log.debug("parsed word of %d generators", len(word))
    return word
