"""
Noncommutative Expression Module

This module provides the hash-consed DAG representation of noncommutative
rational expressions over Q in the variables x and y. Expressions are
immutable handles into an append-only interning store; structurally equal
subterms share one node id.

Construction happens at two levels:
- build() interns a node exactly as requested (Add operands are ordered by
  node id, inversion still goes through the phi != 0 gate)
- the smart constructors (const, add, neg, mul, inv and the operators on
  NCExpr) apply a small confluent set of local rewrites at the new node, so
  anything assembled from them is already in normal form

The rewrite set: constant folding, 0/1 neutral elements, a + (-a) -> 0,
negation pushed into constant coefficients and out of products,
inv(inv(e)) -> e, inv(c) -> 1/c, inv(-e) -> -inv(e),
inv(a*b) -> inv(b)*inv(a), inv(e)*e -> 1 and e*inv(e) -> 1.
"""

import enum
import logging
import threading
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from config import get_settings
from errors import BudgetExceeded, CommutatorInverse, DependentImages, InternalGateViolation

log = logging.getLogger(__name__)


class NodeKind(enum.Enum):
    CONST = "const"
    VAR_X = "x"
    VAR_Y = "y"
    ADD = "add"
    NEG = "neg"
    MUL = "mul"
    INV = "inv"


_ARITY = {
    NodeKind.CONST: 0,
    NodeKind.VAR_X: 0,
    NodeKind.VAR_Y: 0,
    NodeKind.ADD: 2,
    NodeKind.NEG: 1,
    NodeKind.MUL: 2,
    NodeKind.INV: 1,
}


@dataclass(frozen=True)
class Node:
    """One interned node: its kind, child ids and (for constants) its value."""

    kind: NodeKind
    children: tuple[int, ...] = ()
    value: Fraction | None = None


class ExprStore:
    """
    Append-only interning table for expression nodes.

    Node ids are assigned in creation order, so every child id is smaller
    than its parent's. Writers are serialized by a lock; reads need none
    because existing entries never change.

    The store also carries the memo of commutativizations (phi values) of
    its nodes, filled by commrat.commutativize.
    """

    X_ID = 0
    Y_ID = 1
    ZERO_ID = 2
    ONE_ID = 3

    def __init__(self, max_nodes: int | None = None):
        self.max_nodes = max_nodes if max_nodes is not None else get_settings().max_nodes
        self._nodes: list[Node] = []
        self._index: dict[Node, int] = {}
        self._lock = threading.Lock()
        self.comm_cache: dict = {}
        self.intern(Node(NodeKind.VAR_X))
        self.intern(Node(NodeKind.VAR_Y))
        self.intern(Node(NodeKind.CONST, value=Fraction(0)))
        self.intern(Node(NodeKind.CONST, value=Fraction(1)))

    def intern(self, node: Node) -> int:
        """
        Return the id of node, creating it if it is new.

        Raises:
            BudgetExceeded: if creating the node would exceed max_nodes
        """
        nid = self._index.get(node)
        if nid is not None:
            return nid
        with self._lock:
            nid = self._index.get(node)
            if nid is not None:
                return nid
            if len(self._nodes) >= self.max_nodes:
                raise BudgetExceeded(f"expression store is full ({self.max_nodes} nodes)")
            nid = len(self._nodes)
            self._nodes.append(node)
            self._index[node] = nid
            return nid

    def node(self, nid: int) -> Node:
        return self._nodes[nid]

    def __len__(self) -> int:
        return len(self._nodes)


_default_store: ExprStore | None = None
_default_lock = threading.Lock()


def default_store() -> ExprStore:
    """The process-wide store used when no store is given explicitly."""
    global _default_store
    if _default_store is None:
        with _default_lock:
            if _default_store is None:
                _default_store = ExprStore()
    return _default_store


@dataclass(frozen=True, eq=False)
class NCExpr:
    """
    Handle to an interned expression: (store, node id).

    Two handles are equal exactly when they name the same node of the same
    store. Arithmetic operators go through the smart constructors; plain
    ints and Fractions are lifted to constants.
    """

    store: ExprStore
    id: int

    @property
    def node(self) -> Node:
        return self.store.node(self.id)

    @property
    def kind(self) -> NodeKind:
        return self.node.kind

    @property
    def value(self) -> Fraction | None:
        return self.node.value

    @property
    def children(self) -> tuple["NCExpr", ...]:
        return tuple(NCExpr(self.store, c) for c in self.node.children)

    def child(self, index: int = 0) -> "NCExpr":
        return NCExpr(self.store, self.node.children[index])

    def is_const(self, value=None) -> bool:
        node = self.node
        if node.kind is not NodeKind.CONST:
            return False
        return value is None or node.value == value

    def __eq__(self, other):
        return isinstance(other, NCExpr) and other.store is self.store and other.id == self.id

    def __hash__(self):
        return hash((id(self.store), self.id))

    def _lift(self, other) -> "NCExpr":
        if isinstance(other, NCExpr):
            if other.store is not self.store:
                raise ValueError("expressions belong to different stores")
            return other
        if isinstance(other, (int, Fraction)):
            return const(other, self.store)
        return NotImplemented

    def __add__(self, other):
        other = self._lift(other)
        return other if other is NotImplemented else add(self, other)

    def __radd__(self, other):
        other = self._lift(other)
        return other if other is NotImplemented else add(other, self)

    def __sub__(self, other):
        other = self._lift(other)
        return other if other is NotImplemented else add(self, neg(other))

    def __rsub__(self, other):
        other = self._lift(other)
        return other if other is NotImplemented else add(other, neg(self))

    def __mul__(self, other):
        other = self._lift(other)
        return other if other is NotImplemented else mul(self, other)

    def __rmul__(self, other):
        other = self._lift(other)
        return other if other is NotImplemented else mul(other, self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent: int):
        if not isinstance(exponent, int):
            return NotImplemented
        base = self if exponent >= 0 else inv(self)
        result = const(1, self.store)
        for _ in range(abs(exponent)):
            result = mul(result, base)
        return result

    def inv(self) -> "NCExpr":
        return inv(self)

    def __str__(self):
        return to_text(self)

    def __repr__(self):
        return f"NCExpr({to_text(self)})"


def _gate(e: NCExpr) -> None:
    """Refuse to invert an element of the commutator ideal."""
    from commrat import commutativize

    if commutativize(e).is_zero:
        raise CommutatorInverse(e)


def build(kind: NodeKind, operands=(), value=None, store: ExprStore | None = None) -> NCExpr:
    """
    Intern a node exactly as given.

    No rewriting happens here apart from ordering the two operands of an
    Add by node id, so build(ADD, [a, b]) and build(ADD, [b, a]) coincide
    while build(MUL, [a, b]) and build(MUL, [b, a]) do not. Inversion
    nodes are still gated.

    Args:
        kind: the node kind
        operands: child expressions, all from the same store
        value: the rational value of a CONST node
        store: target store when there are no operands

    Returns:
        NCExpr: the interned node

    Raises:
        CommutatorInverse: for INV of an expression with zero commutativization
        ValueError: on an arity mismatch or mixed stores
    """
    operands = tuple(operands)
    if len(operands) != _ARITY[kind]:
        raise ValueError(f"{kind.name} takes {_ARITY[kind]} operands, got {len(operands)}")
    if operands:
        store = operands[0].store
        if any(op.store is not store for op in operands):
            raise ValueError("operands belong to different stores")
    elif store is None:
        store = default_store()

    if kind is NodeKind.CONST:
        if value is None:
            raise ValueError("CONST needs a value")
        return NCExpr(store, store.intern(Node(kind, value=Fraction(value))))
    if kind is NodeKind.INV:
        _gate(operands[0])
    children = tuple(op.id for op in operands)
    if kind is NodeKind.ADD:
        children = tuple(sorted(children))
    return NCExpr(store, store.intern(Node(kind, children)))


def var_x(store: ExprStore | None = None) -> NCExpr:
    return NCExpr(store or default_store(), ExprStore.X_ID)


def var_y(store: ExprStore | None = None) -> NCExpr:
    return NCExpr(store or default_store(), ExprStore.Y_ID)


def const(value, store: ExprStore | None = None) -> NCExpr:
    """A rational constant (int, Fraction, or anything Fraction accepts)."""
    return build(NodeKind.CONST, value=Fraction(value), store=store)


def _is_negation(a: NCExpr, b: NCExpr) -> bool:
    """Recognize b = -a among normal forms."""
    na, nb = a.node, b.node
    if na.kind is NodeKind.CONST and nb.kind is NodeKind.CONST:
        return na.value == -nb.value
    if na.kind is NodeKind.NEG and na.children[0] == b.id:
        return True
    if nb.kind is NodeKind.NEG and nb.children[0] == a.id:
        return True
    if na.kind is NodeKind.MUL and nb.kind is NodeKind.MUL and na.children[1] == nb.children[1]:
        return _is_negation(a.child(0), b.child(0))
    return False


def _negate_product(e: NCExpr) -> NCExpr | None:
    """Fold -e into the leftmost factor of a product when that factor is a constant."""
    rights = []
    head = e
    while head.node.kind is NodeKind.MUL:
        rights.append(head.child(1))
        head = head.child(0)
    if not head.is_const():
        return None
    result = const(-head.value, e.store)
    for factor in reversed(rights):
        result = mul(result, factor)
    return result


def add(a: NCExpr, b: NCExpr) -> NCExpr:
    if a.is_const(0):
        return b
    if b.is_const(0):
        return a
    if a.is_const() and b.is_const():
        return const(a.value + b.value, a.store)
    if _is_negation(a, b):
        return const(0, a.store)
    return build(NodeKind.ADD, (a, b))


def neg(a: NCExpr) -> NCExpr:
    node = a.node
    if node.kind is NodeKind.CONST:
        return const(-node.value, a.store)
    if node.kind is NodeKind.NEG:
        return a.child(0)
    if node.kind is NodeKind.MUL:
        folded = _negate_product(a)
        if folded is not None:
            return folded
    return build(NodeKind.NEG, (a,))


def sub(a: NCExpr, b: NCExpr) -> NCExpr:
    return add(a, neg(b))


def mul(a: NCExpr, b: NCExpr) -> NCExpr:
    store = a.store
    na, nb = a.node, b.node
    if a.is_const(0) or b.is_const(0):
        return const(0, store)
    if a.is_const(1):
        return b
    if b.is_const(1):
        return a
    if na.kind is NodeKind.CONST and nb.kind is NodeKind.CONST:
        return const(na.value * nb.value, store)
    if na.kind is NodeKind.NEG:
        return neg(mul(a.child(0), b))
    if nb.kind is NodeKind.NEG:
        return neg(mul(a, b.child(0)))
    if a.is_const(-1):
        return neg(b)
    if b.is_const(-1):
        return neg(a)
    if na.kind is NodeKind.CONST and nb.kind is NodeKind.MUL and b.child(0).is_const():
        return mul(const(na.value * b.child(0).value, store), b.child(1))
    # inv(e)*e and e*inv(e)
    if na.kind is NodeKind.INV and na.children[0] == b.id:
        return const(1, store)
    if nb.kind is NodeKind.INV and nb.children[0] == a.id:
        return const(1, store)
    return build(NodeKind.MUL, (a, b))


def inv(e: NCExpr) -> NCExpr:
    """
    Guarded inversion.

    The operand must have nonzero commutativization; elements of the
    commutator ideal have no inverse in the algebra.

    Args:
        e: the expression to invert

    Returns:
        NCExpr: the normal form of e^-1

    Raises:
        CommutatorInverse: if commutativize(e) == 0

    Examples:
        >>> x, y = var_x(), var_y()
        >>> inv(const(2)) == const(Fraction(1, 2))
        True
        >>> inv(inv(x)) == x
        True
    """
    node = e.node
    if node.kind is NodeKind.CONST:
        if node.value == 0:
            raise CommutatorInverse(e)
        return const(1 / node.value, e.store)
    _gate(e)
    if node.kind is NodeKind.INV:
        return e.child(0)
    if node.kind is NodeKind.NEG:
        return neg(inv(e.child(0)))
    if node.kind is NodeKind.MUL:
        return mul(inv(e.child(1)), inv(e.child(0)))
    return build(NodeKind.INV, (e,))


def reachable(e: NCExpr, skip=None) -> set[int]:
    """Ids of all nodes under e, not descending into (or including) ids in skip."""
    store = e.store
    skip = skip if skip is not None else ()
    seen: set[int] = set()
    stack = [e.id] if e.id not in skip else []
    while stack:
        nid = stack.pop()
        if nid in seen:
            continue
        seen.add(nid)
        for child in store.node(nid).children:
            if child not in seen and child not in skip:
                stack.append(child)
    return seen


def topological_order(e: NCExpr, skip=None) -> list[int]:
    """
    Node ids under e with every child before its parents.

    Children are always interned before their parents, so increasing id
    order is a topological order.
    """
    return sorted(reachable(e, skip))


def node_count(e: NCExpr) -> int:
    return len(reachable(e))


_SMART_BINARY = {NodeKind.ADD: add, NodeKind.MUL: mul}


def _rebuild(e: NCExpr, leaf) -> NCExpr:
    """Rebuild e bottom-up with the smart constructors; leaf maps leaf nodes."""
    store = e.store
    done: dict[int, NCExpr] = {}
    for nid in topological_order(e):
        node = store.node(nid)
        kind = node.kind
        if kind in (NodeKind.CONST, NodeKind.VAR_X, NodeKind.VAR_Y):
            done[nid] = leaf(NCExpr(store, nid))
        elif kind is NodeKind.NEG:
            done[nid] = neg(done[node.children[0]])
        elif kind is NodeKind.INV:
            done[nid] = inv(done[node.children[0]])
        else:
            left, right = node.children
            done[nid] = _SMART_BINARY[kind](done[left], done[right])
    return done[e.id]


def normalize(e: NCExpr) -> NCExpr:
    """
    Apply the local rewrite set everywhere in e.

    Idempotent; the result equals e in the algebra (same commutativization
    and same representations).

    Examples:
        >>> x = var_x()
        >>> normalize(build(NodeKind.MUL, (x, const(1)))) == x
        True
        >>> normalize(build(NodeKind.MUL, (const(2), const(3)))) == const(6)
        True
    """
    return _rebuild(e, lambda leaf: leaf)


def reverse(e: NCExpr) -> NCExpr:
    """
    The reversal anti-automorphism: swaps the factors of every product.

    Fixes x, y and constants and commutes with addition, negation and
    inversion. Nodes are rebuilt with build(), so reverse(reverse(e)) is e
    itself, not merely an equal expression.

    Examples:
        >>> x, y = var_x(), var_y()
        >>> reverse(x * y) == y * x
        True
    """
    store = e.store
    done: dict[int, NCExpr] = {}
    for nid in topological_order(e):
        node = store.node(nid)
        if not node.children:
            done[nid] = NCExpr(store, nid)
            continue
        operands = [done[c] for c in node.children]
        if node.kind is NodeKind.MUL:
            operands.reverse()
        done[nid] = build(node.kind, operands)
    return done[e.id]


def substitute(e: NCExpr, img_x: NCExpr, img_y: NCExpr) -> NCExpr:
    """
    Apply the endomorphism x -> img_x, y -> img_y to e.

    The images must be algebraically independent after commutativization,
    checked by a nonzero Jacobian determinant; then every inversion in e
    stays invertible after substitution.

    Args:
        e: expression to rewrite
        img_x: image of x
        img_y: image of y

    Returns:
        NCExpr: the image of e, in normal form

    Raises:
        DependentImages: if the Jacobian of the commutativized images vanishes
        InternalGateViolation: if a substituted inversion loses its inverse

    Examples:
        >>> x, y = var_x(), var_y()
        >>> substitute(x * y, y, x) == y * x
        True
    """
    from commrat import commutativize, jacobian_det

    if img_x.store is not e.store or img_y.store is not e.store:
        raise ValueError("images belong to a different store")
    if jacobian_det(commutativize(img_x), commutativize(img_y)).is_zero:
        raise DependentImages(f"images ({img_x}, {img_y}) are algebraically dependent")

    def leaf(node_expr: NCExpr) -> NCExpr:
        kind = node_expr.kind
        if kind is NodeKind.VAR_X:
            return img_x
        if kind is NodeKind.VAR_Y:
            return img_y
        return node_expr

    try:
        return _rebuild(e, leaf)
    except CommutatorInverse as exc:
        raise InternalGateViolation(f"substitution made {exc.expr} non-invertible") from exc


# Precedence levels used by the printer.
_SUM, _PRODUCT, _ATOM = 0, 1, 2


def _const_text(value: Fraction) -> str:
    return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"


def to_text(e: NCExpr) -> str:
    """
    Render e in the NC grammar.

    Sums print left to right with " + " / " - ", products with "*",
    inversions as inv(...). Parentheses appear only where the grammar's
    precedence needs them, so parsing the text back in the same store gives
    the same node.

    Examples:
        >>> x, y = var_x(), var_y()
        >>> to_text(y - inv(x))
        'y - inv(x)'
        >>> to_text(const(Fraction(-1, 2)) * x * y)
        '-1/2*x*y'
    """
    store = e.store
    text: dict[int, str] = {}
    level: dict[int, int] = {}

    def wrapped(nid: int, minimum: int) -> str:
        return f"({text[nid]})" if level[nid] < minimum else text[nid]

    for nid in topological_order(e):
        node = store.node(nid)
        kind = node.kind
        if kind is NodeKind.CONST:
            text[nid] = _const_text(node.value)
            level[nid] = _ATOM if node.value >= 0 else _PRODUCT
        elif kind is NodeKind.VAR_X:
            text[nid], level[nid] = "x", _ATOM
        elif kind is NodeKind.VAR_Y:
            text[nid], level[nid] = "y", _ATOM
        elif kind is NodeKind.INV:
            text[nid], level[nid] = f"inv({text[node.children[0]]})", _ATOM
        elif kind is NodeKind.NEG:
            child = node.children[0]
            body = wrapped(child, _PRODUCT)
            text[nid], level[nid] = f"-{body}", _PRODUCT
        elif kind is NodeKind.MUL:
            left, right = node.children
            text[nid] = f"{wrapped(left, _PRODUCT)}*{wrapped(right, _ATOM)}"
            level[nid] = _PRODUCT
        else:
            left, right = node.children
            text[nid] = f"{text[left]}{_sum_tail(store, right, text, level)}"
            level[nid] = _SUM
    return text[e.id]


def _sum_tail(store: ExprStore, nid: int, text: dict, level: dict) -> str:
    """The ' + t' or ' - t' tail for the right operand of a sum."""
    node = store.node(nid)
    if node.kind is NodeKind.CONST and node.value < 0:
        return f" - {_const_text(-node.value)}"
    if node.kind is NodeKind.NEG:
        child = node.children[0]
        body = f"({text[child]})" if level[child] < _PRODUCT else text[child]
        return f" - {body}"
    if node.kind is NodeKind.MUL:
        head = node
        while head.kind is NodeKind.MUL:
            head = store.node(head.children[0])
        if head.kind is NodeKind.CONST and head.value < 0:
            # the product text starts with the sign of its leading constant
            return f" - {text[nid][1:]}"
    body = f"({text[nid]})" if level[nid] <= _SUM else text[nid]
    return f" + {body}"


def random_expression(rng: np.random.Generator, depth: int = 3, store: ExprStore | None = None) -> NCExpr:
    """
    Draw a random gated expression.

    Leaves are x, y or a small nonzero integer (occasionally a fraction);
    inner nodes are sums, differences, products, negations and inversions.
    An inversion whose operand falls in the commutator ideal is dropped in
    favour of the operand itself.

    Args:
        rng: numpy random generator
        depth: maximum nesting depth
        store: target store (default store when omitted)

    Returns:
        NCExpr: a normal, gated expression
    """
    store = store or default_store()
    if depth <= 0 or rng.random() < 0.25:
        choice = rng.integers(0, 5)
        if choice == 0 or choice == 1:
            return var_x(store) if choice == 0 else var_y(store)
        if choice == 2:
            return const(Fraction(int(rng.integers(1, 4)), int(rng.integers(1, 3))), store)
        value = int(rng.integers(-3, 4))
        return const(value if value != 0 else 2, store)
    op = rng.integers(0, 6)
    left = random_expression(rng, depth - 1, store)
    if op == 4:
        return neg(left)
    if op == 5:
        try:
            return inv(left)
        except CommutatorInverse:
            return left
    right = random_expression(rng, depth - 1, store)
    if op == 0:
        return add(left, right)
    if op == 1:
        return sub(left, right)
    return mul(left, right)


def random_commutator_multiple(rng: np.random.Generator, depth: int = 3, store: ExprStore | None = None) -> NCExpr:
    """A random element of the commutator ideal: (xy - yx)*e or e*(xy - yx)."""
    store = store or default_store()
    x, y = var_x(store), var_y(store)
    commutator = x * y - y * x
    other = random_expression(rng, depth, store)
    if rng.random() < 0.5:
        return commutator * other
    return other * commutator
