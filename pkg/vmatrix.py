"""
V-Matrix Module

Square matrices whose entries lie in V = span{1, x, y}, and the elimination
calculus that turns them into elements of the algebra:

- comm_det: the determinant after letting x and y commute (Bareiss)
- decompose: pivoted noncommutative row elimination U * M~ = T, where M~
  is M with rows and columns permuted by the pivot sequence, U is lower
  triangular and T upper triangular with diagonal (1, ..., 1, delta)
- nc_inverse: the inverse of M over the algebra, from the decomposition
- closure_inverse / closure_product / closure_sum: bordered matrices whose
  designated element is delta^-1, -delta2*delta1 and delta1 + delta2

The binding law is the determinant ratio: phi(delta) * det(M~') = det(M~),
where M~' is the leading (k-1) x (k-1) pivot block.
"""

import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from commrat import POLY_RING, X, Y, CommRat, commutativize, fraction_to_text, to_qq
from config import get_settings
from errors import DegenerateSum, SingularCommDet
from ncexpr import ExprStore, NCExpr, const, default_store, inv, var_x, var_y

log = logging.getLogger(__name__)

MINOR_POINTS = 3
MINOR_RANGE = 1000


@dataclass(frozen=True)
class VEntry:
    """alpha + beta*x + gamma*y with rational coefficients."""

    alpha: Fraction = Fraction(0)
    beta: Fraction = Fraction(0)
    gamma: Fraction = Fraction(0)

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            object.__setattr__(self, name, Fraction(getattr(self, name)))

    @classmethod
    def constant(cls, value) -> "VEntry":
        return cls(alpha=Fraction(value))

    def __neg__(self) -> "VEntry":
        return VEntry(-self.alpha, -self.beta, -self.gamma)

    @property
    def is_zero(self) -> bool:
        return not (self.alpha or self.beta or self.gamma)

    def to_poly(self):
        return POLY_RING.ground_new(to_qq(self.alpha)) + X * to_qq(self.beta) + Y * to_qq(self.gamma)

    def at(self, x_value, y_value) -> Fraction:
        return self.alpha + self.beta * x_value + self.gamma * y_value

    def to_expr(self, store: ExprStore | None = None) -> NCExpr:
        store = store or default_store()
        return const(self.alpha, store) + const(self.beta, store) * var_x(store) + const(self.gamma, store) * var_y(store)

    def to_text(self) -> str:
        """
        Canonical text: x term, y term, then the constant.

        Examples:
            >>> VEntry(-1, 2, 0).to_text()
            '2*x-1'
            >>> VEntry().to_text()
            '0'
        """
        parts = []
        for coeff, name in ((self.beta, "x"), (self.gamma, "y"), (self.alpha, "")):
            if not coeff:
                continue
            magnitude = abs(coeff)
            if name:
                body = name if magnitude == 1 else f"{fraction_to_text(magnitude)}*{name}"
            else:
                body = fraction_to_text(magnitude)
            sign = "-" if coeff < 0 else ("+" if parts else "")
            parts.append(sign + body)
        return "".join(parts) or "0"

    def __str__(self):
        return self.to_text()


ZERO_ENTRY = VEntry()
ONE_ENTRY = VEntry.constant(1)


@dataclass(frozen=True)
class VMatrix:
    """A square matrix of VEntry values, stored row by row."""

    entries: tuple[tuple[VEntry, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(row) for row in self.entries)
        object.__setattr__(self, "entries", rows)
        k = len(rows)
        if k < 1 or any(len(row) != k for row in rows):
            raise ValueError("a V-matrix must be square with k >= 1")

    @classmethod
    def from_texts(cls, rows) -> "VMatrix":
        """Parse a nested list of entry strings such as [["x", "1"], ["1", "y"]]."""
        from grammar import parse_ventry

        return cls(tuple(tuple(parse_ventry(str(text)) for text in row) for row in rows))

    @property
    def size(self) -> int:
        return len(self.entries)

    def __getitem__(self, index: tuple[int, int]) -> VEntry:
        i, j = index
        return self.entries[i][j]

    def submatrix(self, rows, cols) -> "VMatrix":
        return VMatrix(tuple(tuple(self.entries[r][c] for c in cols) for r in rows))

    def permuted(self, row_perm, col_perm) -> "VMatrix":
        """M~[i][j] = M[row_perm[i]][col_perm[j]]."""
        return self.submatrix(row_perm, col_perm)

    def comm_rows(self) -> list:
        return [[entry.to_poly() for entry in row] for row in self.entries]

    def to_exprs(self, store: ExprStore | None = None) -> list[list[NCExpr]]:
        store = store or default_store()
        return [[entry.to_expr(store) for entry in row] for row in self.entries]

    def to_texts(self) -> list[list[str]]:
        return [[entry.to_text() for entry in row] for row in self.entries]


def _bareiss(rows: list) -> object:
    """Fraction-free determinant of a square matrix of polynomials."""
    a = [list(row) for row in rows]
    n = len(a)
    if n == 0:
        return POLY_RING.one
    sign = 1
    previous = POLY_RING.one
    for k in range(n - 1):
        if not a[k][k]:
            swap = next((i for i in range(k + 1, n) if a[i][k]), None)
            if swap is None:
                return POLY_RING.zero
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]).exquo(previous)
        previous = a[k][k]
    return a[n - 1][n - 1] if sign > 0 else -a[n - 1][n - 1]


def comm_det(m: VMatrix):
    """
    The commutative determinant of m as a polynomial in x, y.

    Computed by fraction-free Bareiss elimination with row swaps.

    Examples:
        >>> comm_det(VMatrix.from_texts([["x", "1"], ["1", "y"]])) == X * Y - 1
        True
    """
    return _bareiss(m.comm_rows())


def _numeric_det(rows: list[list[Fraction]]) -> Fraction:
    a = [list(row) for row in rows]
    n = len(a)
    det = Fraction(1)
    for k in range(n):
        pivot = next((i for i in range(k, n) if a[i][k]), None)
        if pivot is None:
            return Fraction(0)
        if pivot != k:
            a[k], a[pivot] = a[pivot], a[k]
            det = -det
        det *= a[k][k]
        for i in range(k + 1, n):
            factor = a[i][k] / a[k][k]
            if factor:
                for j in range(k, n):
                    a[i][j] -= factor * a[k][j]
    return det


class _MinorTest:
    """Nonzero test for minors: cheap evaluations first, exact Bareiss only when all vanish."""

    def __init__(self, m: VMatrix, seed: int):
        self.m = m
        rng = np.random.default_rng(seed)
        self.points = [tuple(Fraction(int(v)) for v in rng.integers(-MINOR_RANGE, MINOR_RANGE + 1, size=2)) for _ in range(MINOR_POINTS)]
        self.values = [[[entry.at(*p) for entry in row] for row in m.entries] for p in self.points]

    def nonzero(self, rows, cols) -> bool:
        if not rows:
            return True
        for grid in self.values:
            if _numeric_det([[grid[r][c] for c in cols] for r in rows]):
                return True
        return bool(_bareiss(self.m.submatrix(rows, cols).comm_rows()))


def _permutation_sign(perm) -> int:
    sign = 1
    for i, j in itertools.combinations(range(len(perm)), 2):
        if perm[i] > perm[j]:
            sign = -sign
    return sign


def _choose_pivots(m: VMatrix, minors: _MinorTest) -> list[tuple[int, int]]:
    k = m.size
    rows: list[int] = []
    cols: list[int] = []
    for _ in range(k - 1):
        choice = None
        for r in range(k):
            if r in rows:
                continue
            for c in range(k):
                if c not in cols and minors.nonzero(rows + [r], cols + [c]):
                    choice = (r, c)
                    break
            if choice:
                break
        if choice is None:
            raise SingularCommDet("no pivot chain with nonzero minors exists")
        rows.append(choice[0])
        cols.append(choice[1])
        log.debug("pivot %d chosen at %s", len(rows), choice)
    return list(zip(rows, cols))


def _check_pivots(m: VMatrix, pivots, minors: _MinorTest) -> list[tuple[int, int]]:
    k = m.size
    pivots = [tuple(p) for p in pivots]
    if len(pivots) not in (k - 1, k):
        raise SingularCommDet(f"a {k}x{k} matrix takes {k - 1} or {k} pivots, got {len(pivots)}")
    rows = [r for r, _ in pivots]
    cols = [c for _, c in pivots]
    if len(set(rows)) != len(rows) or len(set(cols)) != len(cols) or not all(0 <= v < k for v in rows + cols):
        raise SingularCommDet(f"pivot sequence {pivots} is not a partial permutation")
    # with k distinct pivots the last one is the leftover (row, col)
    pivots, rows, cols = pivots[: k - 1], rows[: k - 1], cols[: k - 1]
    for depth in range(1, k):
        if not minors.nonzero(rows[:depth], cols[:depth]):
            raise SingularCommDet(f"pivot minor of size {depth} for {pivots} vanishes")
    return pivots


@dataclass(frozen=True, eq=False)
class Decomposition:
    """
    A pivoted factorization U * M~ = T of a V-matrix.

    Attributes:
        source: the matrix that was decomposed
        matrix: M~, the source with rows/columns permuted by row_perm/col_perm
        row_perm, col_perm: M~[i][j] = source[row_perm[i]][col_perm[j]]
        pivots: the (row, col) pivot positions in the source, in order
        U: lower triangular, last diagonal entry 1
        T: upper triangular with diagonal (1, ..., 1, delta)
        delta: the designated element
        sign: det(M~) = sign * det(source)
    """

    source: VMatrix
    matrix: VMatrix
    row_perm: tuple[int, ...]
    col_perm: tuple[int, ...]
    pivots: tuple[tuple[int, int], ...]
    U: tuple[tuple[NCExpr, ...], ...]
    T: tuple[tuple[NCExpr, ...], ...]
    delta: NCExpr
    sign: int

    @property
    def size(self) -> int:
        return self.matrix.size

    @property
    def store(self) -> ExprStore:
        return self.delta.store

    @property
    def pivot_block(self) -> VMatrix | None:
        """M~', the leading (k-1) x (k-1) block; None for 1x1 matrices."""
        k = self.size
        if k == 1:
            return None
        return self.matrix.submatrix(range(k - 1), range(k - 1))

    def pivot_det(self):
        block = self.pivot_block
        return POLY_RING.one if block is None else comm_det(block)

    def ratio_law_holds(self) -> bool:
        """phi(delta) * det(M~') == det(M~), exactly."""
        lhs = commutativize(self.delta) * CommRat(self.pivot_det())
        return lhs == CommRat(comm_det(self.matrix))

    def factorization_residual(self) -> list[list[NCExpr]]:
        """U * M~ - T entrywise; every entry is zero in the algebra."""
        product = nc_matmul([list(row) for row in self.U], self.matrix.to_exprs(self.store))
        return [[p - t for p, t in zip(prow, trow)] for prow, trow in zip(product, self.T)]

    def to_dict(self) -> dict:
        return {
            "k": self.size,
            "pivots": [list(p) for p in self.pivots],
            "row_perm": list(self.row_perm),
            "col_perm": list(self.col_perm),
            "delta": str(self.delta),
            "comm": commutativize(self.delta).to_text(),
            "pivot_det": CommRat(self.pivot_det()).to_text(),
            "det": CommRat(comm_det(self.matrix)).to_text(),
            "matrix": self.matrix.to_texts(),
        }


def nc_matmul(a: list[list[NCExpr]], b: list[list[NCExpr]]) -> list[list[NCExpr]]:
    """Product of two matrices over the algebra (factor order preserved)."""
    n, inner, m = len(a), len(b), len(b[0])
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            total = a[i][0] * b[0][j]
            for t in range(1, inner):
                total = total + a[i][t] * b[t][j]
            row.append(total)
        out.append(row)
    return out


def decompose(m: VMatrix, pivots=None, store: ExprStore | None = None) -> Decomposition:
    """
    Factor m by pivoted noncommutative row elimination.

    Without an explicit pivot sequence the pivots are chosen greedily: at
    each step the lexicographically least (row, col) among the unused rows
    and columns whose enlarged pivot minor has nonzero commutative
    determinant. Each step scales the pivot row by the inverse pivot from
    the left and clears the entries below it.

    Args:
        m: the V-matrix
        pivots: optional sequence of k-1 (or k) (row, col) positions
        store: expression store for the result

    Returns:
        Decomposition: with delta = c - a M'^-1 b for the block form of M~

    Raises:
        SingularCommDet: if comm_det(m) == 0 or the pivot sequence is invalid

    Examples:
        >>> d = decompose(VMatrix.from_texts([["x", "1"], ["1", "y"]]))
        >>> str(d.delta)
        'y - inv(x)'
    """
    store = store or default_store()
    if not comm_det(m):
        raise SingularCommDet("matrix has zero commutative determinant")
    k = m.size
    minors = _MinorTest(m, get_settings().seed)
    chain = _choose_pivots(m, minors) if pivots is None else _check_pivots(m, pivots, minors)
    rows = [r for r, _ in chain]
    cols = [c for _, c in chain]
    row_perm = tuple(rows + [r for r in range(k) if r not in rows])
    col_perm = tuple(cols + [c for c in range(k) if c not in cols])
    permuted = m.permuted(row_perm, col_perm)

    zero, one = const(0, store), const(1, store)
    work = permuted.to_exprs(store)
    u = [[one if i == j else zero for j in range(k)] for i in range(k)]
    for p in range(k - 1):
        pivot_inv = inv(work[p][p])
        work[p] = [pivot_inv * w for w in work[p]]
        work[p][p] = one
        u[p] = [pivot_inv * v for v in u[p]]
        for i in range(p + 1, k):
            factor = work[i][p]
            if factor.is_const(0):
                continue
            work[i] = [w - factor * q for w, q in zip(work[i], work[p])]
            work[i][p] = zero
            u[i] = [v - factor * q for v, q in zip(u[i], u[p])]

    decomposition = Decomposition(
        source=m,
        matrix=permuted,
        row_perm=row_perm,
        col_perm=col_perm,
        pivots=tuple(chain),
        U=tuple(tuple(row) for row in u),
        T=tuple(tuple(row) for row in work),
        delta=work[k - 1][k - 1],
        sign=_permutation_sign(row_perm) * _permutation_sign(col_perm),
    )
    log.debug("decomposed %dx%d matrix, pivots %s, delta %s", k, k, chain, decomposition.delta)
    return decomposition


def nc_inverse(m: VMatrix, decomposition: Decomposition | None = None, store: ExprStore | None = None) -> list[list[NCExpr]]:
    """
    The inverse of m over the algebra.

    T is inverted by back-substitution (its last diagonal entry is delta,
    the others 1), then M~^-1 = T^-1 U and the permutations are undone.

    Raises:
        SingularCommDet: if comm_det(m) == 0

    Examples:
        >>> str(nc_inverse(VMatrix.from_texts([["x"]]))[0][0])
        'inv(x)'
    """
    d = decomposition or decompose(m, store=store)
    store = d.store
    k = d.size
    zero, one = const(0, store), const(1, store)
    t = d.T
    t_inv: list[list[NCExpr]] = [[zero] * k for _ in range(k)]
    t_inv[k - 1][k - 1] = inv(d.delta)
    for i in range(k - 2, -1, -1):
        for j in range(k):
            total = one if i == j else zero
            for s in range(i + 1, k):
                if not t[i][s].is_const(0):
                    total = total - t[i][s] * t_inv[s][j]
            t_inv[i][j] = total
    permuted_inv = nc_matmul(t_inv, [list(row) for row in d.U])
    result: list[list[NCExpr]] = [[zero] * k for _ in range(k)]
    for i in range(k):
        for j in range(k):
            result[d.col_perm[i]][d.row_perm[j]] = permuted_inv[i][j]
    return result


def _unit_column(size: int, index: int) -> list[VEntry]:
    return [ONE_ENTRY if i == index else ZERO_ENTRY for i in range(size)]


def _identity_chain(size: int) -> list[tuple[int, int]]:
    return [(i, i) for i in range(size - 1)]


def closure_inverse(d: Decomposition) -> tuple[VMatrix, Decomposition]:
    """
    A V-matrix whose designated element is delta^-1.

    Borders the permuted matrix as P = [[M~, e_k], [-e_k^t, 0]]; its Schur
    complement is e_k^t M~^-1 e_k = delta^-1.

    Examples:
        >>> d = decompose(VMatrix.from_texts([["x"]]))
        >>> p, dp = closure_inverse(d)
        >>> p.to_texts(), str(dp.delta)
        ([['x', '1'], ['-1', '0']], 'inv(x)')
    """
    k = d.size
    base = d.matrix
    e = _unit_column(k, k - 1)
    rows = [list(base.entries[i]) + [e[i]] for i in range(k)]
    rows.append([-entry for entry in e] + [ZERO_ENTRY])
    p = VMatrix(tuple(tuple(row) for row in rows))
    return p, decompose(p, _identity_chain(k + 1), d.store)


def _join_blocks(top: list[list[VEntry]], bottom: list[list[VEntry]]) -> VMatrix:
    return VMatrix(tuple(tuple(row) for row in top + bottom))


def closure_product(dm: Decomposition, dn: Decomposition) -> tuple[VMatrix, Decomposition]:
    """
    A V-matrix whose designated element is -delta2 * delta1.

    With M~ = [M0 | M1] and N~ = [N0 | N1] split off their last columns,

        P = [[M0, e_k, 0, M1],
             [0,  N1,  N0, 0]]

    of size k + l.

    Examples:
        >>> dx = decompose(VMatrix.from_texts([["x"]]))
        >>> dy = decompose(VMatrix.from_texts([["y"]]))
        >>> closure_product(dx, dy)[0].to_texts()
        [['1', 'x'], ['y', '0']]
    """
    k, l = dm.size, dn.size
    mt, nt = dm.matrix, dn.matrix
    e = _unit_column(k, k - 1)
    top = [list(mt.entries[i][: k - 1]) + [e[i]] + [ZERO_ENTRY] * (l - 1) + [mt.entries[i][k - 1]] for i in range(k)]
    bottom = [[ZERO_ENTRY] * (k - 1) + [nt.entries[i][l - 1]] + list(nt.entries[i][: l - 1]) + [ZERO_ENTRY] for i in range(l)]
    p = _join_blocks(top, bottom)
    return p, decompose(p, _identity_chain(k + l), dm.store)


def closure_sum(dm: Decomposition, dn: Decomposition) -> tuple[VMatrix, Decomposition]:
    """
    A V-matrix whose designated element is delta1 + delta2.

    The last column of M~ is negated so the first block contributes
    -delta1:

        P = [[M0, e_k, 0,  -M1],
             [0,  e_l, N0,  N1]]

    Raises:
        DegenerateSum: if phi(delta1) + phi(delta2) == 0
    """
    total = commutativize(dm.delta) + commutativize(dn.delta)
    if total.is_zero:
        raise DegenerateSum(f"commutative sum of {dm.delta} and {dn.delta} vanishes")
    k, l = dm.size, dn.size
    mt, nt = dm.matrix, dn.matrix
    ek, el = _unit_column(k, k - 1), _unit_column(l, l - 1)
    top = [list(mt.entries[i][: k - 1]) + [ek[i]] + [ZERO_ENTRY] * (l - 1) + [-mt.entries[i][k - 1]] for i in range(k)]
    bottom = [[ZERO_ENTRY] * (k - 1) + [el[i]] + list(nt.entries[i][: l - 1]) + [nt.entries[i][l - 1]] for i in range(l)]
    p = _join_blocks(top, bottom)
    return p, decompose(p, _identity_chain(k + l), dm.store)


def random_vmatrix(rng: np.random.Generator, k: int, low: int = -2, high: int = 2, nonsingular: bool = True) -> VMatrix:
    """
    A random k x k V-matrix with integer coefficients in [low, high].

    With nonsingular=True, draws are repeated until comm_det is nonzero.
    """
    while True:
        coeffs = rng.integers(low, high + 1, size=(k, k, 3))
        m = VMatrix(tuple(tuple(VEntry(*(int(v) for v in coeffs[i, j])) for j in range(k)) for i in range(k)))
        if not nonsingular or comm_det(m):
            return m
