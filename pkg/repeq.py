"""
Representation Equality Module

This module evaluates expressions in the matrix-series representations

    x -> x*Id + eps*S,    y -> y*Id + eps*T

with coefficients in Q(x, y)[[eps]] truncated at eps^N, and builds the
three-tier equality oracle on top of them:

1. different commutativizations      -> CommDistinct (a certificate)
2. some seeded (S, T) tells them apart -> NCDistinct with a replayable witness
3. every trial agrees                -> ProbablyEqual (not a proof)

The constant term of every representation is phi(e)*Id, so the inversions
met while representing a gated expression always have an invertible
scalar constant term. Trials of the oracle evaluate at seeded integer points
for x and y, where the same recursions run over Fractions.
"""

import hashlib
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

import numpy as np

from commrat import CX, CY, ONE, ZERO, CommRat, commutativize, equals, fraction_to_text
from config import Settings, get_settings
from errors import InternalGateViolation, NonUnitConstantTerm, SingularConstantTerm
from ncexpr import NCExpr, NodeKind, topological_order

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TruncSeries:
    """
    A power series c0 + c1*eps + ... + cN*eps^N with CommRat coefficients.

    Products and inverses are truncated beyond eps^N.
    """

    coeffs: tuple[CommRat, ...]

    def __post_init__(self):
        if not self.coeffs:
            raise ValueError("a truncated series needs at least the constant term")

    @classmethod
    def constant(cls, value, order: int) -> "TruncSeries":
        value = value if isinstance(value, CommRat) else CommRat.constant(value)
        return cls((value,) + (ZERO,) * order)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def _check(self, other: "TruncSeries"):
        if other.order != self.order:
            raise ValueError(f"series orders differ: {self.order} and {other.order}")

    def __add__(self, other: "TruncSeries") -> "TruncSeries":
        self._check(other)
        return TruncSeries(tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> "TruncSeries":
        return TruncSeries(tuple(-a for a in self.coeffs))

    def __sub__(self, other: "TruncSeries") -> "TruncSeries":
        return self + (-other)

    def __mul__(self, other: "TruncSeries") -> "TruncSeries":
        self._check(other)
        out = []
        for n in range(self.order + 1):
            total = ZERO
            for j in range(n + 1):
                a, b = self.coeffs[j], other.coeffs[n - j]
                if not (a.is_zero or b.is_zero):
                    total = total + a * b
            out.append(total)
        return TruncSeries(tuple(out))

    def inverse(self) -> "TruncSeries":
        """
        Multiplicative inverse by the recursion d_n = -d0 * sum c_j d_{n-j}.

        Raises:
            NonUnitConstantTerm: if the constant term is zero
        """
        c0 = self.coeffs[0]
        if c0.is_zero:
            raise NonUnitConstantTerm("series with zero constant term is not invertible")
        d0 = c0.inverse()
        out = [d0]
        for n in range(1, self.order + 1):
            total = ZERO
            for j in range(1, n + 1):
                if not self.coeffs[j].is_zero:
                    total = total + self.coeffs[j] * out[n - j]
            out.append(-(d0 * total))
        return TruncSeries(tuple(out))

    def __eq__(self, other):
        if not isinstance(other, TruncSeries) or other.order != self.order:
            return NotImplemented
        return all(equals(a, b) for a, b in zip(self.coeffs, other.coeffs))

    __hash__ = None


def series_arith(op: str, a: TruncSeries, b: TruncSeries | None = None) -> TruncSeries:
    """
    Truncated ring operations on series by name ("add", "sub", "mul", "neg", "inv").

    Raises:
        NonUnitConstantTerm: for inv of a series with zero constant term
        ValueError: for an unknown operation
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
    raise ValueError(f"unknown series operation {op!r}")


def _zero_like(value):
    return value * 0


def _filled(k: int, value) -> np.ndarray:
    out = np.empty((k, k), dtype=object)
    out.fill(value)
    return out


def _identity(k: int, value=ONE) -> np.ndarray:
    out = _filled(k, _zero_like(value))
    for i in range(k):
        out[i, i] = value
    return out


def _is_zero(m: np.ndarray) -> bool:
    return not any(m.flat)


def _scalar_of(m: np.ndarray):
    """The c with m == c*Id, or None when m is not scalar."""
    k = m.shape[0]
    c = m[0, 0]
    for i in range(k):
        for j in range(k):
            entry = m[i, j]
            if i == j:
                if not entry == c:
                    return None
            elif entry:
                return None
    return c


def _scale(c, m: np.ndarray) -> np.ndarray:
    out = np.empty(m.shape, dtype=object)
    for index, entry in np.ndenumerate(m):
        out[index] = c * entry
    return out


def _invert_constant(a0: np.ndarray) -> np.ndarray:
    """Invert a matrix over Q(x, y) or Q by Gauss-Jordan elimination."""
    k = a0.shape[0]
    scalar = _scalar_of(a0)
    if scalar is not None:
        if not scalar:
            raise SingularConstantTerm("constant-term matrix is zero")
        return _identity(k, 1 / scalar)
    one = _zero_like(a0[0, 0]) + 1
    work = np.concatenate([a0.copy(), _identity(k, one)], axis=1)
    for col in range(k):
        pivot = next((r for r in range(col, k) if work[r, col]), None)
        if pivot is None:
            raise SingularConstantTerm("constant-term matrix is singular")
        if pivot != col:
            work[[col, pivot]] = work[[pivot, col]]
        factor = 1 / work[col, col]
        work[col] = [factor * c for c in work[col]]
        for r in range(k):
            if r != col and work[r, col]:
                f = work[r, col]
                work[r] = [a - f * b for a, b in zip(work[r], work[col])]
    return work[:, k:]


def _coefficient_text(c) -> str:
    return c.to_text() if isinstance(c, CommRat) else fraction_to_text(c)


@dataclass(frozen=True, eq=False)
class SeriesMatrix:
    """
    A k x k matrix over Q(x, y)[[eps]]/eps^(N+1).

    Stored as the N+1 coefficient matrices (numpy object arrays of CommRat),
    coeffs[n] being the coefficient of eps^n.
    Coefficients specialized at a rational point are Fractions instead.
    """

    coeffs: tuple[np.ndarray, ...]

    @classmethod
    def scalar(cls, value, k: int, order: int) -> "SeriesMatrix":
        return cls((_identity(k, value),) + tuple(_filled(k, _zero_like(value)) for _ in range(order)))

    @classmethod
    def identity(cls, k: int, order: int) -> "SeriesMatrix":
        return cls.scalar(ONE, k, order)

    @classmethod
    def from_integer_rows(cls, c0, rows, order: int) -> "SeriesMatrix":
        """c0*Id + eps*R for an integer matrix R; c0 is a CommRat or a Fraction."""
        k = len(rows)
        zero = _zero_like(c0)
        first = np.empty((k, k), dtype=object)
        for i, row in enumerate(rows):
            for j, v in enumerate(row):
                first[i, j] = zero + int(v)
        coeffs = [_identity(k, c0)]
        if order >= 1:
            coeffs.append(first)
        coeffs.extend(_filled(k, zero) for _ in range(order - 1))
        return cls(tuple(coeffs))

    @property
    def size(self) -> int:
        return self.coeffs[0].shape[0]

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def entry(self, i: int, j: int) -> TruncSeries:
        return TruncSeries(tuple(c[i, j] for c in self.coeffs))

    def __add__(self, other: "SeriesMatrix") -> "SeriesMatrix":
        return SeriesMatrix(tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> "SeriesMatrix":
        return SeriesMatrix(tuple(-a for a in self.coeffs))

    def __sub__(self, other: "SeriesMatrix") -> "SeriesMatrix":
        return self + (-other)

    def __matmul__(self, other: "SeriesMatrix") -> "SeriesMatrix":
        k, order = self.size, self.order
        a_zero = [_is_zero(c) for c in self.coeffs]
        b_zero = [_is_zero(c) for c in other.coeffs]
        out = []
        for n in range(order + 1):
            total = None
            for j in range(n + 1):
                if a_zero[j] or b_zero[n - j]:
                    continue
                term = self.coeffs[j] @ other.coeffs[n - j]
                total = term if total is None else total + term
            out.append(total if total is not None else _filled(k, _zero_like(self.coeffs[0][0, 0])))
        return SeriesMatrix(tuple(out))

    def inverse(self) -> "SeriesMatrix":
        return mat_inverse(self)

    def first_difference(self, other: "SeriesMatrix") -> tuple[int, int, int] | None:
        """
        First (eps-degree, row, column) where the two matrices differ.

        Degrees are scanned first, then positions in row-major order.
        """
        for degree, (a, b) in enumerate(zip(self.coeffs, other.coeffs)):
            for (i, j), entry in np.ndenumerate(a):
                if not entry == b[i, j]:
                    return degree, i, j
        return None

    def __eq__(self, other):
        if not isinstance(other, SeriesMatrix):
            return NotImplemented
        return self.size == other.size and self.order == other.order and self.first_difference(other) is None

    __hash__ = None

    def to_rows(self) -> list:
        """Coefficient matrices as nested lists of canonical text, by eps-degree."""
        return [[[_coefficient_text(entry) for entry in row] for row in c] for c in self.coeffs]


def mat_inverse(m: SeriesMatrix) -> SeriesMatrix:
    """
    Invert a series matrix.

    The constant term is inverted by Gauss-Jordan elimination over Q(x, y)
    (directly when it is scalar); higher coefficients follow from
    D_n = -D_0 * sum_{j=1..n} A_j D_{n-j}.

    Raises:
        SingularConstantTerm: if the constant-term matrix is singular

    Examples:
        >>> SeriesMatrix.identity(2, 3).inverse() == SeriesMatrix.identity(2, 3)
        True
    """
    k, order = m.size, m.order
    d0 = _invert_constant(m.coeffs[0])
    scalar = _scalar_of(d0)
    out = [d0]
    for n in range(1, order + 1):
        total = None
        for j in range(1, n + 1):
            if _is_zero(m.coeffs[j]):
                continue
            term = m.coeffs[j] @ out[n - j]
            total = term if total is None else total + term
        if total is None:
            out.append(_filled(k, _zero_like(d0[0, 0])))
        elif scalar is not None:
            out.append(_scale(-scalar, total))
        else:
            out.append(-(d0 @ total))
    return SeriesMatrix(tuple(out))


def derive_seed(master: int, k: int, trial: int) -> int:
    """64-bit trial seed hashed from (master seed, size, trial index)."""
    digest = hashlib.blake2b(f"{master}:{k}:{trial}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


@dataclass(frozen=True)
class RepEnv:
    """One representation: size k, truncation order N and the integer matrices S, T."""

    k: int
    order: int
    S: tuple[tuple[int, ...], ...]
    T: tuple[tuple[int, ...], ...]
    seed: int = 0

    def __post_init__(self):
        if self.k < 1 or self.order < 1:
            raise ValueError(f"need k >= 1 and N >= 1, got k={self.k}, N={self.order}")
        for name, mat in (("S", self.S), ("T", self.T)):
            if len(mat) != self.k or any(len(row) != self.k for row in mat):
                raise ValueError(f"{name} must be {self.k}x{self.k}")

    @classmethod
    def derive(cls, master: int, k: int, trial: int, order: int, bound: int) -> "RepEnv":
        """
        The environment for one trial: S and T uniform in [-bound, bound].

        Examples:
            >>> RepEnv.derive(7, 2, 0, 4, 3) == RepEnv.derive(7, 2, 0, 4, 3)
            True
        """
        seed = derive_seed(master, k, trial)
        rng = np.random.default_rng(seed)
        s = rng.integers(-bound, bound + 1, size=(k, k))
        t = rng.integers(-bound, bound + 1, size=(k, k))
        return cls(k, order, _as_rows(s), _as_rows(t), seed)

    def to_dict(self) -> dict:
        return {"k": self.k, "N": self.order, "seed": self.seed, "S": [list(r) for r in self.S], "T": [list(r) for r in self.T]}

    @classmethod
    def from_dict(cls, data: dict) -> "RepEnv":
        return cls(int(data["k"]), int(data["N"]), _as_rows(data["S"]), _as_rows(data["T"]), int(data.get("seed", 0)))


def _as_rows(matrix) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(int(v) for v in row) for row in matrix)


def represent(e: NCExpr, env: RepEnv, memo: dict | None = None, point: tuple[Fraction, Fraction] | None = None) -> SeriesMatrix:
    """
    Evaluate e in the representation described by env.

    With a point (a, b) the evaluation is specialized at x = a, y = b: the
    coefficients are Fractions, and each one is the value at (a, b) of the
    corresponding coefficient over Q(x, y).

    Args:
        e: a gated expression
        env: size, order and the matrices S, T
        memo: optional node-id -> SeriesMatrix cache for this env (and point),
            shared between expressions of the same store
        point: optional rational values for x and y

    Returns:
        SeriesMatrix: the image of e

    Raises:
        InternalGateViolation: if an inversion meets a singular constant term
        SingularConstantTerm: with a point, when an inverted subexpression
            vanishes there
    """
    memo = {} if memo is None else memo
    if e.id in memo:
        return memo[e.id]
    store, k, order = e.store, env.k, env.order
    if point is None:
        x_value, y_value, constant = CX, CY, CommRat.constant
    else:
        x_value, y_value, constant = Fraction(point[0]), Fraction(point[1]), Fraction
    for nid in topological_order(e, skip=memo):
        node = store.node(nid)
        kind = node.kind
        if kind is NodeKind.CONST:
            value = SeriesMatrix.scalar(constant(node.value), k, order)
        elif kind is NodeKind.VAR_X:
            value = SeriesMatrix.from_integer_rows(x_value, env.S, order)
        elif kind is NodeKind.VAR_Y:
            value = SeriesMatrix.from_integer_rows(y_value, env.T, order)
        elif kind is NodeKind.ADD:
            value = memo[node.children[0]] + memo[node.children[1]]
        elif kind is NodeKind.NEG:
            value = -memo[node.children[0]]
        elif kind is NodeKind.MUL:
            value = memo[node.children[0]] @ memo[node.children[1]]
        else:
            try:
                value = mat_inverse(memo[node.children[0]])
            except SingularConstantTerm as exc:
                if point is not None:
                    raise
                raise InternalGateViolation(f"inversion node {nid} has a singular constant term") from exc
        memo[nid] = value
    return memo[e.id]


@dataclass(frozen=True)
class EqConfig:
    """Trial protocol for eq_nc: sizes, truncation order, trials per size, entry bound, master seed."""

    sizes: tuple[int, ...] = (2, 3)
    order: int = 4
    trials: int = 10
    bound: int = 3
    seed: int = 0

    @classmethod
    def from_settings(cls, settings: Settings | None = None, **overrides) -> "EqConfig":
        settings = settings or get_settings()
        values = {
            "sizes": tuple(settings.sizes),
            "order": settings.order,
            "trials": settings.trials,
            "bound": settings.bound,
            "seed": settings.seed,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        values["sizes"] = tuple(values["sizes"])
        return cls(**values)

    def to_dict(self) -> dict:
        return {"sizes": list(self.sizes), "N": self.order, "trials": self.trials, "bound": self.bound, "seed": self.seed}


@dataclass(frozen=True)
class Witness:
    """A representation and matrix position where two expressions differ."""

    env: RepEnv
    position: tuple[int, int]
    epsilon_degree: int

    def to_dict(self) -> dict:
        data = self.env.to_dict()
        data["position"] = list(self.position)
        data["epsilon_degree"] = self.epsilon_degree
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "Witness":
        i, j = data["position"]
        return cls(RepEnv.from_dict(data), (int(i), int(j)), int(data["epsilon_degree"]))


@dataclass(frozen=True, eq=False)
class CommDistinct:
    difference: CommRat
    name = "CommDistinct"
    is_distinct = True

    def to_dict(self) -> dict:
        return {"verdict": self.name, "difference": self.difference.to_text()}


@dataclass(frozen=True)
class NCDistinct:
    witness: Witness
    name = "NCDistinct"
    is_distinct = True

    def to_dict(self) -> dict:
        return {"verdict": self.name, "witness": self.witness.to_dict()}


@dataclass(frozen=True)
class ProbablyEqual:
    trials: int
    name = "ProbablyEqual"
    is_distinct = False

    def to_dict(self) -> dict:
        return {"verdict": self.name, "trials": self.trials}


EqVerdict = Union[CommDistinct, NCDistinct, ProbablyEqual]

VERDICT_NAMES = ("CommDistinct", "NCDistinct", "ProbablyEqual")


@dataclass
class RepCache:
    """Per-environment representation memos, reusable across eq_nc calls on one store."""

    memos: dict = field(default_factory=dict)

    def memo(self, env: RepEnv, point: tuple[Fraction, Fraction] | None = None) -> dict:
        return self.memos.setdefault((env, point), {})


POINT_RANGE = 1000
POINT_ATTEMPTS = 4


def trial_point(env: RepEnv, attempt: int = 0) -> tuple[Fraction, Fraction]:
    """
    The integer point (a, b) at which a trial specializes x and y.

    Drawn from the trial seed, so a trial is reproducible from its
    environment alone.

    Examples:
        >>> env = RepEnv.derive(7, 2, 0, 4, 3)
        >>> trial_point(env) == trial_point(env)
        True
    """
    rng = np.random.default_rng([env.seed, attempt])
    a, b = rng.integers(-POINT_RANGE, POINT_RANGE + 1, size=2)
    return Fraction(int(a)), Fraction(int(b))


def _trial_difference(e1: NCExpr, e2: NCExpr, env: RepEnv, cache: RepCache) -> tuple[int, int, int] | None:
    """First difference of the two representations, checked at seeded points of Q^2."""
    for attempt in range(POINT_ATTEMPTS):
        point = trial_point(env, attempt)
        memo = cache.memo(env, point)
        try:
            return represent(e1, env, memo, point).first_difference(represent(e2, env, memo, point))
        except SingularConstantTerm:
            log.debug("trial point %s meets a vanishing inverse, redrawing", point)
    memo = cache.memo(env)
    return represent(e1, env, memo).first_difference(represent(e2, env, memo))


def eq_nc(e1: NCExpr, e2: NCExpr, cfg: EqConfig | None = None, cache: RepCache | None = None) -> EqVerdict:
    """
    Compare two expressions in the algebra.

    Trials run in a fixed order (sizes as listed, then trial index), so the
    first witness found is always the lowest (k, trial) one. Each trial
    specializes x and y at a seeded integer point; a coefficient that differs
    there differs over Q(x, y) too, so the witness replays through represent.

    Args:
        e1: first gated expression
        e2: second gated expression, same store
        cfg: trial protocol (defaults from settings)
        cache: optional representation cache shared with other calls

    Returns:
        EqVerdict: CommDistinct, NCDistinct or ProbablyEqual

    Examples:
        >>> from ncexpr import var_x, var_y
        >>> x, y = var_x(), var_y()
        >>> eq_nc(x * y, y * x).name
        'NCDistinct'
        >>> eq_nc(x + y, y + x).name
        'ProbablyEqual'
    """
    cfg = cfg or EqConfig.from_settings()
    if e1.store is not e2.store:
        raise ValueError("expressions belong to different stores")
    difference = commutativize(e1) - commutativize(e2)
    if not difference.is_zero:
        log.debug("eq_nc: commutativizations differ by %s", difference)
        return CommDistinct(difference.reduce())
    if e1 == e2:
        return ProbablyEqual(0)
    cache = cache or RepCache()
    for k in cfg.sizes:
        for trial in range(cfg.trials):
            env = RepEnv.derive(cfg.seed, k, trial, cfg.order, cfg.bound)
            found = _trial_difference(e1, e2, env, cache)
            if found is not None:
                degree, i, j = found
                log.debug("eq_nc: k=%d trial=%d separates at eps^%d (%d, %d)", k, trial, degree, i, j)
                return NCDistinct(Witness(env, (i, j), degree))
    return ProbablyEqual(len(cfg.sizes) * cfg.trials)


def replay_witness(e1: NCExpr, e2: NCExpr, witness: Witness) -> tuple[CommRat, CommRat]:
    """
    Recompute both representations at the witness environment.

    Returns:
        tuple: the two coefficients at the witness position and eps-degree;
        they differ whenever the witness came from eq_nc on these inputs
    """
    memo: dict = {}
    m1 = represent(e1, witness.env, memo)
    m2 = represent(e2, witness.env, memo)
    i, j = witness.position
    degree = witness.epsilon_degree
    return m1.coeffs[degree][i, j], m2.coeffs[degree][i, j]
