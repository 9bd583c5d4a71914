"""
Cremona Action Module

Noncommutative Cremona group elements acting on the algebra by
substitution, their composition, and the machine check of the defining
relations up to inner automorphisms.

Composition convention: maps are written as image pairs and composed by
juxtaposition, with act(f*g, e) = act(g, act(f, e)). Concretely
compose(f, g) substitutes g's images into f's images. This is the
orientation under which

    tau*e      : (x, y) -> (y^-1 x, x)
    (tau*e)^2  : (x, y) -> (x^-1 y^-1 x, y^-1 x)

come out as written, with e = t_a for a = (0 x; 1 0).
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from commrat import CX, CY, ONE, ZERO, POLY_RING, X, CommRat, commutativize, jacobian_det, qq_to_fraction
from errors import DependentImages, SingularMatrix
from ncexpr import ExprStore, NCExpr, const, default_store, inv, random_expression, reverse, substitute, var_x, var_y
from repeq import VERDICT_NAMES, EqConfig, EqVerdict, RepCache, eq_nc

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GL2Rat:
    """
    An invertible 2x2 matrix (P Q; R S) over Q(x).

    Raises:
        ValueError: if an entry depends on y
        SingularMatrix: if PS - QR is zero
    """

    P: CommRat
    Q: CommRat
    R: CommRat
    S: CommRat

    def __post_init__(self):
        for name in ("P", "Q", "R", "S"):
            entry = getattr(self, name)
            if not isinstance(entry, CommRat):
                object.__setattr__(self, name, _as_commrat(entry))
            if not getattr(self, name).is_univariate_x():
                raise ValueError(f"matrix entry {name} = {getattr(self, name)} depends on y")
        if self.det().is_zero:
            raise SingularMatrix(f"matrix {self.to_text()} has zero determinant")

    @classmethod
    def identity(cls) -> "GL2Rat":
        return cls(ONE, ZERO, ZERO, ONE)

    @classmethod
    def scalar(cls, d) -> "GL2Rat":
        return cls(d, ZERO, ZERO, d)

    def det(self) -> CommRat:
        return self.P * self.S - self.Q * self.R

    def __matmul__(self, other: "GL2Rat") -> "GL2Rat":
        return GL2Rat(
            self.P * other.P + self.Q * other.R,
            self.P * other.Q + self.Q * other.S,
            self.R * other.P + self.S * other.R,
            self.R * other.Q + self.S * other.S,
        )

    def entries(self) -> tuple[CommRat, CommRat, CommRat, CommRat]:
        return self.P, self.Q, self.R, self.S

    def to_text(self) -> str:
        p, q, r, s = (c.to_text() for c in self.entries())
        return f"[{p},{q};{r},{s}]"

    def __str__(self):
        return self.to_text()


def _as_commrat(value) -> CommRat:
    if isinstance(value, CommRat):
        return value
    return CommRat.constant(value)


def embed_univariate(c: CommRat, store: ExprStore | None = None) -> NCExpr:
    """
    Embed an element of Q(x) into the algebra.

    The reduced numerator and denominator are expanded as polynomials in x
    and joined by one guarded inversion. Expressions in x alone commute with
    each other, so the side the inverse goes on does not matter.
    """
    store = store or default_store()
    reduced = c.reduce()
    num = _embed_poly(reduced.numerator, store)
    if reduced.denominator == POLY_RING.one:
        return num
    return num * inv(_embed_poly(reduced.denominator, store))


def _embed_poly(p, store: ExprStore) -> NCExpr:
    x = var_x(store)
    result = const(0, store)
    for (i, _), coeff in p.terms():
        term = const(qq_to_fraction(coeff), store) * x ** i
        result = result + term
    return result


@dataclass(frozen=True)
class NCAuto:
    """
    The endomorphism x -> img_x, y -> img_y of the algebra.

    Raises:
        DependentImages: if the commutativized images have zero Jacobian
    """

    img_x: NCExpr
    img_y: NCExpr

    def __post_init__(self):
        if self.img_x.store is not self.img_y.store:
            raise ValueError("images belong to different stores")
        if jacobian_det(commutativize(self.img_x), commutativize(self.img_y)).is_zero:
            raise DependentImages(f"images ({self.img_x}, {self.img_y}) are algebraically dependent")

    @property
    def store(self) -> ExprStore:
        return self.img_x.store

    @classmethod
    def identity(cls, store: ExprStore | None = None) -> "NCAuto":
        store = store or default_store()
        return cls(var_x(store), var_y(store))

    def act(self, e: NCExpr) -> NCExpr:
        return substitute(e, self.img_x, self.img_y)

    def to_dict(self) -> dict:
        return {"x": str(self.img_x), "y": str(self.img_y)}


def act(f: NCAuto, e: NCExpr) -> NCExpr:
    """Apply f to e."""
    return f.act(e)


def t_auto(a: GL2Rat, store: ExprStore | None = None) -> NCAuto:
    """
    t_a : (x, y) -> (x, (y R + S)^-1 (y P + Q)).

    Examples:
        >>> t_auto(GL2Rat(ZERO, ONE, ONE, ZERO)).img_y == inv(var_y())
        True
    """
    store = store or default_store()
    x, y = var_x(store), var_y(store)
    p, q, r, s = (embed_univariate(c, store) for c in a.entries())
    return NCAuto(x, inv(y * r + s) * (y * p + q))


def p_auto(a: GL2Rat, store: ExprStore | None = None) -> NCAuto:
    """p_a : (x, y) -> (x, (P y + Q)(R y + S)^-1), the mirror image of t_a."""
    store = store or default_store()
    x, y = var_x(store), var_y(store)
    p, q, r, s = (embed_univariate(c, store) for c in a.entries())
    return NCAuto(x, (p * y + q) * inv(r * y + s))


def tau_auto(store: ExprStore | None = None) -> NCAuto:
    store = store or default_store()
    return NCAuto(var_y(store), var_x(store))


def inner_auto(r: NCExpr) -> NCAuto:
    """
    Conjugation (x, y) -> (r x r^-1, r y r^-1).

    Raises:
        CommutatorInverse: if r is not invertible
    """
    store = r.store
    r_inv = inv(r)
    return NCAuto(r * var_x(store) * r_inv, r * var_y(store) * r_inv)


def reverse_auto(f: NCAuto) -> NCAuto:
    """rho . f . rho, where rho is the reversal anti-automorphism."""
    return NCAuto(reverse(f.img_x), reverse(f.img_y))


def compose(f: NCAuto, g: NCAuto) -> NCAuto:
    """
    The product f*g, acting as act(f*g, e) = act(g, act(f, e)).

    Raises:
        DependentImages: propagated from substitution
    """
    return NCAuto(substitute(f.img_x, g.img_x, g.img_y), substitute(f.img_y, g.img_x, g.img_y))


@dataclass(frozen=True)
class Tau:
    def to_auto(self, store: ExprStore) -> NCAuto:
        return tau_auto(store)

    def to_text(self) -> str:
        return "tau"


@dataclass(frozen=True, eq=False)
class TMap:
    matrix: GL2Rat

    def to_auto(self, store: ExprStore) -> NCAuto:
        return t_auto(self.matrix, store)

    def to_text(self) -> str:
        return f"t{self.matrix.to_text()}"


@dataclass(frozen=True, eq=False)
class PMap:
    matrix: GL2Rat

    def to_auto(self, store: ExprStore) -> NCAuto:
        return p_auto(self.matrix, store)

    def to_text(self) -> str:
        return f"p{self.matrix.to_text()}"


@dataclass(frozen=True)
class Inner:
    conjugator: NCExpr

    def to_auto(self, store: ExprStore) -> NCAuto:
        return inner_auto(self.conjugator)

    def to_text(self) -> str:
        return f"inner({self.conjugator})"


Generator = Tau | TMap | PMap | Inner
CremonaWord = list


def word_to_text(word: CremonaWord) -> str:
    return " ".join(g.to_text() for g in word)


def word_to_auto(word: CremonaWord, store: ExprStore | None = None) -> NCAuto:
    """
    Fold a word left to right with compose; the empty word is the identity.

    Examples:
        >>> e = TMap(GL2Rat(ZERO, CX, ONE, ZERO))
        >>> str(word_to_auto([Tau(), e]).img_x)
        'inv(y)*x'
    """
    store = store or default_store()
    result = NCAuto.identity(store)
    for generator in word:
        result = compose(result, generator.to_auto(store))
    return result


def classical_action(word: CremonaWord) -> tuple[CommRat, CommRat]:
    """
    The image of the word in the classical Cremona group, as a pair of
    rational functions composed with the same convention as compose().
    """
    images = (CX, CY)
    for generator in word:
        step = _classical_generator(generator)
        images = (images[0].compose(*step), images[1].compose(*step))
    return images


def _classical_generator(generator: Generator) -> tuple[CommRat, CommRat]:
    if isinstance(generator, Tau):
        return CY, CX
    if isinstance(generator, (TMap, PMap)):
        a = generator.matrix
        return CX, (CY * a.P + a.Q) / (CY * a.R + a.S)
    return CX, CY


def shadow_matches(word: CremonaWord, f: NCAuto) -> bool:
    """True when the commutativized images of f equal the classical action of word."""
    cx, cy = classical_action(word)
    return commutativize(f.img_x) == cx and commutativize(f.img_y) == cy


def is_inner_with(f: NCAuto, r: NCExpr, cfg: EqConfig | None = None, cache: RepCache | None = None) -> tuple[EqVerdict, EqVerdict]:
    """
    Compare f with conjugation by r, image by image.

    Returns:
        tuple: (eq_nc(f.img_x, r x r^-1), eq_nc(f.img_y, r y r^-1))
    """
    conj = inner_auto(r)
    return eq_nc(f.img_x, conj.img_x, cfg, cache), eq_nc(f.img_y, conj.img_y, cfg, cache)


def _random_poly_x(rng: np.random.Generator, degree: int, bound: int = 2) -> CommRat:
    p = POLY_RING.zero
    for i in range(degree + 1):
        p += int(rng.integers(-bound, bound + 1)) * X ** i
    return CommRat(p)


def random_gl2(rng: np.random.Generator, degree: int = 2) -> GL2Rat:
    """A random invertible matrix with polynomial entries in x of degree <= degree."""
    while True:
        entries = [_random_poly_x(rng, degree) for _ in range(4)]
        try:
            return GL2Rat(*entries)
        except SingularMatrix:
            continue


def random_gl2_constant(rng: np.random.Generator, bound: int = 3) -> GL2Rat:
    """A random invertible matrix with integer entries in [-bound, bound]."""
    while True:
        entries = [CommRat.constant(int(v)) for v in rng.integers(-bound, bound + 1, size=4)]
        try:
            return GL2Rat(*entries)
        except SingularMatrix:
            continue


def random_scalar(rng: np.random.Generator, degree: int = 2) -> CommRat:
    """A random nonzero polynomial d(x)."""
    while True:
        d = _random_poly_x(rng, degree)
        if not d.is_zero:
            return d


SWAP = GL2Rat(ZERO, ONE, ONE, ZERO)
E_MATRIX = GL2Rat(ZERO, CX, ONE, ZERO)


def inversion_word() -> CremonaWord:
    """A word for (x, y) -> (x^-1, y^-1), built from tau and t-generators."""
    return [Tau(), TMap(SWAP), Tau(), TMap(SWAP)]


def cubic_relation_word() -> CremonaWord:
    """The word a^-1 (tau e)^3, with a^-1 = a the coordinatewise inversion."""
    return inversion_word() + [Tau(), TMap(E_MATRIX)] * 3


@dataclass(frozen=True)
class SuiteSizes:
    """Number of random samples per relation."""

    product: int = 20
    scalar: int = 10
    mobius: int = 10
    duality: int = 10
    degree: int = 2


RELATIONS = {
    "R1": "tau^2 = 1",
    "R2": "t_a t_b = t_(ab)",
    "R3": "t_d is conjugation by d(x)^-1",
    "R4": "tau t_m tau = ((cx+d)^-1 (ax+b), y)",
    "R5": "a^-1 (tau e)^3 is conjugation by x^-1 y",
    "R6": "rho t_a = p_a rho",
}


@dataclass
class _Tally:
    rows: list = field(default_factory=list)
    shadow: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)

    def record(self, relation: str, verdicts, shadow_ok: bool = True):
        for verdict in verdicts:
            self.rows.append({"relation": relation, "verdict": verdict.name})
            if verdict.is_distinct:
                log.warning("relation %s failed: %s", relation, verdict.to_dict())
        if not shadow_ok:
            self.shadow[relation] = self.shadow.get(relation, 0) + 1
            log.warning("relation %s: commutative shadow mismatch", relation)


def _images_equal(f: NCAuto, g: NCAuto, cfg: EqConfig, cache: RepCache) -> list[EqVerdict]:
    return [eq_nc(f.img_x, g.img_x, cfg, cache), eq_nc(f.img_y, g.img_y, cfg, cache)]


def verify_relation_suite(cfg: EqConfig | None = None, seed: int | None = None, sizes: SuiteSizes | None = None) -> dict:
    """
    Check the defining relations of the noncommutative Cremona group.

    Runs, in order:
        R1  tau*tau equals the identity
        R2  [t_a, t_b] equals t_(a b) for random a, b over Q(x)
        R3  t_d is inner with conjugator d(x)^-1 for random scalar d(x)
        R4  tau t_m tau matches ((cx+d)^-1 (ax+b), y) for random m in GL(2, Q)
        R5  a^-1 (tau e)^3 is inner with conjugator x^-1 y
        R6  reverse(t_a(e)) equals p_a(reverse(e)) for random a and e

    Every sampled item is also checked against its classical (commutative)
    image exactly.

    Args:
        cfg: equality protocol (defaults from settings)
        seed: seed of the sampling generator (defaults to cfg.seed)
        sizes: number of samples per relation

    Returns:
        dict: per relation its description, item count, verdict counts and
        shadow mismatches, plus an overall "passed" flag
    """
    cfg = cfg or EqConfig.from_settings()
    sizes = sizes or SuiteSizes()
    seed = cfg.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    store = ExprStore()
    x, y = var_x(store), var_y(store)
    tally = _Tally()
    items: dict[str, int] = {}

    log.info("relation suite: seed=%d sizes=%s", seed, sizes)

    # R1
    word = [Tau(), Tau()]
    f = word_to_auto(word, store)
    tally.record("R1", _images_equal(f, NCAuto.identity(store), cfg, RepCache()), shadow_matches(word, f))
    items["R1"] = 1

    # R2
    for _ in range(sizes.product):
        a, b = random_gl2(rng, sizes.degree), random_gl2(rng, sizes.degree)
        word = [TMap(a), TMap(b)]
        f = word_to_auto(word, store)
        tally.record("R2", _images_equal(f, t_auto(a @ b, store), cfg, RepCache()), shadow_matches(word, f))
    items["R2"] = sizes.product

    # R3
    for _ in range(sizes.scalar):
        d = random_scalar(rng, sizes.degree)
        word = [TMap(GL2Rat.scalar(d))]
        f = word_to_auto(word, store)
        r = inv(embed_univariate(d, store))
        tally.record("R3", is_inner_with(f, r, cfg, RepCache()), shadow_matches(word, f))
    items["R3"] = sizes.scalar
    tally.notes["R3"] = {"conjugator": "inv(d(x))"}

    # R4
    for _ in range(sizes.mobius):
        m = random_gl2_constant(rng)
        word = [Tau(), TMap(m), Tau()]
        f = word_to_auto(word, store)
        a_, b_, c_, d_ = (embed_univariate(v, store) for v in m.entries())
        closed = NCAuto(inv(c_ * x + d_) * (a_ * x + b_), y)
        tally.record("R4", _images_equal(f, closed, cfg, RepCache()), shadow_matches(word, f))
    items["R4"] = sizes.mobius

    # R5
    word = cubic_relation_word()
    f = word_to_auto(word, store)
    r = inv(x) * y
    target = NCAuto(inv(x) * y * x * inv(y) * x, inv(x) * y * x)
    cache = RepCache()
    verdicts = list(is_inner_with(f, r, cfg, cache)) + _images_equal(f, target, cfg, cache)
    tally.record("R5", verdicts, shadow_matches(word, f))
    items["R5"] = 1
    tally.notes["R5"] = {"conjugator": str(r)}

    # R6
    for _ in range(sizes.duality):
        a = random_gl2(rng, sizes.degree)
        e = random_expression(rng, 2, store)
        left = reverse(act(t_auto(a, store), e))
        right = act(p_auto(a, store), reverse(e))
        cache = RepCache()
        verdicts = [eq_nc(left, right, cfg, cache)] + _images_equal(reverse_auto(t_auto(a, store)), p_auto(a, store), cfg, cache)
        tally.record("R6", verdicts, commutativize(left) == commutativize(right))
    items["R6"] = sizes.duality

    report = _summarize(tally, items)
    report["config"] = cfg.to_dict()
    report["sample_seed"] = seed
    log.info("relation suite %s", "passed" if report["passed"] else "FAILED")
    return report


def _summarize(tally: _Tally, items: dict) -> dict:
    frame = pd.DataFrame(tally.rows, columns=["relation", "verdict"])
    relations = {}
    passed = True
    for name, description in RELATIONS.items():
        counts = frame.loc[frame["relation"] == name, "verdict"].value_counts().reindex(list(VERDICT_NAMES), fill_value=0)
        entry = {
            "description": description,
            "items": items.get(name, 0),
            "counts": {verdict: int(counts[verdict]) for verdict in VERDICT_NAMES},
            "shadow_mismatches": tally.shadow.get(name, 0),
        }
        entry.update(tally.notes.get(name, {}))
        relations[name] = entry
        if entry["counts"]["CommDistinct"] or entry["counts"]["NCDistinct"] or entry["shadow_mismatches"]:
            passed = False
    return {"relations": relations, "passed": passed}
