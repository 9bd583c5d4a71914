"""
Tests for Cremona Action Module

Covers GL2 matrices over Q(x), the generator automorphisms, composition,
the classical shadow and the relation suite.
"""

import json
import time

import numpy as np
import pytest
from hypothesis import given, strategies as st

from commrat import CX, CY, ONE, ZERO, commutativize
from cremona import (
    E_MATRIX,
    RELATIONS,
    SWAP,
    GL2Rat,
    Inner,
    NCAuto,
    SuiteSizes,
    Tau,
    TMap,
    act,
    classical_action,
    compose,
    cubic_relation_word,
    embed_univariate,
    inner_auto,
    inversion_word,
    is_inner_with,
    p_auto,
    random_gl2,
    random_gl2_constant,
    reverse_auto,
    shadow_matches,
    t_auto,
    tau_auto,
    verify_relation_suite,
    word_to_auto,
    word_to_text,
)
from errors import CommutatorInverse, DependentImages, SingularMatrix
from ncexpr import ExprStore, inv, random_expression, reverse, var_x, var_y
from repeq import VERDICT_NAMES, eq_nc


class TestGL2Rat:
    """Test invertible matrices over Q(x)"""

    def test_to_text(self):
        """Matrices print row by row"""
        assert E_MATRIX.to_text() == "[0,x;1,0]"
        assert GL2Rat.identity().to_text() == "[1,0;0,1]"

    def test_singular(self):
        """Zero determinant is refused"""
        with pytest.raises(SingularMatrix):
            GL2Rat(CX, CX, ONE, ONE)

    def test_depends_on_y(self):
        """Entries must not involve y"""
        with pytest.raises(ValueError):
            GL2Rat(CY, ZERO, ZERO, ONE)

    def test_coerces_numbers(self):
        """Plain integers become constant entries"""
        assert GL2Rat(1, 2, 3, 4).det() == -2

    def test_product(self):
        """SWAP @ SWAP is the identity and determinants multiply"""
        assert (SWAP @ SWAP).to_text() == GL2Rat.identity().to_text()
        assert (E_MATRIX @ SWAP).det() == E_MATRIX.det() * SWAP.det()

    def test_random_is_invertible(self):
        """Sampled matrices have nonzero determinant"""
        rng = np.random.default_rng(3)
        for _ in range(5):
            assert not random_gl2(rng).det().is_zero
            assert not random_gl2_constant(rng).det().is_zero


class TestEmbedUnivariate:
    """Test the embedding of Q(x)"""

    def test_polynomial(self, store):
        """x^2 + 1 embeds as a polynomial in x"""
        e = embed_univariate(CX**2 + 1, store)
        assert commutativize(e) == CX**2 + 1

    def test_fraction(self, store):
        """(x^2 + 1)/(x - 2) embeds with one inversion"""
        c = (CX**2 + 1) / (CX - 2)
        assert commutativize(embed_univariate(c, store)) == c


class TestGenerators:
    """Test the generator automorphisms"""

    def test_t_swap(self, store):
        """t for (0 1; 1 0) sends y to inv(y)"""
        f = t_auto(SWAP, store)
        assert f.img_x == var_x(store)
        assert f.img_y == inv(var_y(store))

    def test_tau(self, store):
        """tau swaps the generators"""
        x, y = var_x(store), var_y(store)
        assert act(tau_auto(store), x * inv(y)) == y * inv(x)

    def test_p_mirrors_t(self, store, small_cfg):
        """p_a is t_a conjugated by reversal"""
        a = GL2Rat(CX, ONE, ONE, 2 * CX)
        left, right = reverse_auto(t_auto(a, store)), p_auto(a, store)
        assert not eq_nc(left.img_y, right.img_y, small_cfg).is_distinct

    def test_dependent_images(self, store):
        """Images with vanishing Jacobian are refused"""
        x = var_x(store)
        with pytest.raises(DependentImages):
            NCAuto(x, x * x)

    def test_inner_refuses_commutator(self, xy):
        """Conjugating by a commutator is impossible"""
        x, y = xy
        with pytest.raises(CommutatorInverse):
            inner_auto(x * y - y * x)

    def test_inner_commutes_away(self, xy):
        """Inner automorphisms have the identity shadow"""
        x, y = xy
        f = inner_auto(x + y)
        assert commutativize(f.img_x) == CX
        assert commutativize(f.img_y) == CY

    def test_to_dict(self, store):
        """Images report as text"""
        assert t_auto(SWAP, store).to_dict() == {"x": "x", "y": "inv(y)"}


class TestCompose:
    """Test composition and words"""

    def test_convention(self, store):
        """act(f*g, e) == act(g, act(f, e))"""
        f, g = tau_auto(store), t_auto(E_MATRIX, store)
        x = var_x(store)
        assert act(compose(f, g), x) == act(g, act(f, x))

    def test_tau_e(self, store):
        """tau*e sends (x, y) to (inv(y)*x, x)"""
        f = word_to_auto([Tau(), TMap(E_MATRIX)], store)
        x, y = var_x(store), var_y(store)
        assert f.img_x == inv(y) * x
        assert f.img_y == x

    def test_tau_e_squared(self, store, small_cfg):
        """(tau*e)^2 sends (x, y) to (x^-1 y^-1 x, y^-1 x)"""
        f = word_to_auto([Tau(), TMap(E_MATRIX)] * 2, store)
        x, y = var_x(store), var_y(store)
        assert not eq_nc(f.img_x, inv(x) * inv(y) * x, small_cfg).is_distinct
        assert not eq_nc(f.img_y, inv(y) * x, small_cfg).is_distinct

    def test_tau_squared(self, store):
        """tau*tau is the identity on the nose"""
        f = word_to_auto([Tau(), Tau()], store)
        assert f.img_x == var_x(store) and f.img_y == var_y(store)

    def test_empty_word(self, store):
        """The empty word is the identity"""
        assert word_to_auto([], store) == NCAuto.identity(store)

    def test_inversion_word(self, store):
        """The inversion word sends (x, y) to (inv(x), inv(y))"""
        f = word_to_auto(inversion_word(), store)
        assert f.img_x == inv(var_x(store))
        assert f.img_y == inv(var_y(store))

    def test_word_to_text(self, store):
        """Words print generator by generator"""
        word = [Tau(), TMap(E_MATRIX), Inner(var_x(store))]
        assert word_to_text(word) == "tau t[0,x;1,0] inner(x)"


class TestClassicalShadow:
    """Test the commutative image of words"""

    def test_inversion(self):
        """The inversion word acts classically as (1/x, 1/y)"""
        cx, cy = classical_action(inversion_word())
        assert cx == ONE / CX
        assert cy == ONE / CY

    def test_shadow_matches_cubic_word(self, store):
        """a^-1 (tau e)^3 commutativizes to its classical action"""
        word = cubic_relation_word()
        assert shadow_matches(word, word_to_auto(word, store))

    def test_shadow_mismatch(self, store):
        """A different automorphism is caught"""
        assert not shadow_matches([Tau()], NCAuto.identity(store))


class TestRelations:
    """Test individual relations up to inner automorphisms"""

    def test_scalar_t_is_inner(self, store, small_cfg):
        """t_d for d = x + 1 is conjugation by inv(x + 1)"""
        d = CX + 1
        f = t_auto(GL2Rat.scalar(d), store)
        r = inv(embed_univariate(d, store))
        assert not any(v.is_distinct for v in is_inner_with(f, r, small_cfg))

    def test_cubic_relation_is_inner(self, store, small_cfg):
        """a^-1 (tau e)^3 is conjugation by x^-1 y"""
        f = word_to_auto(cubic_relation_word(), store)
        r = inv(var_x(store)) * var_y(store)
        assert [v.name for v in is_inner_with(f, r, small_cfg)] == ["ProbablyEqual", "ProbablyEqual"]

    def test_wrong_conjugator(self, store, small_cfg):
        """The cubic word is not conjugation by y^-1 x"""
        f = word_to_auto(cubic_relation_word(), store)
        r = inv(var_y(store)) * var_x(store)
        assert any(v.is_distinct for v in is_inner_with(f, r, small_cfg))

    def test_product(self, store, small_cfg):
        """t_a t_b == t_(ab)"""
        a, b = GL2Rat(CX, ONE, ONE, ZERO), GL2Rat(ONE, CX, ZERO, 2)
        f = word_to_auto([TMap(a), TMap(b)], store)
        g = t_auto(a @ b, store)
        assert not eq_nc(f.img_y, g.img_y, small_cfg).is_distinct


class TestRelationsProperties:
    """Property-based tests for reversal duality"""

    @given(seed=st.integers(0, 10_000))
    def test_reversal_duality(self, seed):
        """reverse(t_a(e)) equals p_a(reverse(e))"""
        from repeq import EqConfig

        store = ExprStore()
        rng = np.random.default_rng(seed)
        a = random_gl2(rng, 1)
        e = random_expression(rng, 2, store)
        left = reverse(act(t_auto(a, store), e))
        right = act(p_auto(a, store), reverse(e))
        cfg = EqConfig(sizes=(2,), order=2, trials=2, bound=3, seed=seed)
        assert not eq_nc(left, right, cfg).is_distinct


class TestVerifyRelationSuite:
    """Test the relation suite report"""

    def test_small_suite(self, small_cfg):
        """A reduced suite passes and reports every relation"""
        sizes = SuiteSizes(product=2, scalar=2, mobius=2, duality=2, degree=1)
        report = verify_relation_suite(small_cfg, 5, sizes)
        assert report["passed"]
        assert set(report["relations"]) == set(RELATIONS)
        assert report["sample_seed"] == 5
        assert report["config"] == small_cfg.to_dict()
        r2 = report["relations"]["R2"]
        assert r2["items"] == 2
        assert set(r2["counts"]) == set(VERDICT_NAMES)
        assert r2["counts"]["CommDistinct"] == 0 and r2["counts"]["NCDistinct"] == 0
        assert r2["shadow_mismatches"] == 0
        assert report["relations"]["R5"]["conjugator"] == "inv(x)*y"

    def test_report_deterministic(self, small_cfg):
        """Two runs with the same seeds produce the same report text"""
        sizes = SuiteSizes(product=2, scalar=2, mobius=2, duality=2, degree=1)
        first = verify_relation_suite(small_cfg, 5, sizes)
        second = verify_relation_suite(small_cfg, 5, sizes)
        assert json.dumps(first, sort_keys=True) == json.dumps(second, sort_keys=True)

    @pytest.mark.slow
    def test_full_suite_runtime(self, acceptance_cfg):
        """The default suite at the acceptance settings finishes within five minutes"""
        start = time.perf_counter()
        report = verify_relation_suite(acceptance_cfg, 7)
        assert time.perf_counter() - start < 300
        assert report["passed"]

    @pytest.mark.slow
    def test_full_suite(self, acceptance_cfg):
        """The default suite passes with zero distinct verdicts"""
        report = verify_relation_suite(acceptance_cfg)
        assert report["passed"]
        for entry in report["relations"].values():
            assert entry["counts"]["CommDistinct"] == 0
            assert entry["counts"]["NCDistinct"] == 0
            assert entry["shadow_mismatches"] == 0
