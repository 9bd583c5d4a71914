"""
Tests for NCExpr Module

Covers interning, the local rewrite rules, the inversion gate, reversal,
substitution and the printer.
"""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from commrat import CX, CY, ONE, commutativize
from errors import BudgetExceeded, CommutatorInverse, DependentImages
from ncexpr import (
    ExprStore,
    NodeKind,
    build,
    const,
    inv,
    node_count,
    normalize,
    random_commutator_multiple,
    random_expression,
    reverse,
    substitute,
    to_text,
    topological_order,
    var_x,
    var_y,
)
from repeq import eq_nc


def _word(e):
    """Flatten a product tree into its sequence of leaf ids."""
    if e.kind is NodeKind.MUL:
        return _word(e.child(0)) + _word(e.child(1))
    return [e.id]


class TestExprStore:
    """Test the interning table"""

    def test_generators_and_constants_preinterned(self, store):
        """x, y, 0 and 1 occupy the first four ids"""
        assert len(store) == 4
        assert var_x(store).id == ExprStore.X_ID
        assert var_y(store).id == ExprStore.Y_ID
        assert const(0, store).id == ExprStore.ZERO_ID
        assert const(1, store).id == ExprStore.ONE_ID

    def test_structural_sharing(self, xy):
        """Building the same expression twice yields the same node"""
        x, y = xy
        assert (x * y + y).id == (x * y + y).id
        assert len(x.store) == 6

    def test_budget_exceeded(self):
        """Creating a node past max_nodes raises"""
        store = ExprStore(max_nodes=6)
        x, y = var_x(store), var_y(store)
        x * y
        y * x
        with pytest.raises(BudgetExceeded):
            x * x

    def test_children_precede_parents(self, xy):
        """Topological order lists every child before its parent"""
        x, y = xy
        e = inv(x + 1) * y - y * x
        order = topological_order(e)
        position = {nid: i for i, nid in enumerate(order)}
        for nid in order:
            for child in e.store.node(nid).children:
                assert position[child] < position[nid]
        assert order[-1] == e.id


class TestBuild:
    """Test raw node construction"""

    def test_add_is_unordered(self, xy):
        """Add operands are sorted by id"""
        x, y = xy
        assert build(NodeKind.ADD, (x, y)) == build(NodeKind.ADD, (y, x))

    def test_mul_is_ordered(self, xy):
        """xy and yx are different nodes"""
        x, y = xy
        assert build(NodeKind.MUL, (x, y)) != build(NodeKind.MUL, (y, x))

    def test_no_rewriting(self, xy):
        """build keeps x*1 as a product node"""
        x, _ = xy
        e = build(NodeKind.MUL, (x, const(1, x.store)))
        assert e.kind is NodeKind.MUL

    def test_arity_mismatch(self, xy):
        """Wrong operand counts are rejected"""
        x, _ = xy
        with pytest.raises(ValueError):
            build(NodeKind.NEG, (x, x))

    def test_mixed_stores(self, xy):
        """Operands from two stores are rejected"""
        x, _ = xy
        with pytest.raises(ValueError):
            build(NodeKind.MUL, (x, var_y(ExprStore())))

    def test_inversion_still_gated(self, xy):
        """Raw INV of a commutator raises"""
        x, y = xy
        with pytest.raises(CommutatorInverse):
            build(NodeKind.INV, (x * y - y * x,))


class TestInv:
    """Test guarded inversion"""

    def test_commutator_refused(self, xy):
        """inv(xy - yx) raises and carries the offending expression"""
        x, y = xy
        c = x * y - y * x
        with pytest.raises(CommutatorInverse) as info:
            inv(c)
        assert info.value.expr == c

    def test_zero_refused(self, store):
        """The constant 0 has no inverse"""
        with pytest.raises(CommutatorInverse):
            inv(const(0, store))

    def test_constant(self, store):
        """inv(2) folds to 1/2"""
        assert inv(const(2, store)) == const(Fraction(1, 2), store)

    def test_double_inverse(self, xy):
        """inv(inv(x + y)) is x + y"""
        x, y = xy
        assert inv(inv(x + y)) == x + y

    def test_product_reverses(self, xy):
        """inv(xy) is inv(y)*inv(x)"""
        x, y = xy
        assert inv(x * y) == inv(y) * inv(x)

    def test_cancellation(self, xy):
        """inv(e)*e and e*inv(e) fold to 1"""
        x, y = xy
        e = x + y
        one = const(1, x.store)
        assert inv(e) * e == one
        assert e * inv(e) == one

    def test_commutativization(self, xy):
        """phi(inv(x + y)) is 1/(x + y)"""
        x, y = xy
        assert commutativize(inv(x + y)) == ONE / (CX + CY)


class TestSmartConstructors:
    """Test the local rewrite rules"""

    def test_negation_cancels(self, xy):
        """a + (-a) is 0"""
        x, y = xy
        e = x * y + inv(x)
        assert e - e == const(0, x.store)

    def test_scaled_negation_cancels(self, xy):
        """2xy - 2xy folds even through constant multiples"""
        x, y = xy
        e = 2 * (x * y)
        assert e + (-2) * (x * y) == const(0, x.store)

    def test_negation_folds_into_leading_constant(self, xy):
        """-(1/3*inv(y)*2) negates the leading coefficient instead of wrapping the product"""
        x, y = xy
        store = x.store
        e = const(Fraction(1, 3), store) * inv(y) * const(2, store)
        folded = -e
        assert folded.kind is NodeKind.MUL
        assert folded == const(Fraction(-1, 3), store) * inv(y) * const(2, store)
        assert -folded == e

    def test_negated_chain_cancels(self, xy):
        """A product plus its negation cancels when the constant sits deep in the product"""
        x, y = xy
        e = 2 * x * y * inv(x)
        assert e + (-e) == const(0, x.store)

    def test_constants_fold(self, store):
        """Constant arithmetic is exact"""
        assert const(2, store) * const(3, store) + const(1, store) == const(7, store)

    def test_power(self, xy):
        """x**0 is 1 and x**2 is x*x"""
        x, _ = xy
        assert x ** 0 == const(1, x.store)
        assert x ** 2 == x * x

    def test_negative_power(self, xy):
        """x**-2 is inv(x)*inv(x)"""
        x, _ = xy
        assert x ** -2 == inv(x) * inv(x)


class TestNormalize:
    """Test normalization of raw trees"""

    def test_double_inversion(self, xy):
        """inv(inv(x)) built raw normalizes to x"""
        x, _ = xy
        raw = build(NodeKind.INV, (build(NodeKind.INV, (x,)),))
        assert normalize(raw) == x

    def test_unit_factor(self, xy):
        """x*1 built raw normalizes to x"""
        x, _ = xy
        assert normalize(build(NodeKind.MUL, (x, const(1, x.store)))) == x

    def test_constant_product(self, store):
        """2*3 built raw normalizes to 6"""
        raw = build(NodeKind.MUL, (const(2, store), const(3, store)))
        assert normalize(raw) == const(6, store)


class TestNormalizeProperties:
    """Property-based tests for normal forms"""

    @given(seed=st.integers(0, 10_000))
    def test_smart_results_are_normal(self, seed):
        """Expressions built by the smart constructors are fixed points"""
        store = ExprStore()
        e = random_expression(np.random.default_rng(seed), 4, store)
        assert normalize(e) == e

    @given(seed=st.integers(0, 10_000))
    def test_idempotent(self, seed):
        """normalize(normalize(e)) == normalize(e)"""
        store = ExprStore()
        e = random_expression(np.random.default_rng(seed), 4, store)
        once = normalize(e)
        assert normalize(once) == once


class TestReverse:
    """Test the reversal anti-automorphism"""

    def test_swaps_products(self, xy):
        """reverse(xy) is yx"""
        x, y = xy
        assert reverse(x * y) == y * x

    def test_sum_unchanged(self, xy):
        """reverse fixes x + y"""
        x, y = xy
        assert reverse(x + y) == x + y

    def test_word(self, xy):
        """reverse(x^2 y^3 x^7) reads x^7 y^3 x^2 letter by letter"""
        x, y = xy
        e = x ** 2 * y ** 3 * x ** 7
        assert _word(reverse(e)) == list(reversed(_word(e)))

    def test_word_equality(self, xy, small_cfg):
        """reverse(x^2 y^3 x^7) equals x^7 y^3 x^2 as an element"""
        x, y = xy
        verdict = eq_nc(reverse(x ** 2 * y ** 3 * x ** 7), x ** 7 * y ** 3 * x ** 2, small_cfg)
        assert not verdict.is_distinct

    def test_inversion(self, xy):
        """reverse(inv(xy)) is inv(yx)"""
        x, y = xy
        assert normalize(reverse(inv(x * y))) == inv(y * x)


class TestReverseProperties:
    """Property-based tests for reversal"""

    @given(seed=st.integers(0, 10_000))
    def test_involution(self, seed):
        """reverse(reverse(e)) == e"""
        store = ExprStore()
        e = random_expression(np.random.default_rng(seed), 4, store)
        assert normalize(reverse(reverse(e))) == e

    @given(seed=st.integers(0, 10_000))
    def test_same_commutativization(self, seed):
        """phi(reverse(e)) == phi(e)"""
        store = ExprStore()
        e = random_expression(np.random.default_rng(seed), 4, store)
        assert commutativize(reverse(e)) == commutativize(e)


class TestSubstitute:
    """Test substitution of generators"""

    def test_swap(self, xy):
        """x -> y, y -> x maps xy to yx"""
        x, y = xy
        assert substitute(x * y, y, x) == y * x

    def test_dependent_images(self, xy):
        """Images with vanishing Jacobian are refused"""
        x, y = xy
        with pytest.raises(DependentImages):
            substitute(x * y, x, x)
        with pytest.raises(DependentImages):
            substitute(x * y, x + y, 2 * x + 2 * y)

    def test_foreign_images(self, xy):
        """Images from another store are refused"""
        x, y = xy
        other = ExprStore()
        with pytest.raises(ValueError):
            substitute(x, var_x(other), var_y(other))

    def test_inverse_images(self, xy, small_cfg):
        """Substituting into inv(y)*x gives x^-1 y^-1 x"""
        x, y = xy
        e = inv(y) * x
        image = substitute(e, e, x)
        assert commutativize(image) == ONE / CY
        assert not eq_nc(image, inv(x) * inv(y) * x, small_cfg).is_distinct


class TestSubstituteProperties:
    """Property-based tests for substitution"""

    @given(seed=st.integers(0, 10_000))
    def test_identity(self, seed):
        """Substituting x, y for themselves changes nothing"""
        store = ExprStore()
        e = random_expression(np.random.default_rng(seed), 4, store)
        assert substitute(e, var_x(store), var_y(store)) == e


class TestToText:
    """Test the printer"""

    def test_difference(self, xy):
        """Negated terms print as subtraction"""
        x, _ = xy
        assert to_text(var_y(x.store) - inv(x)) == "y - inv(x)"

    def test_fraction_coefficient(self, xy):
        """Negative rational coefficients lead the product"""
        x, y = xy
        assert to_text(const(Fraction(-1, 2), x.store) * x * y) == "-1/2*x*y"

    def test_parenthesized_sum(self, xy):
        """A sum inside a product is parenthesized"""
        x, y = xy
        assert to_text(x * (y + 1)) == "x*(y + 1)"

    def test_negative_constant_term(self, xy):
        """x - 2 prints with a minus sign"""
        x, _ = xy
        assert to_text(x - 2) == "x - 2"

    def test_negated_product_has_one_sign(self, xy):
        """A negated product prints a single leading minus"""
        _, y = xy
        store = y.store
        assert to_text(-(const(Fraction(1, 3), store) * inv(y) * const(2, store))) == "-1/3*inv(y)*2"

    def test_deep_negative_coefficient_in_sum(self, xy):
        """x - 2*x*y prints as a subtraction"""
        x, y = xy
        assert to_text(x - 2 * x * y) == "x - 2*x*y"

    def test_str_matches(self, xy):
        """str uses the printer"""
        x, y = xy
        assert str(x * y - y * x) == to_text(x * y - y * x)


class TestCommutatorMultiples:
    """Test the commutator-ideal sampler"""

    def test_node_count(self, xy):
        """node_count counts distinct reachable nodes"""
        x, y = xy
        assert node_count(x * y + x * y) == 4

    @given(seed=st.integers(0, 10_000))
    def test_kernel(self, seed):
        """Every sample commutativizes to zero"""
        store = ExprStore()
        e = random_commutator_multiple(np.random.default_rng(seed), 3, store)
        assert commutativize(e).is_zero

    @pytest.mark.slow
    def test_kernel_battery(self):
        """Two hundred samples all commutativize to zero"""
        rng = np.random.default_rng(2024)
        store = ExprStore()
        for _ in range(200):
            assert commutativize(random_commutator_multiple(rng, 3, store)).is_zero
