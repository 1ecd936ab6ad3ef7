"""1-point operator tests, cross-checked by a scalar recursion at numeric C."""

from fractions import Fraction as F
from itertools import permutations
from math import comb

import pytest

from twotori.series import QSeries, SeriesError, eisenstein, eta_normalized, qd
from twotori.virasoro import VirState, apply_mode, partitions_of_weight
from twotori.zhu import (
    BasePartition,
    DiffOp,
    eta_power,
    one_point,
    one_point_word,
    specialize,
    structure_check,
    to_theta_basis,
    to_z_basis,
)


def scalar_one_point(word, base: QSeries, c_val: F, q_trunc: int) -> QSeries:
    """Oracle: the same mode reduction carrying concrete series values.

    No operators, no basis change, no specialization; the central charge is
    a number and the base partition function an explicit q-expansion.
    """
    word = tuple(word)
    if not word:
        return base
    k, tail = word[0], word[1:]
    out = QSeries.zero("q", q_trunc, offset=base.offset)
    if k == 2:
        out = out + qd(scalar_one_point(tail, base, c_val, q_trunc))
    state = VirState.vacuum()
    for w in reversed(tail):
        state = apply_mode(-w, state)
    for r in range(sum(tail) + 1):
        if (k + r) % 2 or comb(k + r - 1, r + 1) == 0:
            continue
        reduced = apply_mode(r, state)
        for parts, coeff in reduced.terms.items():
            contrib = scalar_one_point(parts, base, c_val, q_trunc)
            factor = F((-1) ** r * comb(k + r - 1, r + 1)) * coeff.eval_at(c_val)
            out = out + eisenstein(k + r, q_trunc) * contrib * factor
    return out


def operator_route(word, c_val: F, alpha_sq: F, q_trunc: int) -> QSeries:
    """One-point value through the full symbolic pipeline, eta factor reattached."""
    op = to_theta_basis(one_point_word(word, q_trunc))
    theta = QSeries.monomial("q", alpha_sq / 2, q_trunc)
    value = specialize(op, BasePartition(theta, c_val))
    return value * eta_power(c_val, q_trunc)


class TestBaseCases:
    def test_stress_tensor_gives_derivative(self):
        op = one_point(VirState.monomial((2,)), 6)
        assert op == DiffOp("Z", {(1, 0): QSeries.one("q", 6)}, 6)

    def test_higher_single_modes_vanish(self):
        for k in (1, 3, 4, 5, 6, 7):
            assert one_point_word((k,), 6).is_zero()

    def test_l2_squared_operator(self):
        op = one_point(VirState.monomial((2, 2)), 8)
        expected = DiffOp("Z", {(2, 0): QSeries.one("q", 8),
                                (1, 0): eisenstein(2, 8) * 2,
                                (0, 1): eisenstein(4, 8) * F(1, 2)}, 8)
        assert op == expected

    def test_l4_l2_operator(self):
        # head-first reduction of L[-4]L[-2]|0>: 6 E4 D + 5 C E6
        op = one_point(VirState.monomial((4, 2)), 8)
        expected = DiffOp("Z", {(1, 0): eisenstein(4, 8) * 6,
                                (0, 1): eisenstein(6, 8) * 5}, 8)
        assert op == expected


class TestRecursionOrderInvariance:
    def test_word_vs_normal_ordered(self):
        # L[-2]L[-4]|0> = L[-4]L[-2]|0> + 2 L[-6]|0>
        lhs = one_point_word((2, 4), 8)
        state = apply_mode(-2, VirState.monomial((4,)))
        rhs = sum((one_point(VirState.monomial(p), 8).scale_cpoly(c)
                   for p, c in state.terms.items()),
                  DiffOp.zero("Z", 8))
        assert lhs == rhs

    @pytest.mark.parametrize("modes", [(2, 2, 3), (3, 2, 2), (4, 3, 2), (2, 4, 3),
                                       (5, 2, 3), (2, 2, 2, 2), (3, 2, 2, 3)])
    def test_permuted_words_specialize_equal(self, modes):
        # operator pipeline agrees with the scalar reduction on every reordering
        base = eta_power(1, 8)
        for perm in set(permutations(modes)):
            got = operator_route(perm, F(1), F(0), 8)
            want = scalar_one_point(perm, base, F(1), 8)
            assert got.agrees_with(want)


class TestNumericOracle:
    @pytest.mark.parametrize("c_val,alpha_sq", [(F(1), F(0)), (F(2), F(1)),
                                                (F(5, 2), F(1, 3))])
    def test_pipeline_matches_scalar_recursion(self, c_val, alpha_sq):
        q_trunc = 6
        base = QSeries.monomial("q", alpha_sq / 2, q_trunc) * eta_power(c_val, q_trunc)
        for w in (2, 4, 6, 8):
            for parts in partitions_of_weight(w):
                got = operator_route(parts, c_val, alpha_sq, q_trunc)
                want = scalar_one_point(parts, base, c_val, q_trunc)
                assert got.agrees_with(want), (parts, c_val, alpha_sq)


class TestThetaBasis:
    def test_identity_fixed(self):
        op = DiffOp.identity("Z", 6)
        assert to_theta_basis(op) == DiffOp.identity("Theta", 6)

    def test_derivative_rewrite(self):
        th = to_theta_basis(one_point(VirState.monomial((2,)), 8))
        expected = DiffOp("Theta", {(1, 0): QSeries.one("q", 8),
                                    (0, 1): eisenstein(2, 8) * F(1, 2)}, 8)
        assert th == expected

    def test_roundtrip(self):
        for parts in [(2,), (2, 2), (4, 2), (2, 2, 2), (6,)]:
            op = one_point(VirState.monomial(parts), 8)
            assert to_z_basis(to_theta_basis(op)) == op

    def test_c_degree_bound_l2_squared(self):
        th = to_theta_basis(one_point(VirState.monomial((2, 2)), 8))
        assert th.c_degree(0) <= 2
        from twotori.series import to_quasimodular
        for j in range(th.c_degree(0) + 1):
            s = th.coeff(0, j)
            if not s.is_zero():
                to_quasimodular(s, 4)  # raises if not weight-4 graded


class TestSpecialize:
    def test_identity_on_unit_theta(self):
        op = DiffOp.identity("Theta", 5)
        assert specialize(op, BasePartition.heisenberg(1, 5)) == QSeries.one("q", 5)

    def test_monomial_theta(self):
        th = DiffOp("Theta", {(1, 0): QSeries.one("q", 5),
                              (0, 1): eisenstein(2, 5) * F(1, 2)}, 5)
        base = BasePartition(QSeries.monomial("q", F(1, 2), 5), F(1))
        got = specialize(th, base)
        mono = QSeries.monomial("q", F(1, 2), 5)
        assert got == mono * F(1, 2) + eisenstein(2, 5) * mono * F(1, 2)

    def test_heisenberg_reattached(self):
        th = to_theta_basis(one_point(VirState.monomial((2,)), 8))
        got = specialize(th, BasePartition.heisenberg(1, 8)) * eta_power(1, 8)
        assert got == qd(eta_normalized(8).inv())

    def test_truncation_mismatch(self):
        op = DiffOp.identity("Theta", 8)
        with pytest.raises(SeriesError):
            specialize(op, BasePartition.heisenberg(1, 5))

    def test_requires_theta_basis(self):
        with pytest.raises(SeriesError):
            specialize(DiffOp.identity("Z", 4), BasePartition.heisenberg(1, 4))


class TestStructure:
    def test_small_monomials_pass(self):
        for parts in [(2,), (2, 2), (4,), (4, 2), (2, 2, 2), (3, 3)]:
            assert structure_check(parts, 8).passed

    def test_theta_basis_bounds(self):
        op = to_theta_basis(one_point(VirState.monomial((2, 2)), 8))
        assert structure_check((2, 2), 8, op=op).passed

    def test_zero_operator_trivially_passes(self):
        assert structure_check((4,), 8).passed


class TestJson:
    def test_roundtrip(self):
        op = to_theta_basis(one_point(VirState.monomial((2, 2)), 6))
        back = DiffOp.from_json(op.to_json())
        assert back == op
        assert back.basis == "Theta"


class TestWeightTwelveInvariant:
    def test_all_monomials_terminate_and_pass(self):
        # recursion must terminate and the operator shape must hold through weight 12
        for n in range(11, 13):
            for parts in partitions_of_weight(n):
                op = one_point(VirState.monomial(parts), 8)
                assert structure_check(parts, 8, op=op).passed, parts
