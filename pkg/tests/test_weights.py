import math
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parh.errors import DegenerateGapError, InvalidPsiError, PerturbationRangeError
from parh.weights import (
    PsiMap,
    ResidueDatum,
    WeightSet,
    apply_psi,
    degree_preserving_psi,
    gap,
    gap_or_default,
    lattice_floor,
    perturb_weights,
    pick_generic_weight,
    tilde_par,
    weight_filtration,
)


def ws(*pairs, anchor=0):
    return WeightSet.from_pairs("D", [(F(a, b), m) for (a, b, m) in pairs], F(anchor))


W_HALF = ws((-1, 2, 1), (0, 1, 1))        # {-1/2, 0}
W_TENTH = ws((-3, 10, 1), (0, 1, 1))      # {-3/10, 0}
W_ZERO = ws((0, 1, 1))                    # {0}


class TestTildePar:
    def test_half_lattice(self):
        # enumerate m in {-2..2} and reduce: representatives {0, -1/2}
        assert tilde_par(W_HALF, 2) == (F(-1, 2), F(0))

    def test_e1_integer_shifts_only(self):
        assert tilde_par(W_TENTH, 1) == (F(-3, 10), F(0))

    def test_thirds(self):
        assert tilde_par(W_ZERO, 3) == (F(-2, 3), F(-1, 3), F(0))

    @given(
        num=st.integers(-23, 0),
        den=st.integers(1, 24),
        e=st.integers(1, 6),
        m=st.integers(-3, 3),
    )
    def test_shift_invariance(self, num, den, e, m):
        b = F(num, den)
        if not (-1 < b <= 0):
            b = b - math.ceil(b)
        w1 = WeightSet.from_pairs("D", [(b, 1)])
        shifted = b + F(m, e)
        shifted -= math.ceil(shifted)
        w2 = WeightSet.from_pairs("D", [(shifted, 1)])
        assert tilde_par(w1, e) == tilde_par(w2, e)


class TestGap:
    def test_exhaustive_half(self):
        assert gap(W_HALF, 2) == F(1, 2)

    def test_min_of_two_spacings(self):
        assert gap(W_TENTH, 1) == F(3, 10)

    def test_thirds_spacing(self):
        assert gap(W_ZERO, 3) == F(1, 3)

    def test_full_lattice_exact(self):
        for e in (1, 2, 3, 5, 8):
            if e == 1:
                with pytest.raises(DegenerateGapError):
                    gap(W_ZERO, 1)
            else:
                assert gap(W_ZERO, e) == F(1, e)

    def test_degenerate_default(self):
        assert gap_or_default(W_ZERO, 1) == F(1)


class TestPickGenericWeight:
    def test_midpoint_half(self):
        assert pick_generic_weight(W_HALF, 2, 2) == F(-1, 4)

    def test_single_weight_unit_gap(self):
        assert pick_generic_weight(W_ZERO, 1, 1) == F(-1, 2)

    def test_largest_gap_midpoint(self):
        assert pick_generic_weight(W_TENTH, 1, 2) == F(-13, 20)

    @settings(max_examples=1000, deadline=None)
    @given(
        data=st.lists(
            st.tuples(st.integers(-23, 0), st.integers(1, 24)),
            min_size=1, max_size=4, unique=True,
        ),
        e=st.integers(1, 4),
    )
    def test_margin_property(self, data, e):
        entries = {}
        for num, den in data:
            b = F(num, den)
            b -= math.ceil(b)
            entries[b] = entries.get(b, 0) + 1
        w = WeightSet.from_pairs("D", entries.items())
        rank = w.rank
        a = pick_generic_weight(w, e, rank)
        for b in tilde_par(w, e):
            d = abs(a - b)
            assert min(d, 1 - d) > F(1, 4 * e * rank)


class TestWeightFiltration:
    def test_single_string(self):
        assert weight_filtration([2]) == {-1: 1, 1: 1}

    def test_trivial(self):
        assert weight_filtration([1]) == {0: 1}

    def test_two_strings(self):
        assert weight_filtration([3, 1]) == {-2: 1, 0: 2, 2: 1}

    @given(st.lists(st.integers(1, 6), min_size=1, max_size=5))
    def test_total_and_symmetry(self, part):
        wf = weight_filtration(part)
        assert sum(wf.values()) == sum(part)
        assert all(wf[k] == wf[-k] for k in wf)


class TestPerturbWeights:
    def test_splits_jordan_two(self):
        w = ws((-1, 2, 2))
        res = [ResidueDatum(F(-1, 2), 0j, (2,))]
        out, out_res = perturb_weights(w, res, F(1, 100), PsiMap.identity(w))
        assert out.entries == ((F(-51, 100), 1), (F(-49, 100), 1))
        assert all(r.jordan_type == (1,) for r in out_res)

    def test_level_zero_only(self):
        w = ws((0, 1, 1))
        res = [ResidueDatum(F(0), 0j, (1,))]
        out, _ = perturb_weights(w, res, F(1, 100), PsiMap.identity(w))
        assert out.entries == ((F(0), 1),)

    def test_window_violation_rejected(self):
        w = ws((-1, 2, 1), (0, 1, 1))
        res = [ResidueDatum(F(-1, 2), 0j, (1,)), ResidueDatum(F(0), 0j, (1,))]
        psi = PsiMap({F(-1, 2): F(-99, 200), F(0): F(1, 200)})
        with pytest.raises(InvalidPsiError):
            perturb_weights(w, res, F(1, 100), psi)

    def test_eps_too_large_rejected(self):
        w = ws((-1, 2, 2))
        res = [ResidueDatum(F(-1, 2), 0j, (2,))]
        with pytest.raises(PerturbationRangeError):
            perturb_weights(w, res, F(1, 10), PsiMap.identity(w))

    def test_congruence_condition_enforced(self):
        # e = 2! = 2; -1/2 and 0 are congruent mod 1/2, offsets must agree
        w = ws((-1, 2, 1), (0, 1, 1))
        res = [ResidueDatum(F(-1, 2), 0j, (1,)), ResidueDatum(F(0), 0j, (1,))]
        psi = PsiMap({F(-1, 2): F(-1, 2), F(0): F(-1, 300)})
        with pytest.raises(InvalidPsiError):
            perturb_weights(w, res, F(1, 100), psi)

    @given(
        sizes=st.lists(st.integers(1, 3), min_size=1, max_size=2),
        eps_den=st.integers(200, 2000),
    )
    def test_rank_preserved(self, sizes, eps_den):
        m = sum(sizes)
        w = ws((-1, 2, m))
        res = [ResidueDatum(F(-1, 2), 0j, tuple(sizes))]
        eps = F(1, eps_den * math.factorial(m) ** 3 * 10)
        out, _ = perturb_weights(w, res, eps, PsiMap.identity(w))
        assert out.rank == m


class TestDegreePreservingPsi:
    def test_single_weight_identity(self):
        w = ws((-1, 2, 1))
        psi = degree_preserving_psi(w, F(3, 10))
        assert psi(F(-1, 2)) == F(-1, 2)

    def test_hand_example(self):
        w = ws((-1, 2, 1), (-1, 10, 1))
        psi = degree_preserving_psi(w, F(3, 10))
        assert psi(F(-1, 2)) == F(-9, 20)
        assert psi(F(-1, 10)) == F(-3, 20)
        total = sum(psi(b) * m for b, m in w.entries)
        assert total == F(-3, 5)

    def test_lattice_point_moves_down(self):
        w = ws((0, 1, 2))
        psi = degree_preserving_psi(w, F(1, 10))
        assert psi(F(0)) == F(0)
        assert lattice_floor(F(0), F(1, 10)) == F(-1, 10)

    @given(
        data=st.lists(
            st.tuples(st.integers(-23, 0), st.integers(1, 24), st.integers(1, 3)),
            min_size=1, max_size=4,
        ),
        eps_num=st.integers(1, 5),
        eps_den=st.integers(2, 40),
    )
    def test_exact_degree_and_closeness(self, data, eps_num, eps_den):
        entries = {}
        for num, den, m in data:
            b = F(num, den)
            b -= math.ceil(b)
            entries[b] = entries.get(b, 0) + m
        w = WeightSet.from_pairs("D", entries.items())
        eps = F(eps_num, eps_den)
        psi = degree_preserving_psi(w, eps)
        assert sum(psi(b) * m for b, m in w.entries) == sum(b * m for b, m in w.entries)
        assert all(abs(psi(b) - b) < 2 * eps for b, _ in w.entries)


def test_apply_psi_merges_multiplicities():
    w = ws((-1, 2, 1), (-1, 4, 1))
    psi = PsiMap({F(-1, 2): F(-1, 4), F(-1, 4): F(-1, 4)})
    out = apply_psi(w, psi)
    assert out.entries == ((F(-1, 4), 2),)
