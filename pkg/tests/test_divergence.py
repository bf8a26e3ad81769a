import math

import numpy as np
import pytest

from advscc import (BREGMAN_GENERATORS, DivergenceKind, ModelError,
                    TransferSpec, check_transfer_feasibility, evaluate,
                    make_pmf, point_mass_divergence)
from advscc.core_model import DimensionMismatch
from advscc.divergence import IndexOutOfRange, OffSimplex, UnknownDivergence

from helpers import KL2, SQEUCLID


class TestParse:
    def test_known_names(self):
        for name in ("kl2", "sqeuclid", "bregman:square", "bregman:xlog2x",
                     "bregman:exp"):
            kind = DivergenceKind.parse(name)
            assert kind.name == name

    def test_unknown_name(self):
        with pytest.raises(UnknownDivergence):
            DivergenceKind.parse("tv")
        with pytest.raises(UnknownDivergence):
            DivergenceKind.parse("bregman:cube")

    def test_parse_is_value_comparable(self):
        assert DivergenceKind.parse("kl2") == KL2
        assert hash(DivergenceKind.parse("sqeuclid")) == hash(SQEUCLID)

    def test_generator_table_entries(self):
        assert set(BREGMAN_GENERATORS) == {"square", "xlog2x", "exp"}


class TestEvaluate:
    def test_zero_at_target(self):
        p = make_pmf([0.2, 0.3, 0.5])
        assert evaluate(KL2, p.probs, p) == pytest.approx(0.0, abs=1e-12)
        assert evaluate(SQEUCLID, p.probs, p) == pytest.approx(0.0, abs=1e-15)

    def test_kl2_closed_value(self):
        p = make_pmf([0.25, 0.75])
        q = (0.5, 0.5)
        expect = 0.5 * math.log2(0.5 / 0.25) + 0.5 * math.log2(0.5 / 0.75)
        assert evaluate(KL2, q, p) == pytest.approx(expect, abs=1e-14)

    def test_kl2_zero_entry_contributes_nothing(self):
        p = make_pmf([0.25, 0.75])
        assert evaluate(KL2, (0.0, 1.0), p) == pytest.approx(
            math.log2(1 / 0.75), abs=1e-14)

    def test_sqeuclid_closed_value(self):
        p = make_pmf([0.25, 0.75])
        q = (0.6, 0.4)
        assert evaluate(SQEUCLID, q, p) == pytest.approx(
            0.35 ** 2 + 0.35 ** 2, abs=1e-14)

    def test_bregman_square_matches_sqeuclid(self):
        kind = DivergenceKind.parse("bregman:square")
        p = make_pmf([0.1, 0.4, 0.5])
        rng = np.random.default_rng(3)
        for _ in range(20):
            q = rng.dirichlet(np.ones(3))
            q = tuple(float(v) for v in q)
            assert evaluate(kind, q, p) == pytest.approx(
                evaluate(SQEUCLID, q, p), abs=1e-12)

    def test_nonnegative_everywhere(self):
        rng = np.random.default_rng(11)
        p = make_pmf(rng.dirichlet(np.ones(4)))
        for kind in (KL2, SQEUCLID, DivergenceKind.parse("bregman:xlog2x"),
                     DivergenceKind.parse("bregman:exp")):
            for _ in range(50):
                q = tuple(float(v) for v in rng.dirichlet(np.ones(4)))
                assert evaluate(kind, q, p) >= 0.0

    def test_off_simplex_rejected(self):
        p = make_pmf([0.5, 0.5])
        with pytest.raises(OffSimplex):
            evaluate(KL2, (0.5, 0.6), p)
        with pytest.raises(OffSimplex):
            evaluate(KL2, (-0.1, 1.1), p)

    def test_length_mismatch_rejected(self):
        p = make_pmf([0.5, 0.5])
        with pytest.raises(DimensionMismatch):
            evaluate(KL2, (0.2, 0.3, 0.5), p)


class TestPointMass:
    def test_kl2_closed_form(self):
        p = make_pmf([0.05, 0.2, 0.75])
        for j in range(3):
            assert point_mass_divergence(KL2, j, p) == pytest.approx(
                -math.log2(p.probs[j]), abs=1e-14)

    def test_sqeuclid_closed_form(self):
        p = make_pmf([0.05, 0.2, 0.75])
        for j in range(3):
            expect = (1.0 - p.probs[j]) ** 2 + sum(
                p.probs[i] ** 2 for i in range(3) if i != j)
            assert point_mass_divergence(SQEUCLID, j, p) == pytest.approx(
                expect, abs=1e-14)

    def test_agrees_with_evaluate_on_onehot(self):
        rng = np.random.default_rng(4)
        for kind in (KL2, SQEUCLID, DivergenceKind.parse("bregman:exp")):
            for _ in range(20):
                n = int(rng.integers(2, 7))
                p = make_pmf(rng.dirichlet(np.ones(n)))
                j = int(rng.integers(n))
                onehot = tuple(1.0 if i == j else 0.0 for i in range(n))
                assert point_mass_divergence(kind, j, p) == pytest.approx(
                    evaluate(kind, onehot, p), rel=1e-12, abs=1e-12)

    def test_index_out_of_range(self):
        p = make_pmf([0.5, 0.5])
        with pytest.raises(IndexOutOfRange):
            point_mass_divergence(KL2, 2, p)
        with pytest.raises(IndexOutOfRange):
            point_mass_divergence(KL2, -1, p)

    def test_rarer_event_has_larger_divergence(self):
        p = make_pmf([0.05, 0.2, 0.75])
        for kind in (KL2, SQEUCLID):
            d = [point_mass_divergence(kind, j, p) for j in range(3)]
            assert d[0] > d[1] > d[2]


class TestTermArray:
    def test_matches_scalar_term(self):
        grid = np.linspace(0.0, 1.0, 101)
        for kind in (KL2, SQEUCLID, DivergenceKind.parse("bregman:xlog2x")):
            arr = kind.term_array(grid, 0.3)
            scalars = np.array([kind.term(float(q), 0.3) for q in grid])
            np.testing.assert_allclose(arr, scalars, atol=1e-14)

    def test_no_nan_at_zero(self):
        arr = KL2.term_array(np.array([0.0]), 0.4)
        assert arr[0] == 0.0


class TestTransfer:
    def test_spec_validation(self):
        with pytest.raises(ModelError):
            TransferSpec(from_event=1, to_event=1)

    def test_moves_all_mass(self):
        p = make_pmf([0.1, 0.4, 0.5])
        q = (0.3, 0.3, 0.4)
        moved, value = check_transfer_feasibility(
            KL2, p, q, TransferSpec(from_event=2, to_event=0))
        assert moved == (0.7, 0.3, 0.0)
        assert value == pytest.approx(evaluate(KL2, moved, p), abs=1e-14)

    def test_transfer_onto_rarer_event_never_decreases(self):
        # moving mass onto the rarer of two events keeps the divergence up
        rng = np.random.default_rng(9)
        for kind in (KL2, SQEUCLID):
            for _ in range(200):
                n = int(rng.integers(2, 6))
                p = make_pmf(rng.dirichlet(np.ones(n)))
                q = tuple(float(v) for v in rng.dirichlet(np.ones(n)))
                j, k = sorted(rng.choice(n, size=2, replace=False),
                              key=lambda i: (p.probs[i], i))
                if q[j] >= q[k] or abs(p.probs[j] - p.probs[k]) <= 1e-12:
                    continue
                moved, value = check_transfer_feasibility(
                    kind, p, q, TransferSpec(from_event=int(k), to_event=int(j)))
                assert value >= evaluate(kind, q, p) - 1e-10

    def test_swap_on_equal_masses_preserves_divergence(self):
        p = make_pmf([0.25, 0.25, 0.5])
        rng = np.random.default_rng(2)
        for kind in (KL2, SQEUCLID):
            for _ in range(100):
                q = tuple(float(v) for v in rng.dirichlet(np.ones(3)))
                swapped = (q[1], q[0], q[2])
                assert evaluate(kind, swapped, p) == pytest.approx(
                    evaluate(kind, q, p), abs=1e-10)
