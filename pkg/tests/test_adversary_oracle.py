import numpy as np
import pytest

from advscc import (GameSpec, RejectionFunction, best_response,
                    brute_force_best_response, evaluate, make_pmf,
                    property_abc_transfer_check, point_mass_divergence,
                    solve_soft, unrestricted_best_response)
from advscc.adversary_oracle import (AdversaryInfeasible, NoFeasiblePoint,
                                     TooLarge)
from advscc.core_model import DimensionMismatch

from helpers import KL2, SQEUCLID, random_interior_spec


class TestStructured:
    def test_singleton_optimum(self):
        # the globally cheapest rate sits on a feasible event, so the point
        # mass there beats every boundary mix
        p = make_pmf([0.1, 0.3, 0.6])
        spec = GameSpec(p=p, delta=0.2, lam=0.9, divergence=KL2)
        r = RejectionFunction((0.9, 0.1, 0.5))
        resp = best_response(r, spec)
        assert resp.mode == "structured"
        assert resp.value == pytest.approx(0.1, abs=1e-12)
        assert resp.q == (0.0, 1.0, 0.0)

    def test_pair_mix_optimum(self):
        # frozen alongside tests/oracles/lattice_reference.py: the bound
        # rules out the cheap singleton, forcing a boundary mix
        p = make_pmf([0.1, 0.3, 0.6])
        spec = GameSpec(p=p, delta=0.2, lam=1.0, divergence=KL2)
        r = RejectionFunction((0.5, 0.2, 0.1))
        resp = best_response(r, spec)
        assert resp.value == pytest.approx(0.1856462684193487, abs=1e-9)
        assert evaluate(KL2, resp.q, p) == pytest.approx(1.0, abs=1e-9)

    def test_feasibility_of_returned_q(self):
        rng = np.random.default_rng(3)
        for trial in range(25):
            kind = KL2 if trial % 2 == 0 else SQEUCLID
            spec = random_interior_spec(rng, kind)
            rates = tuple(float(v) for v in rng.uniform(0, 1, spec.p.n))
            resp = best_response(RejectionFunction(rates), spec)
            assert evaluate(kind, resp.q, spec.p) >= spec.lam - 1e-9
            assert sum(1 for v in resp.q if v > 0.0) <= 2

    def test_value_not_above_any_feasible_singleton(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            spec = random_interior_spec(rng, KL2)
            rates = tuple(float(v) for v in rng.uniform(0, 1, spec.p.n))
            resp = best_response(RejectionFunction(rates), spec)
            for j in range(spec.p.n):
                if point_mass_divergence(KL2, j, spec.p) >= spec.lam:
                    assert resp.value <= rates[j] + 1e-12

    def test_infeasible_raises(self):
        p = make_pmf([0.4, 0.6])
        spec = GameSpec(p=p, delta=0.2, lam=30.0, divergence=KL2)
        with pytest.raises(AdversaryInfeasible):
            best_response(RejectionFunction((0.5, 0.5)), spec)

    def test_rate_length_mismatch(self):
        p = make_pmf([0.4, 0.6])
        spec = GameSpec(p=p, delta=0.2, lam=0.3, divergence=KL2)
        with pytest.raises(DimensionMismatch):
            best_response(RejectionFunction((0.5, 0.5, 0.5)), spec)

    def test_accepts_original_length_rates_with_stripped_events(self):
        p = make_pmf([0.4, 0.0, 0.6])
        spec = GameSpec(p=p, delta=0.2, lam=0.3, divergence=KL2)
        resp = best_response(RejectionFunction((0.5, 1.0, 0.1)), spec)
        assert resp.value <= 0.5 + 1e-12


class TestUnrestricted:
    def test_exact_minimum_lowest_index(self):
        p = make_pmf([0.2, 0.3, 0.5])
        r = RejectionFunction((0.4, 0.1, 0.1))
        resp = unrestricted_best_response(r, p)
        assert resp.value == 0.1
        assert resp.q == (0.0, 1.0, 0.0)
        assert resp.mode == "unrestricted"


class TestBruteForce:
    def test_frozen_reference_instance(self):
        # pinned by tests/oracles/lattice_reference.py (plain nested loops)
        p = make_pmf([0.1, 0.3, 0.6])
        spec = GameSpec(p=p, delta=0.2, lam=1.0, divergence=KL2)
        r = RejectionFunction((0.5, 0.2, 0.1))
        resp = brute_force_best_response(r, spec, 300)
        assert resp.mode == "brute"
        assert resp.value == 0.18566666666666667
        counts = tuple(round(v * 300) for v in resp.q)
        assert counts == (0, 257, 43)

    def test_too_many_events(self):
        p = make_pmf([1.0 / 6] * 6)
        spec = GameSpec(p=p, delta=0.2, lam=0.5, divergence=KL2)
        with pytest.raises(TooLarge):
            brute_force_best_response(
                RejectionFunction((0.5,) * 6), spec, 200)

    def test_resolution_floor(self):
        p = make_pmf([0.5, 0.5])
        spec = GameSpec(p=p, delta=0.2, lam=0.5, divergence=KL2)
        with pytest.raises(ValueError):
            brute_force_best_response(RejectionFunction((0.5, 0.5)), spec, 50)

    def test_no_feasible_lattice_point(self):
        p = make_pmf([0.5, 0.5])
        spec = GameSpec(p=p, delta=0.2, lam=0.999, divergence=KL2)
        # max lattice divergence is 1 (point mass); demand just under it is
        # fine, but an unreachable bound raises
        far = GameSpec(p=p, delta=0.2, lam=30.0, divergence=KL2)
        with pytest.raises(NoFeasiblePoint):
            brute_force_best_response(RejectionFunction((0.5, 0.5)), far, 200)
        resp = brute_force_best_response(RejectionFunction((0.3, 0.5)),
                                         spec, 200)
        assert resp.value in (0.3, 0.5)

    def test_structured_never_above_lattice(self):
        rng = np.random.default_rng(6)
        for trial in range(15):
            kind = KL2 if trial % 2 == 0 else SQEUCLID
            spec = random_interior_spec(rng, kind, n_hi=4)
            rates = tuple(float(v) for v in rng.uniform(0, 1, spec.p.n))
            r = RejectionFunction(rates)
            res = 400
            brute = brute_force_best_response(r, spec, res)
            structured = best_response(r, spec)
            assert structured.value <= brute.value + 1e-12

    def test_lattice_close_to_continuous(self):
        rng = np.random.default_rng(16)
        for trial in range(10):
            kind = SQEUCLID if trial % 2 == 0 else KL2
            spec = random_interior_spec(rng, kind, n_hi=4)
            rates = tuple(float(v) for v in rng.uniform(0, 1, spec.p.n))
            r = RejectionFunction(rates)
            res = 500
            brute = brute_force_best_response(r, spec, res)
            structured = best_response(r, spec)
            assert brute.value <= structured.value + 2.0 * spec.p.n / res


class TestSolverCrossCheck:
    def test_soft_optimum_matches_lattice(self):
        rng = np.random.default_rng(17)
        for trial in range(10):
            kind = KL2 if trial % 2 == 0 else SQEUCLID
            spec = random_interior_spec(rng, kind, n_hi=4)
            out = solve_soft(spec)
            assert out.status == "solved"
            brute = brute_force_best_response(out.r_events, spec, 800)
            assert abs(out.z - brute.value) <= 2.0 * spec.p.n / 800


class TestTransferBattery:
    @pytest.mark.parametrize("kind", [KL2, SQEUCLID], ids=["kl2", "sqeuclid"])
    def test_all_properties_pass(self, kind):
        rng = np.random.default_rng(18)
        for _ in range(3):
            p = make_pmf(rng.dirichlet(np.ones(6)))
            cap = max(point_mass_divergence(kind, j, p) for j in range(p.n))
            spec = GameSpec(p=p, delta=0.1, lam=0.4 * cap, divergence=kind)
            report = property_abc_transfer_check(
                p, spec, trials=200, seed=int(rng.integers(2 ** 32)))
            assert report.sampled > 0
            assert report.failures == ()
            assert report.all_passed
            assert report.a_passed == report.a_checked
            assert report.b_passed == report.b_checked
            assert report.c_passed == report.c_checked

    def test_trials_validation(self):
        p = make_pmf([0.5, 0.5])
        spec = GameSpec(p=p, delta=0.1, lam=0.5, divergence=KL2)
        with pytest.raises(ValueError):
            property_abc_transfer_check(p, spec, trials=0)
