import itertools
import math

import numpy as np
import pytest

from advscc import LinearProgram, LpError, solve_lp


def enumerate_optimum(lp: LinearProgram):
    """Independent check: walk every candidate vertex of a small LP.

    Treats bound faces and inequality rows as one constraint pool, solves
    each n-subset exactly, filters for feasibility, and scans the
    objective.  Exponential, so only for the handful of variables used in
    tests.  Returns None when nothing is feasible.
    """
    n = len(lp.c)
    rows = []
    rhs = []
    for row, b in zip(lp.a_eq, lp.b_eq):
        rows.append(np.asarray(row, dtype=float))
        rhs.append(b)
    n_eq = len(rows)
    for row, b in zip(lp.a_ub, lp.b_ub):
        rows.append(np.asarray(row, dtype=float))
        rhs.append(b)
    for i, (lo, hi) in enumerate(lp.bounds):
        e = np.zeros(n)
        e[i] = 1.0
        rows.append(e.copy())
        rhs.append(lo)
        if math.isfinite(hi):
            rows.append(e)
            rhs.append(hi)
    best = None
    for subset in itertools.combinations(range(len(rows)), n):
        if any(i < n_eq and i not in subset for i in range(n_eq)):
            continue
        a = np.array([rows[i] for i in subset])
        b = np.array([rhs[i] for i in subset])
        try:
            x = np.linalg.solve(a, b)
        except np.linalg.LinAlgError:
            continue
        ok = True
        for row, bv in zip(lp.a_eq, lp.b_eq):
            if abs(np.asarray(row) @ x - bv) > 1e-9:
                ok = False
                break
        if ok:
            for row, bv in zip(lp.a_ub, lp.b_ub):
                if np.asarray(row) @ x - bv > 1e-9:
                    ok = False
                    break
        if ok:
            for i, (lo, hi) in enumerate(lp.bounds):
                if x[i] < lo - 1e-9 or x[i] > hi + 1e-9:
                    ok = False
                    break
        if not ok:
            continue
        val = float(np.asarray(lp.c) @ x)
        if best is None:
            best = val
        elif lp.sense == "max":
            best = max(best, val)
        else:
            best = min(best, val)
    return best


class TestValidation:
    def test_row_length_mismatch(self):
        with pytest.raises(LpError):
            LinearProgram(c=(1.0, 1.0), a_ub=((1.0,),), b_ub=(1.0,))

    def test_rhs_length_mismatch(self):
        with pytest.raises(LpError):
            LinearProgram(c=(1.0,), a_ub=((1.0,),), b_ub=(1.0, 2.0))

    def test_non_finite_coefficient(self):
        with pytest.raises(LpError):
            LinearProgram(c=(math.inf,))

    def test_bad_bounds(self):
        with pytest.raises(LpError):
            LinearProgram(c=(1.0,), bounds=((2.0, 1.0),))
        with pytest.raises(LpError):
            LinearProgram(c=(1.0,), bounds=((-math.inf, 1.0),))

    def test_unknown_sense(self):
        with pytest.raises(LpError):
            LinearProgram(c=(1.0,), sense="argmax")


class TestKnownInstances:
    def test_box_maximum(self):
        lp = LinearProgram(c=(1.0, 1.0), sense="max",
                           a_ub=((1.0, 1.0),), b_ub=(1.0,),
                           bounds=((0.0, 1.0), (0.0, 1.0)))
        sol = solve_lp(lp)
        assert sol.status == "optimal"
        assert sol.objective_value == pytest.approx(1.0, abs=1e-9)

    def test_equality_constrained(self):
        # max 2x + y st x + y = 1, x <= 0.3
        lp = LinearProgram(c=(2.0, 1.0), sense="max",
                           a_eq=((1.0, 1.0),), b_eq=(1.0,),
                           a_ub=((1.0, 0.0),), b_ub=(0.3,))
        sol = solve_lp(lp)
        assert sol.status == "optimal"
        assert sol.x[0] == pytest.approx(0.3, abs=1e-9)
        assert sol.objective_value == pytest.approx(1.3, abs=1e-9)

    def test_min_sense(self):
        lp = LinearProgram(c=(1.0, 2.0), sense="min",
                           a_ub=((-1.0, -1.0),), b_ub=(-1.0,))
        sol = solve_lp(lp)
        assert sol.status == "optimal"
        assert sol.objective_value == pytest.approx(1.0, abs=1e-9)
        assert sol.x == pytest.approx((1.0, 0.0), abs=1e-9)

    def test_negative_lower_bounds(self):
        lp = LinearProgram(c=(1.0,), sense="min", bounds=((-3.0, 5.0),))
        sol = solve_lp(lp)
        assert sol.objective_value == pytest.approx(-3.0, abs=1e-12)

    def test_infeasible(self):
        lp = LinearProgram(c=(1.0,), a_eq=((1.0,),), b_eq=(2.0,),
                           bounds=((0.0, 1.0),))
        sol = solve_lp(lp)
        assert sol.status == "infeasible"
        assert sol.x == ()
        assert math.isnan(sol.objective_value)

    def test_unbounded(self):
        lp = LinearProgram(c=(1.0,), sense="max")
        sol = solve_lp(lp)
        assert sol.status == "unbounded"

    def test_degenerate_vertex(self):
        # three constraints meet where only two are needed
        lp = LinearProgram(c=(1.0, 1.0), sense="max",
                           a_ub=((1.0, 0.0), (0.0, 1.0), (1.0, 1.0)),
                           b_ub=(0.5, 0.5, 1.0))
        sol = solve_lp(lp)
        assert sol.status == "optimal"
        assert sol.objective_value == pytest.approx(1.0, abs=1e-9)

    def test_solution_is_a_vertex(self):
        lp = LinearProgram(c=(1.0, 0.5, 0.25), sense="max",
                           a_ub=((1.0, 1.0, 1.0),), b_ub=(1.0,),
                           bounds=((0.0, 1.0),) * 3)
        sol = solve_lp(lp)
        # unique optimum at (1, 0, 0); any interior answer would be wrong
        assert sol.x == pytest.approx((1.0, 0.0, 0.0), abs=1e-9)


class TestAgainstEnumeration:
    @pytest.mark.parametrize("seed", range(30))
    def test_random_small_lp(self, seed):
        rng = np.random.default_rng(100 + seed)
        n = int(rng.integers(2, 4))
        m = int(rng.integers(1, 5))
        a_ub = tuple(tuple(float(v) for v in rng.uniform(-1, 1, n))
                     for _ in range(m))
        b_ub = tuple(float(v) for v in rng.uniform(0.2, 1.5, m))
        c = tuple(float(v) for v in rng.uniform(-1, 1, n))
        sense = "max" if rng.random() < 0.5 else "min"
        bounds = tuple((0.0, float(rng.uniform(0.5, 2.0))) for _ in range(n))
        lp = LinearProgram(c=c, sense=sense, a_ub=a_ub, b_ub=b_ub,
                           bounds=bounds)
        sol = solve_lp(lp)
        expect = enumerate_optimum(lp)
        assert sol.status == "optimal"
        assert expect is not None
        assert sol.objective_value == pytest.approx(expect, abs=1e-7)

    @pytest.mark.parametrize("seed", range(10))
    def test_random_with_equality_row(self, seed):
        rng = np.random.default_rng(500 + seed)
        n = 3
        w = rng.uniform(0.2, 1.0, n)
        a_eq = ((float(w[0]), float(w[1]), float(w[2])),)
        b_eq = (float(0.5 * w.sum() * rng.uniform(0.3, 0.9)),)
        c = tuple(float(v) for v in rng.uniform(-1, 1, n))
        lp = LinearProgram(c=c, sense="max", a_eq=a_eq, b_eq=b_eq,
                           bounds=((0.0, 1.0),) * n)
        sol = solve_lp(lp)
        expect = enumerate_optimum(lp)
        assert sol.status == "optimal"
        assert expect is not None
        assert sol.objective_value == pytest.approx(expect, abs=1e-7)
        assert np.asarray(a_eq[0]) @ np.asarray(sol.x) == pytest.approx(
            b_eq[0], abs=1e-8)
