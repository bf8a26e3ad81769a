"""Dense two-phase simplex solver.

Scope is deliberately narrow: the game LPs have at most a few dozen
variables, dense constraint matrices, and need deterministic vertex
solutions, so a textbook tableau method beats a general-purpose solver.
Pivoting starts with Dantzig's rule and falls back to Bland's rule after
10*(m+n) iterations to rule out cycling; all ties break toward the lowest
index.  The per-pivot elimination runs through the compiled kernel when it
is available.

Bounded variables are handled by shifting each variable to its lower bound
and adding explicit rows for finite upper bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels

__all__ = [
    "LpError",
    "NumericalBreakdown",
    "LinearProgram",
    "LpSolution",
    "solve_lp",
]

PIVOT_TOL = 1e-11
RATIO_PIVOT_TOL = 1e-7
FEAS_TOL = 1e-9


class LpError(ValueError):
    """Malformed linear program."""


class NumericalBreakdown(RuntimeError):
    """Simplex could not make reliable progress (tiny pivots / no convergence)."""


@dataclass(frozen=True)
class LinearProgram:
    """max or min of c.x subject to A_eq x = b_eq, A_ub x <= b_ub, lo <= x <= hi."""

    c: tuple[float, ...]
    sense: str = "max"
    a_eq: tuple[tuple[float, ...], ...] = ()
    b_eq: tuple[float, ...] = ()
    a_ub: tuple[tuple[float, ...], ...] = ()
    b_ub: tuple[float, ...] = ()
    bounds: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        n = len(self.c)
        if n == 0:
            raise LpError("no variables")
        if self.sense not in ("max", "min"):
            raise LpError(f"unknown sense {self.sense!r}")
        if len(self.a_eq) != len(self.b_eq) or len(self.a_ub) != len(self.b_ub):
            raise LpError("constraint matrix and rhs lengths differ")
        for row in (*self.a_eq, *self.a_ub):
            if len(row) != n:
                raise LpError("constraint row length does not match variable count")
        bounds = self.bounds if self.bounds else tuple((0.0, math.inf) for _ in range(n))
        if len(bounds) != n:
            raise LpError("bounds length does not match variable count")
        object.__setattr__(self, "bounds", bounds)
        for lo, hi in bounds:
            if not math.isfinite(lo):
                raise LpError("lower bounds must be finite")
            if lo > hi:
                raise LpError(f"empty bound interval [{lo}, {hi}]")
        for v in (*self.c, *self.b_eq, *self.b_ub,
                  *(x for row in self.a_eq for x in row),
                  *(x for row in self.a_ub for x in row)):
            if not math.isfinite(v):
                raise LpError(f"non-finite coefficient {v!r}")


@dataclass(frozen=True)
class LpSolution:
    x: tuple[float, ...]
    objective_value: float
    status: str  # optimal | infeasible | unbounded


def _choose_entering(red: np.ndarray, allowed: np.ndarray, bland: bool) -> int:
    """Index of the entering column, or -1 at optimality."""
    candidates = np.where(allowed & (red < -PIVOT_TOL))[0]
    if candidates.size == 0:
        return -1
    if bland:
        return int(candidates[0])
    # Dantzig: most negative reduced cost, lowest index on ties
    vals = red[candidates]
    return int(candidates[int(np.argmin(vals))])


def _choose_leaving(tab: np.ndarray, basis: list[int], col: int, m: int,
                    bland: bool) -> int:
    """Row index by minimum ratio test.

    Rows whose column entry is below RATIO_PIVOT_TOL are used only when no
    better-conditioned row is eligible: dividing a row by a near-zero pivot
    is what corrupts the tableau.  Near-tied ratios (degenerate vertices)
    go to the largest pivot magnitude, except under Bland's rule where the
    lowest basis index keeps the anti-cycling guarantee.
    """
    rows: list[tuple[float, float, int]] = []
    weak: list[tuple[float, float, int]] = []
    for i in range(m):
        a = tab[i, col]
        if a <= PIVOT_TOL:
            continue
        entry = (tab[i, -1] / a, a, i)
        (rows if a > RATIO_PIVOT_TOL else weak).append(entry)
    if not rows:
        rows = weak
        if not rows:
            return -1
    best = min(r[0] for r in rows)
    window = 1e-9 * (1.0 + abs(best))
    tied = [r for r in rows if r[0] <= best + window]
    if bland:
        return min(tied, key=lambda r: basis[r[2]])[2]
    return max(tied, key=lambda r: (r[1], -basis[r[2]]))[2]


def _run_phase(tab: np.ndarray, basis: list[int], cost_row: int, m: int,
               allowed: np.ndarray, dantzig_limit: int, max_iter: int) -> str:
    for it in range(max_iter):
        bland = it >= dantzig_limit
        col = _choose_entering(tab[cost_row, :-1], allowed, bland)
        if col < 0:
            return "optimal"
        row = _choose_leaving(tab, basis, col, m, bland)
        if row < 0:
            return "unbounded"
        if abs(tab[row, col]) < 1e-12:
            raise NumericalBreakdown(f"pivot magnitude {tab[row, col]!r}")
        kernels.pivot_update(tab, row, col)
        basis[row] = col
    raise NumericalBreakdown(f"no convergence after {max_iter} pivots")


def _dual_repair(tab: np.ndarray, basis: list[int], cost_row: int, m: int,
                 allowed: np.ndarray) -> None:
    """Pivot slightly negative basics out after the primal run terminates.

    Round-off can leave the final vertex a hair outside the feasible region
    (negative rhs entries the ratio test never sees again).  Dual-simplex
    steps restore feasibility while keeping the reduced costs nonnegative,
    so optimality is preserved.  Gives up quietly when a row has no eligible
    column; the residual check downstream still guards the contract.
    """
    red = tab[cost_row, :-1]
    for _ in range(50 + m // 4):
        row = int(np.argmin(tab[:m, -1]))
        if tab[row, -1] >= -1e-12:
            return
        best_j = -1
        best = (math.inf, 0.0, -1)
        for j in np.where(allowed)[0]:
            a = tab[row, j]
            if a >= -PIVOT_TOL or basis[row] == j:
                continue
            ratio = max(red[j], 0.0) / -a
            key = (ratio, a, j)  # smaller ratio, then larger |a| (a < 0)
            if key < best:
                best = key
                best_j = int(j)
        if best_j < 0:
            return
        kernels.pivot_update(tab, row, best_j)
        basis[row] = best_j


def solve_lp(lp: LinearProgram) -> LpSolution:
    """Solve ``lp``; deterministic, returns a vertex for status "optimal"."""
    n = len(lp.c)
    lo = np.array([b[0] for b in lp.bounds])
    hi = np.array([b[1] for b in lp.bounds])
    sign = -1.0 if lp.sense == "max" else 1.0
    cmin = sign * np.asarray(lp.c, dtype=float)

    # assemble rows over shifted variables y = x - lo >= 0
    rows: list[np.ndarray] = []
    rhs: list[float] = []
    is_ub: list[bool] = []
    for row, b in zip(lp.a_eq, lp.b_eq):
        r = np.asarray(row, dtype=float)
        rows.append(r)
        rhs.append(b - float(r @ lo))
        is_ub.append(False)
    for row, b in zip(lp.a_ub, lp.b_ub):
        r = np.asarray(row, dtype=float)
        rows.append(r)
        rhs.append(b - float(r @ lo))
        is_ub.append(True)
    for j in range(n):
        if math.isfinite(hi[j]):
            e = np.zeros(n)
            e[j] = 1.0
            rows.append(e)
            rhs.append(hi[j] - lo[j])
            is_ub.append(True)

    m = len(rows)
    n_slack = sum(is_ub)
    # columns: structural | slacks | artificials | rhs
    art_start = n + n_slack
    width = art_start + m + 1
    tab = np.zeros((m + 2, width))
    basis: list[int] = []
    allowed = np.zeros(width - 1, dtype=bool)
    allowed[:art_start] = True
    n_art = 0
    slack_i = 0
    for i in range(m):
        tab[i, :n] = rows[i]
        tab[i, -1] = rhs[i]
        if is_ub[i]:
            tab[i, n + slack_i] = 1.0
            slack_i += 1
        if tab[i, -1] < 0.0:
            tab[i, :] *= -1.0
        if is_ub[i] and tab[i, n + slack_i - 1] == 1.0:
            basis.append(n + slack_i - 1)
        else:
            col = art_start + n_art
            tab[i, col] = 1.0
            basis.append(col)
            n_art += 1

    # untouched copy of the standard form, for final refinement
    a0 = tab[:m, :-1].copy()
    b0 = tab[:m, -1].copy()

    phase2, phase1 = m, m + 1
    tab[phase2, :n] = cmin
    for i, b in enumerate(basis):
        if b >= art_start:
            tab[phase1, b] = 1.0
    # reduce cost rows against the initial basis
    for i, b in enumerate(basis):
        if tab[phase1, b] != 0.0:
            tab[phase1, :] -= tab[phase1, b] * tab[i, :]
        if tab[phase2, b] != 0.0:
            tab[phase2, :] -= tab[phase2, b] * tab[i, :]

    dantzig_limit = 10 * (m + n)
    max_iter = 100 * (m + width) + 1000

    if n_art > 0:
        art_allowed = allowed.copy()
        art_allowed[art_start:art_start + m] = True
        status = _run_phase(tab, basis, phase1, m, art_allowed, dantzig_limit, max_iter)
        if status != "optimal" or -tab[phase1, -1] > FEAS_TOL:
            return LpSolution(x=(), objective_value=math.nan, status="infeasible")
        # drive leftover artificials out of the basis where possible
        for i in range(m):
            if basis[i] >= art_start:
                piv = np.where(np.abs(tab[i, :art_start]) > PIVOT_TOL)[0]
                if piv.size:
                    kernels.pivot_update(tab, i, int(piv[0]))
                    basis[i] = int(piv[0])

    status = _run_phase(tab, basis, phase2, m, allowed, dantzig_limit, max_iter)
    if status == "unbounded":
        return LpSolution(x=(), objective_value=math.nan, status="unbounded")
    _dual_repair(tab, basis, phase2, m, allowed)

    y = np.zeros(width - 1)
    for i, b in enumerate(basis):
        y[b] = tab[i, -1]
    # re-deriving the basic values from the untouched standard form drops
    # the drift accumulated across pivots; keep whichever fits better
    if m > 0:
        bmat = a0[:, basis]
        try:
            refined = np.linalg.solve(bmat, b0)
            # iterative refinement; an ill-conditioned basis (near-parallel
            # generated rows) can leave the plain solve short of the 1e-8 gate
            for _ in range(2):
                resid = b0 - bmat @ refined
                if np.max(np.abs(resid)) <= 1e-12:
                    break
                refined = refined + np.linalg.solve(bmat, resid)
        except np.linalg.LinAlgError:
            refined = None
        if refined is not None and np.all(np.isfinite(refined)):
            y_ref = np.zeros(width - 1)
            y_ref[basis] = np.maximum(refined, 0.0)
            if (np.max(np.abs(a0 @ y_ref - b0))
                    <= np.max(np.abs(a0 @ y - b0))):
                y = y_ref
    x = lo + y[:n]
    x = np.minimum(np.maximum(x, lo), np.where(np.isfinite(hi), hi, x))
    _check_residuals(lp, x)
    value = float(np.asarray(lp.c) @ x)
    return LpSolution(x=tuple(float(v) for v in x), objective_value=value,
                      status="optimal")


def _check_residuals(lp: LinearProgram, x: np.ndarray) -> None:
    # defence against silent pivot corruption; 1e-8 matches the public contract
    for row, b in zip(lp.a_eq, lp.b_eq):
        if abs(float(np.asarray(row) @ x) - b) > 1e-8:
            raise NumericalBreakdown("equality residual above 1e-8")
    for row, b in zip(lp.a_ub, lp.b_ub):
        if float(np.asarray(row) @ x) - b > 1e-8:
            raise NumericalBreakdown("inequality residual above 1e-8")
