"""Pure-numpy twins of the compiled kernels.

Semantics must stay bit-identical to ``_kernels.pyx``: same pivot arithmetic,
same lexicographic tie-breaking in the lattice search.  Used automatically
when the extension is not built; also exercised directly by the tests and
benchmarks.
"""

from __future__ import annotations

import numpy as np


def pivot_update(tab: np.ndarray, prow: int, pcol: int) -> None:
    """In-place Gauss-Jordan pivot of a dense tableau on (prow, pcol)."""
    tab[prow, :] *= 1.0 / tab[prow, pcol]
    tab[prow, pcol] = 1.0
    factors = tab[:, pcol].copy()
    factors[prow] = 0.0
    tab -= np.outer(factors, tab[prow, :])
    tab[:, pcol] = 0.0
    tab[prow, pcol] = 1.0


def lattice_min_rho(T, R, res, lam_floor, sufD, sufR):
    """Minimize sum_i R[i, c_i] over compositions (c_i) of ``res`` subject to
    sum_i T[i, c_i] >= lam_floor.

    Same contract as the compiled version: suffix bound tables prune the
    prefix recursion, the final two coordinates are scanned as one batch, and
    ties keep the lexicographically first composition.
    """
    T = np.asarray(T, dtype=float)
    R = np.asarray(R, dtype=float)
    n = T.shape[0]
    if n > 8:
        raise ValueError("kernel supports at most 8 coordinates")
    if n == 1:
        if T[0, res] >= lam_floor:
            return float(R[0, res]), (res,)
        return np.inf, None

    best_rho = np.inf
    best_counts = None
    prefix = [0] * n

    def scan_pair(k, budget, pd, pr):
        nonlocal best_rho, best_counts
        d = pd + T[k, : budget + 1] + T[k + 1, budget::-1]
        feasible = d >= lam_floor
        if not feasible.any():
            return
        r = pr + R[k, : budget + 1] + R[k + 1, budget::-1]
        r = np.where(feasible, r, np.inf)
        c = int(np.argmin(r))
        if r[c] < best_rho:
            best_rho = float(r[c])
            best_counts = tuple(prefix[:k]) + (c, budget - c)

    def search(k, budget, pd, pr):
        if k == n - 2:
            scan_pair(k, budget, pd, pr)
            return
        for c in range(budget + 1):
            npd = pd + T[k, c]
            if npd + sufD[k + 1, budget - c] < lam_floor:
                continue
            npr = pr + R[k, c]
            if npr + sufR[k + 1, budget - c] >= best_rho:
                continue
            prefix[k] = c
            search(k + 1, budget - c, npd, npr)

    search(0, res, 0.0, 0.0)
    if best_counts is None:
        return np.inf, None
    return best_rho, best_counts
