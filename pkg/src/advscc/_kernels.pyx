# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot loops: dense simplex pivoting and lattice adversary search.

Both functions have drop-in twins in ``_kernels_fallback``; the shim in
``kernels`` picks whichever imports.  Keep semantics bit-identical between
the two backends: the solvers rely on deterministic output.
"""

from libc.math cimport INFINITY


def pivot_update(double[:, ::1] tab, Py_ssize_t prow, Py_ssize_t pcol):
    """In-place Gauss-Jordan pivot of a dense tableau on (prow, pcol)."""
    cdef Py_ssize_t m = tab.shape[0]
    cdef Py_ssize_t n = tab.shape[1]
    cdef double inv = 1.0 / tab[prow, pcol]
    cdef Py_ssize_t i, j
    cdef double factor
    for j in range(n):
        tab[prow, j] *= inv
    tab[prow, pcol] = 1.0
    for i in range(m):
        if i == prow:
            continue
        factor = tab[i, pcol]
        if factor == 0.0:
            continue
        for j in range(n):
            tab[i, j] -= factor * tab[prow, j]
        tab[i, pcol] = 0.0


cdef struct _Best:
    double rho
    long found
    long counts[8]


cdef void _pair_scan(double[:, ::1] T, double[:, ::1] R,
                     Py_ssize_t k, long budget,
                     double pd, double pr, double lam_floor,
                     long* prefix, _Best* best):
    # last two coordinates: c on k, budget - c on k + 1
    cdef long c
    cdef double d, r
    cdef Py_ssize_t i
    for c in range(budget + 1):
        d = pd + T[k, c] + T[k + 1, budget - c]
        if d < lam_floor:
            continue
        r = pr + R[k, c] + R[k + 1, budget - c]
        if r < best.rho:
            best.rho = r
            best.found = 1
            for i in range(k):
                best.counts[i] = prefix[i]
            best.counts[k] = c
            best.counts[k + 1] = budget - c


cdef void _search(double[:, ::1] T, double[:, ::1] R,
                  double[:, ::1] sufD, double[:, ::1] sufR,
                  Py_ssize_t n, Py_ssize_t k, long budget,
                  double pd, double pr, double lam_floor,
                  long* prefix, _Best* best):
    cdef long c
    cdef double npd, npr
    if k == n - 2:
        _pair_scan(T, R, k, budget, pd, pr, lam_floor, prefix, best)
        return
    for c in range(budget + 1):
        npd = pd + T[k, c]
        if npd + sufD[k + 1, budget - c] < lam_floor:
            continue
        npr = pr + R[k, c]
        if npr + sufR[k + 1, budget - c] >= best.rho:
            continue
        prefix[k] = c
        _search(T, R, sufD, sufR, n, k + 1, budget - c,
                npd, npr, lam_floor, prefix, best)


def lattice_min_rho(double[:, ::1] T, double[:, ::1] R, long res,
                    double lam_floor, double[:, ::1] sufD,
                    double[:, ::1] sufR):
    """Minimize sum_i R[i, c_i] over compositions (c_i) of ``res`` subject to
    sum_i T[i, c_i] >= lam_floor.

    ``sufD[k, b]`` / ``sufR[k, b]`` must hold the max / min of the partial
    sums over coordinates k.. with budget b; they drive subtree pruning.
    Returns ``(rho, counts)``, or ``(inf, None)`` when no composition is
    feasible.  Ties keep the lexicographically first composition.
    """
    cdef Py_ssize_t n = T.shape[0]
    if n > 8:
        raise ValueError("kernel supports at most 8 coordinates")
    cdef _Best best
    cdef long prefix[8]
    cdef Py_ssize_t i
    best.rho = INFINITY
    best.found = 0
    if n == 1:
        if T[0, res] >= lam_floor:
            return R[0, res], (res,)
        return INFINITY, None
    _search(T, R, sufD, sufR, n, 0, res, 0.0, 0.0, lam_floor, prefix, &best)
    if not best.found:
        return INFINITY, None
    return best.rho, tuple(best.counts[i] for i in range(n))
