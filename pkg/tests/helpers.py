"""Instance generators shared by several test modules."""

import numpy as np

from advscc import DivergenceKind, GameSpec, make_pmf, point_mass_divergence

KL2 = DivergenceKind.parse("kl2")
SQEUCLID = DivergenceKind.parse("sqeuclid")


def random_interior_spec(rng: np.random.Generator, kind: DivergenceKind,
                         n_lo: int = 2, n_hi: int = 5,
                         delta_lo: float = 0.05, delta_hi: float = 0.5,
                         u_lo: float = 0.15, u_hi: float = 0.85) -> GameSpec:
    """Spec whose bound sits strictly between the extreme point masses.

    That placement guarantees at least one level set above the bound and
    one below, so the solver takes the LP path (neither vacuous nor
    infeasible).  Regenerates until the extremes actually separate.
    """
    while True:
        n = int(rng.integers(n_lo, n_hi + 1))
        p = make_pmf(rng.dirichlet(np.ones(n) * 2.0))
        caps = sorted(point_mass_divergence(kind, j, p) for j in range(p.n))
        if caps[-1] > caps[0] + 1e-6:
            break
    u = u_lo + (u_hi - u_lo) * rng.random()
    lam = caps[0] + u * (caps[-1] - caps[0])
    delta = float(rng.uniform(delta_lo, delta_hi))
    return GameSpec(p=p, delta=delta, lam=lam, divergence=kind)
