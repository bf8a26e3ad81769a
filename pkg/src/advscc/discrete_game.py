"""Constrained rejection games over finite event spaces.

The solver pipeline:

1. :func:`partition_level_sets` groups events of (numerically) equal target
   probability into level sets S_1 < S_2 < ... < S_K, ascending in mass.
2. :func:`classify_level_sets` compares each set's point-mass divergence
   D^S against the adversary bound ``lam`` and labels it L (above), M (at,
   within tolerance) or H (below).  Because D^S is non-increasing along the
   partition, two degenerate regimes are detectable here: every set in H
   means no adversary distribution can reach the bound
   (``adversary_infeasible``), and no set in H means the bound restricts
   nothing (``constraint_vacuous``).
3. :func:`pair_root` finds, for a set pair (l, h) straddling the bound, the
   unique mixing weight q in (0, 1) at which the two-point distribution
   q X^(l) + (1-q) X^(h) sits exactly on the bound.
4. :func:`solve_soft` / :func:`solve_dual` assemble the finite LP whose
   constraints are exactly those mixtures plus the M singletons, and solve
   it for the optimal randomized strategy.  :func:`solve_hard_ldrs` builds
   the deterministic low-density prefix strategy instead.

Event indices in partitions, witnesses and per-event rate vectors refer to
the pmf's surviving events; expanded rejection functions are re-embedded
into the original index space with stripped (zero-mass) events rejected
outright.

Rate vectors returned by the solvers are non-increasing across level sets
and constant within each one; ties between equally good LP vertices are
resolved by the deterministic pivot order of the simplex engine, so tests
should compare objective values rather than vertex identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core_model import GameSpec, Pmf, RejectionFunction, uniform_soft_rejector
from .divergence import DivergenceKind, point_mass_divergence
from .lp_solver import LinearProgram, LpSolution, solve_lp

__all__ = [
    "NotBracketed",
    "InternalInconsistency",
    "LevelSet",
    "LevelSetPartition",
    "ConstraintClasses",
    "SolveOutcome",
    "HardOutcome",
    "DualOutcome",
    "partition_level_sets",
    "classify_level_sets",
    "pair_root",
    "solve_soft",
    "solve_hard_ldrs",
    "solve_dual",
]

#: Events whose probabilities differ by at most this share a level set.
GROUP_TOL = 1e-12
#: A set whose divergence is within this of lam belongs to class M.
AT_BOUND_TOL = 1e-10
#: Root accuracy guaranteed by pair_root.
ROOT_TOL = 1e-10
#: Pair-constraint count above which the LP is built by row generation.
ROW_GEN_THRESHOLD = 64


class NotBracketed(RuntimeError):
    """pair_root called for a pair that does not straddle the bound (a bug)."""


class InternalInconsistency(RuntimeError):
    """A structural guarantee of the solver failed to hold (a bug)."""


@dataclass(frozen=True)
class LevelSet:
    """One group of equal-probability events.

    ``members`` are surviving-event indices in ascending order; ``prob`` is
    the representative (first member's) probability; ``mass`` the total mass
    of the group.
    """

    members: tuple[int, ...]
    prob: float
    mass: float

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class LevelSetPartition:
    """Level sets in strictly ascending probability order."""

    sets: tuple[LevelSet, ...]

    @property
    def K(self) -> int:
        return len(self.sets)

    def n_events(self) -> int:
        return sum(s.size for s in self.sets)

    def expand(self, per_set: tuple[float, ...]) -> tuple[float, ...]:
        """Per-set values spread onto per-event positions."""
        out = [0.0] * self.n_events()
        for s, v in zip(self.sets, per_set):
            for j in s.members:
                out[j] = v
        return tuple(out)

    def set_of_event(self, j: int) -> int:
        for i, s in enumerate(self.sets):
            if j in s.members:
                return i
        raise IndexError(f"event {j} not in partition")


@dataclass(frozen=True)
class ConstraintClasses:
    """Divergence class per level set, relative to the bound ``lam``.

    ``labels[i]`` is "L", "M" or "H" according to D^{S_i} being above, at or
    below ``lam``.  ``w`` is the largest set index in L∪M, or None when L∪M
    is empty.
    """

    lam: float
    div: tuple[float, ...]
    labels: tuple[str, ...]
    w: int | None

    @property
    def L(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.labels) if c == "L")

    @property
    def M(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.labels) if c == "M")

    @property
    def H(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.labels) if c == "H")

    @property
    def infeasible(self) -> bool:
        """True when no set reaches the bound: the adversary cannot play."""
        return self.w is None

    @property
    def vacuous(self) -> bool:
        """True when even the most probable set reaches the bound."""
        return self.labels[-1] != "H"


@dataclass(frozen=True)
class SolveOutcome:
    """Result of the randomized-strategy game.

    ``z`` is the guaranteed worst-case rejection rate (None when the
    adversary cannot play at all), ``type2 = 1 - z``.  ``witness_q`` is an
    adversary distribution (support at most 2, dense over surviving events)
    attaining the worst case.  ``vulnerable`` marks solutions whose minimum
    rate is exposed on a set that reaches the bound; such solutions always
    coincide with the constant-delta strategy.
    """

    status: str  # solved | constraint_vacuous | adversary_infeasible
    r_levels: tuple[float, ...]
    r_events: RejectionFunction
    z: float | None
    type2: float | None
    witness_q: tuple[float, ...] | None
    vulnerable: bool
    partition: LevelSetPartition
    classes: ConstraintClasses


@dataclass(frozen=True)
class HardOutcome:
    """Result of the deterministic low-density prefix strategy."""

    status: str
    r_events: RejectionFunction
    rejected_mass: float
    value: float | None
    witness_q: tuple[float, ...] | None
    partition: LevelSetPartition
    classes: ConstraintClasses


@dataclass(frozen=True)
class DualOutcome:
    """Result of the reversed game: minimize type I at capped type II."""

    status: str
    r_levels: tuple[float, ...]
    r_events: RejectionFunction
    z_i: float | None
    witness_q: tuple[float, ...] | None
    vulnerable: bool
    partition: LevelSetPartition
    classes: ConstraintClasses


def partition_level_sets(p: Pmf, tol: float = GROUP_TOL) -> LevelSetPartition:
    """Group events whose probabilities agree within ``tol``.

    Grouping is transitive along the sorted order: consecutive sorted
    probabilities within ``tol`` of each other land in the same set.  Sets
    come out in strictly ascending probability.
    """
    if tol < 0.0:
        raise ValueError(f"tol must be non-negative, got {tol!r}")
    sets: list[LevelSet] = []
    current: list[int] = []
    for j in p.order:
        if current and p.probs[j] - p.probs[current[-1]] > tol:
            members = tuple(sorted(current))
            sets.append(LevelSet(
                members=members,
                prob=p.probs[members[0]],
                mass=math.fsum(p.probs[i] for i in members),
            ))
            current = []
        current.append(j)
    members = tuple(sorted(current))
    sets.append(LevelSet(
        members=members,
        prob=p.probs[members[0]],
        mass=math.fsum(p.probs[i] for i in members),
    ))
    return LevelSetPartition(sets=tuple(sets))


def classify_level_sets(part: LevelSetPartition, kind: DivergenceKind,
                        lam: float, p: Pmf) -> ConstraintClasses:
    """Label each level set L / M / H against the bound ``lam``."""
    if lam < 0.0:
        raise ValueError(f"lam must be non-negative, got {lam!r}")
    div = tuple(
        point_mass_divergence(kind, s.members[0], p) for s in part.sets
    )
    labels = []
    for d in div:
        if abs(d - lam) <= AT_BOUND_TOL:
            labels.append("M")
        elif d > lam:
            labels.append("L")
        else:
            labels.append("H")
    w = None
    for i in range(part.K - 1, -1, -1):
        if labels[i] != "H":
            w = i
            break
    return ConstraintClasses(lam=lam, div=div, labels=tuple(labels), w=w)


def _pair_curve_base(kind: DivergenceKind, p: Pmf, j: int, k: int) -> float:
    # contribution of the all-zero coordinates of a two-point distribution
    return math.fsum(
        kind.term(0.0, pi) for i, pi in enumerate(p.probs) if i != j and i != k
    )


def pair_root(l: int, h: int, kind: DivergenceKind, lam: float, p: Pmf,
              part: LevelSetPartition | None = None) -> float:
    """Mixing weight q at which q X^(l-rep) + (1-q) X^(h-rep) meets ``lam``.

    ``l`` and ``h`` are level-set indices with D^{S_l} above and D^{S_h}
    below the bound.  The divergence of the mixture is convex in q with
    endpoint values D^{S_h} and D^{S_l}, so it crosses ``lam`` exactly once;
    bisection on the sign pins the crossing to within ``ROOT_TOL`` in value.
    Raises :class:`NotBracketed` when the endpoint values do not straddle
    ``lam``, which indicates a misclassified pair.
    """
    if part is None:
        part = partition_level_sets(p)
    j = part.sets[l].members[0]
    k = part.sets[h].members[0]
    pj, pk = p.probs[j], p.probs[k]
    base = _pair_curve_base(kind, p, j, k)

    def g(q: float) -> float:
        return kind.term(q, pj) + kind.term(1.0 - q, pk) + base

    g0, g1 = g(0.0), g(1.0)
    if not (g0 < lam + AT_BOUND_TOL and g1 > lam - AT_BOUND_TOL):
        raise NotBracketed(
            f"pair ({l}, {h}) has endpoint divergences ({g1!r}, {g0!r}) "
            f"that do not straddle {lam!r}"
        )
    lo, hi = 0.0, 1.0
    q = 0.5
    for _ in range(200):
        q = 0.5 * (lo + hi)
        val = g(q)
        if abs(val - lam) <= 1e-12 or hi - lo <= 1e-15:
            break
        if val < lam:
            lo = q
        else:
            hi = q
    if abs(g(q) - lam) > ROOT_TOL:
        raise NotBracketed(f"bisection stalled at q={q!r} for pair ({l}, {h})")
    return q


@lru_cache(maxsize=256)
def _set_pair_roots(p: Pmf, kind: DivergenceKind, lam: float
                    ) -> tuple[LevelSetPartition, ConstraintClasses,
                               dict[tuple[int, int], float]]:
    """Partition, classes, and every (L-set, H-set) root for one instance.

    All roots are found in one vectorized bisection so that repeated solves
    and best-response queries on the same instance stay cheap.  The cache
    key is the frozen (pmf, divergence, bound) triple.
    """
    part = partition_level_sets(p)
    classes = classify_level_sets(part, kind, lam, p)
    L, H = classes.L, classes.H
    roots: dict[tuple[int, int], float] = {}
    if not L or not H:
        return part, classes, roots
    pairs = [(l, h) for l in L for h in H]
    pl = np.array([part.sets[l].prob for l, _ in pairs])
    ph = np.array([part.sets[h].prob for _, h in pairs])
    total0 = math.fsum(kind.term(0.0, pi) for pi in p.probs)
    base = total0 - kind.term_array(np.zeros_like(pl), pl) \
                  - kind.term_array(np.zeros_like(ph), ph)
    lo = np.zeros(len(pairs))
    hi = np.ones(len(pairs))
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        val = kind.term_array(mid, pl) + kind.term_array(1.0 - mid, ph) + base
        below = val < lam
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    mid = 0.5 * (lo + hi)
    for (pair, q) in zip(pairs, mid):
        roots[pair] = float(q)
    return part, classes, roots


def _masses(part: LevelSetPartition) -> np.ndarray:
    return np.array([s.mass for s in part.sets])


def _embed_rates(p: Pmf, surviving_rates: tuple[float, ...],
                 kind: str = "soft") -> RejectionFunction:
    """Surviving-event rates embedded into the original index space."""
    if not p.stripped:
        return RejectionFunction(rates=surviving_rates, kind=kind)
    out = [1.0] * p.original_n
    stripped = set(p.stripped)
    survivors = [i for i in range(p.original_n) if i not in stripped]
    for i, r in zip(survivors, surviving_rates):
        out[i] = r
    return RejectionFunction(rates=tuple(out), kind=kind)


def _clean_levels(x: np.ndarray) -> tuple[float, ...]:
    # snap LP round-off so the monotone-chain invariant holds exactly
    out = []
    prev = 1.0
    for v in x:
        v = min(max(float(v), 0.0), prev)
        out.append(v)
        prev = v
    return tuple(out)


def _solve_game_lp(part: LevelSetPartition, classes: ConstraintClasses,
                   roots: dict[tuple[int, int], float], *, dual: bool,
                   budget: float) -> LpSolution:
    """Build and solve the primal or dual level-set LP.

    Variables are the K set rates followed by the value variable.  In the
    primal, ``budget`` is the type I allowance and the value is maximized
    subject to every adversary response exceeding it; in the dual,
    ``budget`` is the required worst-case rejection rate (one minus the type
    II allowance) and the type I spend is minimized.  When the pair pool is
    large the LP is grown by row generation: solve with a subset of pair
    constraints, add the most violated ones, repeat; on exit the solution
    is feasible for every pair constraint, hence optimal for the full LP.
    """
    K = part.K
    m = _masses(part)
    w = classes.w
    pairs = sorted(roots)

    def build(active: list[tuple[int, int]]) -> LinearProgram:
        nvar = K + 1
        c = [0.0] * K + [1.0]
        a_ub: list[tuple[float, ...]] = []
        b_ub: list[float] = []
        for i in range(K - 1):
            row = [0.0] * nvar
            row[i + 1], row[i] = 1.0, -1.0
            a_ub.append(tuple(row))
            b_ub.append(0.0)

        def response_row(coeffs: dict[int, float]) -> None:
            # value <= response (primal) / response >= budget (dual)
            row = [0.0] * nvar
            for i, v in coeffs.items():
                row[i] = -v
            if dual:
                a_ub.append(tuple(row))
                b_ub.append(-budget)
            else:
                row[K] = 1.0
                a_ub.append(tuple(row))
                b_ub.append(0.0)

        response_row({w: 1.0})
        for i in classes.M:
            response_row({i: 1.0})
        for (l, h) in active:
            q = roots[(l, h)]
            response_row({l: q, h: 1.0 - q})

        mass_row = tuple(m) + (0.0,) if not dual else tuple(m) + (-1.0,)
        if dual:
            lp = LinearProgram(
                c=tuple(c), sense="min",
                a_ub=(mass_row,) + tuple(a_ub), b_ub=(0.0,) + tuple(b_ub),
                bounds=tuple([(0.0, 1.0)] * K + [(0.0, 1.0)]),
            )
        else:
            lp = LinearProgram(
                c=tuple(c), sense="max",
                a_eq=(mass_row,), b_eq=(budget,),
                a_ub=tuple(a_ub), b_ub=tuple(b_ub),
                bounds=tuple([(0.0, 1.0)] * K + [(0.0, 1.0)]),
            )
        return lp

    if len(pairs) <= ROW_GEN_THRESHOLD:
        return solve_lp(build(list(pairs)))

    ql = np.array([roots[pr] for pr in pairs])
    lidx = np.array([pr[0] for pr in pairs])
    hidx = np.array([pr[1] for pr in pairs])
    active: list[tuple[int, int]] = []
    in_active = set()
    sol = solve_lp(build(active))
    for _ in range(len(pairs)):
        if sol.status != "optimal":
            return sol
        x = np.asarray(sol.x)
        resp = ql * x[lidx] + (1.0 - ql) * x[hidx]
        floor = budget if dual else x[K]
        viol = floor - resp
        order = sorted(
            (i for i in range(len(pairs)) if viol[i] > 1e-9
             and pairs[i] not in in_active),
            key=lambda i: (-viol[i], pairs[i]),
        )
        if not order:
            return sol
        for i in order[:32]:
            active.append(pairs[i])
            in_active.add(pairs[i])
        sol = solve_lp(build(active))
    return sol


def _vulnerable(r_levels: tuple[float, ...], classes: ConstraintClasses) -> bool:
    """True when some minimum-rate set reaches the divergence bound."""
    lo = min(r_levels)
    return any(
        r <= lo + 1e-9 and classes.labels[i] != "H"
        for i, r in enumerate(r_levels)
    )


def _witness(r_events: RejectionFunction, spec: GameSpec):
    from .adversary_oracle import best_response  # deferred: oracle imports us

    return best_response(r_events, spec)


def solve_soft(spec: GameSpec) -> SolveOutcome:
    """Optimal randomized strategy under a type I budget of ``spec.delta``.

    Maximizes the guaranteed rejection rate z against every adversary
    distribution that meets the divergence bound.  Degenerate regimes come
    back as statuses rather than errors: ``constraint_vacuous`` returns the
    constant-delta strategy with z = delta (nothing better is guaranteed),
    ``adversary_infeasible`` returns the same strategy with no game value.
    A vulnerable optimum must equal the constant-delta strategy; that is
    verified and any discrepancy raised as :class:`InternalInconsistency`.
    """
    p, delta = spec.p, spec.delta
    part, classes, roots = _set_pair_roots(p, spec.divergence, spec.lam)
    flat = (delta,) * part.K
    r_flat = uniform_soft_rejector(p, delta)

    if classes.infeasible:
        return SolveOutcome(
            status="adversary_infeasible", r_levels=flat, r_events=r_flat,
            z=None, type2=None, witness_q=None, vulnerable=False,
            partition=part, classes=classes,
        )
    if classes.vacuous:
        members = part.sets[-1].members
        witness = tuple(
            1.0 if j == members[0] else 0.0 for j in range(p.n)
        )
        return SolveOutcome(
            status="constraint_vacuous", r_levels=flat, r_events=r_flat,
            z=delta, type2=1.0 - delta, witness_q=witness, vulnerable=True,
            partition=part, classes=classes,
        )

    sol = _solve_game_lp(part, classes, roots, dual=False, budget=delta)
    if sol.status != "optimal":
        raise InternalInconsistency(
            f"level-set LP came back {sol.status}; it always has the "
            f"constant-delta strategy as a feasible point"
        )
    r_levels = _clean_levels(np.asarray(sol.x[:part.K]))
    z = float(sol.x[part.K])
    vulnerable = _vulnerable(r_levels, classes)
    if vulnerable and max(abs(r - delta) for r in r_levels) > 1e-8:
        raise InternalInconsistency(
            "vulnerable optimum differs from the constant-delta strategy"
        )
    r_events = _embed_rates(p, part.expand(r_levels))
    witness = _witness(r_events, spec)
    return SolveOutcome(
        status="solved", r_levels=r_levels, r_events=r_events,
        z=z, type2=1.0 - z, witness_q=witness.q, vulnerable=vulnerable,
        partition=part, classes=classes,
    )


def solve_hard_ldrs(spec: GameSpec) -> HardOutcome:
    """Deterministic strategy: reject the largest low-probability prefix.

    Events are taken in ascending (probability, index) order while the
    rejected mass stays within ``spec.delta``; the first event that does not
    fit ends the scan, since everything after it is at least as heavy.  The
    achieved worst-case value is evaluated by the best-response oracle
    event-wise, because the prefix may split a level set.
    """
    p, delta = spec.p, spec.delta
    part, classes, _ = _set_pair_roots(p, spec.divergence, spec.lam)
    rates = [0.0] * p.n
    cum = 0.0
    for j in p.order:
        if cum + p.probs[j] > delta + 1e-12:
            break
        rates[j] = 1.0
        cum += p.probs[j]
    rejected = math.fsum(p.probs[j] for j in range(p.n) if rates[j] == 1.0)
    r_events = _embed_rates(p, tuple(rates), kind="hard")
    if classes.infeasible:
        return HardOutcome(
            status="adversary_infeasible", r_events=r_events,
            rejected_mass=rejected, value=None, witness_q=None,
            partition=part, classes=classes,
        )
    witness = _witness(r_events, spec)
    status = "constraint_vacuous" if classes.vacuous else "solved"
    return HardOutcome(
        status=status, r_events=r_events, rejected_mass=rejected,
        value=witness.value, witness_q=witness.q,
        partition=part, classes=classes,
    )


def solve_dual(p: Pmf, lam: float, kind: DivergenceKind,
               delta_q: float) -> DualOutcome:
    """Minimize type I spend subject to a type II cap of ``delta_q``.

    Every adversary response must reject with rate at least 1 - delta_q;
    the objective z_I is the type I error actually paid.  A vacuous
    constraint admits the closed form r = 1 - delta_q everywhere with
    z_I = 1 - delta_q; with an infeasible adversary nothing needs rejecting
    and the zero strategy is returned.  A vulnerable optimum must equal the
    constant (1 - delta_q) strategy, mirroring the primal.
    """
    if not (0.0 < delta_q < 1.0):
        raise ValueError(f"delta_q must lie in (0, 1), got {delta_q!r}")
    part, classes, roots = _set_pair_roots(p, kind, lam)
    K = part.K
    if classes.infeasible:
        zero = (0.0,) * K
        return DualOutcome(
            status="adversary_infeasible", r_levels=zero,
            r_events=_embed_rates(p, part.expand(zero)), z_i=0.0,
            witness_q=None, vulnerable=False, partition=part, classes=classes,
        )
    floor = 1.0 - delta_q
    if classes.vacuous:
        levels = (floor,) * K
        members = part.sets[-1].members
        witness = tuple(
            1.0 if j == members[0] else 0.0 for j in range(p.n)
        )
        return DualOutcome(
            status="constraint_vacuous", r_levels=levels,
            r_events=_embed_rates(p, part.expand(levels)), z_i=floor,
            witness_q=witness, vulnerable=True, partition=part, classes=classes,
        )
    sol = _solve_game_lp(part, classes, roots, dual=True, budget=floor)
    if sol.status != "optimal":
        raise InternalInconsistency(
            f"dual level-set LP came back {sol.status}; the all-ones "
            f"strategy is always feasible"
        )
    r_levels = _clean_levels(np.asarray(sol.x[:K]))
    z_i = float(sol.x[K])
    vulnerable = _vulnerable(r_levels, classes)
    if vulnerable and max(abs(r - floor) for r in r_levels) > 1e-8:
        raise InternalInconsistency(
            "vulnerable dual optimum differs from the constant floor strategy"
        )
    r_events = _embed_rates(p, part.expand(r_levels))
    spec = GameSpec(p=p, delta=min(max(z_i, 1e-12), 1.0 - 1e-12),
                    lam=lam, divergence=kind)
    witness = _witness(r_events, spec)
    return DualOutcome(
        status="solved", r_levels=r_levels, r_events=r_events, z_i=z_i,
        witness_q=witness.q, vulnerable=vulnerable,
        partition=part, classes=classes,
    )
