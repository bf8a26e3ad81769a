"""Adversary best responses: structured, brute-force, and property probes.

The structured responder enumerates the only candidates an optimal
divergence-constrained adversary ever needs: point masses on events at or
above the bound, and two-point mixtures pairing an above-bound event with a
below-bound one at the exact crossing weight.  The brute-force responder
ignores all of that structure and scans a full lattice discretization of the
simplex; it exists to check the structured one and is deliberately capped at
five events.  Transfer probes sample random feasible adversaries and verify
the mass-moving inequalities the whole theory rests on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_model import DimensionMismatch, GameSpec, Pmf, RejectionFunction
from .discrete_game import _set_pair_roots
from .divergence import evaluate
from . import kernels

__all__ = [
    "OracleError",
    "AdversaryInfeasible",
    "TooLarge",
    "NoFeasiblePoint",
    "BestResponse",
    "TransferReport",
    "best_response",
    "unrestricted_best_response",
    "brute_force_best_response",
    "property_abc_transfer_check",
]

#: Hard cap on brute-force dimensionality.
BRUTE_MAX_EVENTS = 5
#: Total rejection-sampling attempts allowed per probe run.
SAMPLE_ATTEMPT_CAP = 100_000


class OracleError(ValueError):
    """Base class for oracle failures."""


class AdversaryInfeasible(OracleError):
    """No distribution reaches the divergence bound."""


class TooLarge(OracleError):
    """Brute force refused: too many events."""


class NoFeasiblePoint(OracleError):
    """No lattice point reaches the divergence bound; refine the resolution."""


@dataclass(frozen=True)
class BestResponse:
    """An adversary distribution and the rejection rate it induces.

    ``q`` is dense over the pmf's surviving events; in structured and
    unrestricted modes it has at most two nonzero entries.
    """

    q: tuple[float, ...]
    value: float
    mode: str  # structured | brute | unrestricted

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, v in enumerate(self.q) if v != 0.0)


@dataclass(frozen=True)
class TransferReport:
    """Pass/fail tallies from the random transfer probes."""

    trials: int
    sampled: int
    a_checked: int
    a_passed: int
    b_checked: int
    b_passed: int
    c_checked: int
    c_passed: int
    failures: tuple[str, ...]

    @property
    def all_passed(self) -> bool:
        return (self.a_passed == self.a_checked
                and self.b_passed == self.b_checked
                and self.c_passed == self.c_checked)


def _surviving_rates(r: RejectionFunction, p: Pmf) -> tuple[float, ...]:
    if r.n == p.n:
        return r.rates
    if r.n == p.original_n:
        stripped = set(p.stripped)
        return tuple(v for i, v in enumerate(r.rates) if i not in stripped)
    raise DimensionMismatch(
        f"rejection function has {r.n} events, pmf has {p.n} (or "
        f"{p.original_n} before stripping)"
    )


def _point_mass(n: int, j: int) -> tuple[float, ...]:
    return tuple(1.0 if i == j else 0.0 for i in range(n))


def best_response(r: RejectionFunction, spec: GameSpec) -> BestResponse:
    """Minimize rho(r, Q) over distributions meeting the divergence bound.

    Candidates are evaluated in a fixed order (singletons by set index, then
    straddling set pairs lexicographically) and the first strict improvement
    wins, so the returned witness is deterministic.  Within a set, the
    representative event is the lowest-index member of minimum rate; two-
    point candidates use the per-set minimum rates, which is exact because
    the crossing weight only depends on the sets' probabilities.
    """
    p = spec.p
    rates = _surviving_rates(r, p)
    part, classes, roots = _set_pair_roots(p, spec.divergence, spec.lam)
    if classes.infeasible:
        raise AdversaryInfeasible(
            f"no distribution has divergence >= {spec.lam!r}"
        )
    set_arg = [min(s.members, key=lambda i: (rates[i], i)) for s in part.sets]
    set_min = [rates[j] for j in set_arg]

    best_value = math.inf
    best_q: tuple[float, ...] | None = None
    for i, label in enumerate(classes.labels):
        if label == "H":
            continue
        if set_min[i] < best_value:
            best_value = set_min[i]
            best_q = _point_mass(p.n, set_arg[i])
    for (l, h) in sorted(roots):
        q = roots[(l, h)]
        value = q * set_min[l] + (1.0 - q) * set_min[h]
        if value < best_value:
            best_value = value
            vec = [0.0] * p.n
            vec[set_arg[l]] = q
            vec[set_arg[h]] = 1.0 - q
            best_q = tuple(vec)
    return BestResponse(q=best_q, value=best_value, mode="structured")


def unrestricted_best_response(r: RejectionFunction, p: Pmf) -> BestResponse:
    """Best response with no divergence constraint: mass on the min rate."""
    rates = _surviving_rates(r, p)
    j = min(range(p.n), key=lambda i: (rates[i], i))
    return BestResponse(q=_point_mass(p.n, j), value=rates[j],
                        mode="unrestricted")


def _lattice_tables(rates, p: Pmf, kind, resolution: int):
    grid = np.arange(resolution + 1) / resolution
    T = np.empty((p.n, resolution + 1))
    R = np.empty((p.n, resolution + 1))
    for i in range(p.n):
        T[i] = kind.term_array(grid, np.full(resolution + 1, p.probs[i]))
        R[i] = rates[i] * grid
    return T, R


def _suffix_tables(T: np.ndarray, R: np.ndarray, resolution: int):
    # sufD[k, b]: max of sum_{i >= k} T[i, c_i] over compositions of b;
    # sufR is the min analogue.  Exact max-plus / min-plus recurrences.
    n = T.shape[0]
    sufD = np.empty_like(T)
    sufR = np.empty_like(R)
    sufD[n - 1] = T[n - 1]
    sufR[n - 1] = R[n - 1]
    for k in range(n - 2, -1, -1):
        for b in range(resolution + 1):
            sufD[k, b] = np.max(T[k, : b + 1] + sufD[k + 1, b::-1])
            sufR[k, b] = np.min(R[k, : b + 1] + sufR[k + 1, b::-1])
    return sufD, sufR


def brute_force_best_response(r: RejectionFunction, spec: GameSpec,
                              resolution: int) -> BestResponse:
    """Exhaustive minimum of rho(r, Q) over the lattice Q = counts/resolution.

    Every composition of ``resolution`` into one count per event is
    considered; those whose divergence reaches the bound compete on their
    induced rejection rate.  The winner is within Lipschitz(rho) * N /
    resolution of the continuous optimum.  Structure-free by design: shares
    no candidate logic with :func:`best_response`.
    """
    p = spec.p
    if p.n > BRUTE_MAX_EVENTS:
        raise TooLarge(f"{p.n} events exceeds the brute-force cap "
                       f"of {BRUTE_MAX_EVENTS}")
    if resolution < 100:
        raise ValueError(f"resolution must be at least 100, got {resolution}")
    rates = _surviving_rates(r, p)
    T, R = _lattice_tables(rates, p, spec.divergence, resolution)
    sufD, sufR = _suffix_tables(T, R, resolution)
    lam_floor = spec.lam - 1e-12
    _, counts = kernels.lattice_min_rho(T, R, resolution, lam_floor,
                                        sufD, sufR)
    if counts is None:
        raise NoFeasiblePoint(
            f"no lattice point at resolution {resolution} reaches "
            f"divergence {spec.lam!r}"
        )
    q = tuple(c / resolution for c in counts)
    value = math.fsum(rates[i] * q[i] for i in range(p.n))
    return BestResponse(q=q, value=value, mode="brute")


def _sample_feasible(p: Pmf, kind, lam: float, rng: np.random.Generator,
                     attempts_left: list[int]) -> tuple[float, ...] | None:
    while attempts_left[0] > 0:
        attempts_left[0] -= 1
        q = rng.dirichlet(np.ones(p.n))
        q = q / q.sum()
        vec = tuple(float(v) for v in q)
        if evaluate(kind, vec, p) >= lam:
            return vec
    return None


def property_abc_transfer_check(p: Pmf, spec: GameSpec, trials: int,
                                seed: int | None = None) -> TransferReport:
    """Probe the mass-transfer inequalities on random feasible adversaries.

    Per trial: draw Q uniformly from the simplex until it meets the bound
    (attempts capped globally), pick a random event pair ordered so the
    first has the smaller target mass, and verify

    * transfer: moving all mass from the likelier event onto the rarer one
      keeps the divergence at or above the bound (within 1e-10), with the
      post-transfer masses and mass/target ratios ordered as required;
    * swap: for equal target masses, exchanging the two adversary masses
      leaves the divergence unchanged within 1e-10.

    Failures are reported, never raised.
    """
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    kind, lam = spec.divergence, spec.lam
    rng = np.random.default_rng(seed)
    attempts = [SAMPLE_ATTEMPT_CAP]
    sampled = 0
    a_checked = a_passed = b_checked = b_passed = 0
    c_checked = c_passed = 0
    failures: list[str] = []

    def fail(msg: str) -> None:
        if len(failures) < 20:
            failures.append(msg)

    for _ in range(trials):
        if p.n < 2:
            break
        q = _sample_feasible(p, kind, lam, rng, attempts)
        if q is None:
            break
        sampled += 1
        j, k = (int(v) for v in rng.choice(p.n, size=2, replace=False))
        if (p.probs[k], k) < (p.probs[j], j):
            j, k = k, j
        d_q = evaluate(kind, q, p)

        if abs(p.probs[j] - p.probs[k]) <= 1e-12:
            # swap probe: equal target masses
            c_checked += 1
            swapped = list(q)
            swapped[j], swapped[k] = swapped[k], swapped[j]
            d_sw = evaluate(kind, swapped, p)
            if abs(d_sw - d_q) <= 1e-10:
                c_passed += 1
            else:
                fail(f"swap changed divergence by {d_sw - d_q!r} "
                     f"on pair ({j}, {k})")
            continue

        moved = list(q)
        moved[j] = moved[j] + moved[k]
        moved[k] = 0.0
        d_m = evaluate(kind, moved, p)
        feasible = d_m >= lam - 1e-10

        if q[j] < q[k]:
            a_checked += 1
            ordered = (q[j] + moved[j]) >= (q[k] + moved[k])
            if feasible and ordered:
                a_passed += 1
            else:
                fail(f"post-transfer mass order/feasibility failed on "
                     f"({j}, {k}): D={d_m!r} vs bound {lam!r}")
        if q[j] / p.probs[j] < q[k] / p.probs[k]:
            b_checked += 1
            ordered = (moved[j] / p.probs[j]) >= (moved[k] / p.probs[k])
            if feasible and ordered:
                b_passed += 1
            else:
                fail(f"post-transfer ratio order/feasibility failed on "
                     f"({j}, {k}): D={d_m!r} vs bound {lam!r}")

    return TransferReport(
        trials=trials, sampled=sampled,
        a_checked=a_checked, a_passed=a_passed,
        b_checked=b_checked, b_passed=b_passed,
        c_checked=c_checked, c_passed=c_passed,
        failures=tuple(failures),
    )
