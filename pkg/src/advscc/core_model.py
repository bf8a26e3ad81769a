"""Probability and strategy primitives shared by every solver in the package.

Conventions used throughout:

* A target distribution ``P`` over ``N`` discrete events is represented by a
  :class:`Pmf`.  Events whose probability is exactly zero are removed at
  construction time and their original positions recorded, so that rejection
  strategies can still emit a rate of 1 for them.  All surviving entries are
  strictly positive and sum to one.
* A strategy is a :class:`RejectionFunction`: one rejection probability per
  event.  ``kind="hard"`` restricts every rate to {0, 1}.
* The expected rejection rate of a strategy ``r`` under a distribution ``D``
  is ``rho(r, D) = sum_i d_i * r(i)``, computed by :func:`rejection_rate`.
* A constrained game instance is a :class:`GameSpec`: the target ``P``, the
  type I budget ``delta``, the divergence bound ``lam`` and the divergence
  kind used to measure the adversary's distance from ``P``.

All values are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

if TYPE_CHECKING:
    from .divergence import DivergenceKind

__all__ = [
    "ModelError",
    "NegativeMass",
    "SumNotOne",
    "Empty",
    "DimensionMismatch",
    "Pmf",
    "RejectionFunction",
    "GameSpec",
    "make_pmf",
    "rejection_rate",
    "uniform_soft_rejector",
]

#: Largest tolerated deviation of the input masses from a total of one.
SUM_TOLERANCE = 1e-9


class ModelError(ValueError):
    """Base class for invalid model inputs."""


class NegativeMass(ModelError):
    """A probability entry was negative."""


class SumNotOne(ModelError):
    """Probabilities do not sum to one within ``SUM_TOLERANCE``."""


class Empty(ModelError):
    """No events were supplied."""


class DimensionMismatch(ModelError):
    """Two per-event vectors have different lengths."""


@dataclass(frozen=True)
class Pmf:
    """A finite probability mass function with strictly positive entries.

    ``probs`` holds the surviving (positive) masses in their original order.
    ``stripped`` records the original indices of removed zero-mass events.
    ``order`` lists surviving-event indices sorted by ascending probability,
    ties broken by lowest index; it is the canonical traversal order for
    low-density-first constructions.
    """

    probs: tuple[float, ...]
    stripped: tuple[int, ...]
    order: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.probs)

    @property
    def original_n(self) -> int:
        return len(self.probs) + len(self.stripped)

    def min(self) -> float:
        return min(self.probs)

    def max(self) -> float:
        return max(self.probs)

    def embedded(self) -> tuple[float, ...]:
        """Masses re-expanded to the original index space (zeros restored)."""
        if not self.stripped:
            return self.probs
        out = [0.0] * self.original_n
        survivors = (i for i in range(self.original_n) if i not in set(self.stripped))
        for i, p in zip(survivors, self.probs):
            out[i] = p
        return tuple(out)


@dataclass(frozen=True)
class RejectionFunction:
    """Per-event rejection probabilities.

    ``kind`` is ``"soft"`` (rates anywhere in [0, 1]) or ``"hard"`` (rates in
    {0, 1}).  Construction validates the range; a hard function additionally
    requires every rate to be exactly 0 or 1.
    """

    rates: tuple[float, ...]
    kind: str = "soft"

    def __post_init__(self):
        if self.kind not in ("soft", "hard"):
            raise ModelError(f"unknown rejection kind {self.kind!r}")
        for i, r in enumerate(self.rates):
            if not (0.0 <= r <= 1.0):
                raise ModelError(f"rate {r!r} at event {i} outside [0, 1]")
            if self.kind == "hard" and r not in (0.0, 1.0):
                raise ModelError(f"hard rate {r!r} at event {i} not in {{0, 1}}")

    @property
    def n(self) -> int:
        return len(self.rates)

    def min_rate(self) -> float:
        return min(self.rates)

    def min_events(self, tol: float = 1e-9) -> tuple[int, ...]:
        """Indices of events whose rate is minimal within ``tol``."""
        lo = self.min_rate()
        return tuple(i for i, r in enumerate(self.rates) if r <= lo + tol)


@dataclass(frozen=True)
class GameSpec:
    """One constrained-game instance: target, budget, divergence bound."""

    p: Pmf
    delta: float
    lam: float
    divergence: "DivergenceKind"

    def __post_init__(self):
        if not (0.0 < self.delta < 1.0):
            raise ModelError(f"delta must lie in (0, 1), got {self.delta!r}")
        if not (self.lam >= 0.0):
            raise ModelError(f"lam must be non-negative, got {self.lam!r}")


def make_pmf(values: Sequence[float]) -> Pmf:
    """Validate ``values`` and build a :class:`Pmf`.

    Zero entries are stripped and their indices recorded.  The remaining
    masses must sum to one within ``SUM_TOLERANCE``; they are then
    renormalized so the stored values sum to 1.0 exactly (extended-precision
    total via ``math.fsum``, residual folded into the largest entry).

    Raises :class:`Empty` for an empty input, :class:`NegativeMass` for any
    negative entry, :class:`SumNotOne` when the total is off by more than the
    tolerance.
    """
    vals = [float(v) for v in values]
    if not vals:
        raise Empty("a pmf needs at least one event")
    for i, v in enumerate(vals):
        if v < 0.0:
            raise NegativeMass(f"negative mass {v!r} at event {i}")
        if not math.isfinite(v):
            raise ModelError(f"non-finite mass {v!r} at event {i}")
    stripped = tuple(i for i, v in enumerate(vals) if v == 0.0)
    kept = [v for v in vals if v > 0.0]
    total = math.fsum(kept)
    if abs(total - 1.0) > SUM_TOLERANCE:
        raise SumNotOne(f"masses sum to {total!r}, expected 1 within {SUM_TOLERANCE}")
    probs = [v / total for v in kept]
    # fold the rounding residual into the largest entry until
    # fsum(probs) == 1.0 holds exactly; the subtraction itself rounds, so
    # a single fold is not always enough
    for _ in range(4):
        residual = math.fsum(probs) - 1.0
        if residual == 0.0:
            break
        top = max(range(len(probs)), key=probs.__getitem__)
        probs[top] -= residual
    order = tuple(sorted(range(len(probs)), key=lambda i: (probs[i], i)))
    return Pmf(probs=tuple(probs), stripped=stripped, order=order)


def _as_rates(r) -> tuple[float, ...]:
    if isinstance(r, RejectionFunction):
        return r.rates
    return tuple(float(v) for v in r)


def _as_masses(d, want_len: int) -> tuple[float, ...]:
    if isinstance(d, Pmf):
        if want_len == d.n:
            return d.probs
        if want_len == d.original_n:
            return d.embedded()
        raise DimensionMismatch(
            f"rejection function has {want_len} events, pmf has {d.n}"
        )
    masses = tuple(float(v) for v in d)
    if len(masses) != want_len:
        raise DimensionMismatch(
            f"rejection function has {want_len} events, distribution has {len(masses)}"
        )
    return masses


def rejection_rate(r, d) -> float:
    """Expected rejection rate ``rho(r, d) = sum_i d_i * r(i)``.

    ``r`` may be a :class:`RejectionFunction` or a plain rate sequence; ``d``
    may be a :class:`Pmf` or any per-event mass sequence of matching length
    (an adversary distribution may contain zeros, so it need not be a Pmf).
    When ``r`` is constant on the support of ``d`` the result short-circuits
    to ``rate * sum(d)``, so the uniform rejector's rate is reproduced
    without round-off.
    """
    rates = _as_rates(r)
    masses = _as_masses(d, len(rates))
    support_rates = {ri for ri, di in zip(rates, masses) if di != 0.0}
    if len(support_rates) == 1:
        return support_rates.pop() * math.fsum(masses)
    return math.fsum(ri * di for ri, di in zip(rates, masses))


def uniform_soft_rejector(p: Pmf, delta: float) -> RejectionFunction:
    """The constant-``delta`` randomized rejector.

    Every surviving event is rejected with probability ``delta``; stripped
    null events are rejected outright (rate 1).  Its rejection rate under any
    distribution supported on the surviving events is exactly ``delta``,
    which is the best guaranteed value against an unconstrained adversary.
    """
    if not (0.0 < delta < 1.0):
        raise ModelError(f"delta must lie in (0, 1), got {delta!r}")
    if not p.stripped:
        return RejectionFunction(rates=(delta,) * p.n, kind="soft")
    rates = [delta] * p.original_n
    for i in p.stripped:
        rates[i] = 1.0
    return RejectionFunction(rates=tuple(rates), kind="soft")
