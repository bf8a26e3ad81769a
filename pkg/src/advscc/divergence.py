"""Separable divergences measuring how far an adversary strays from the target.

Every divergence here has the form ``D_p(q) = sum_i d_i(q_i)`` where the
per-coordinate term ``d_i`` depends on the target mass ``p_i``:

* ``kl2``      : d_i(q) = q * log2(q / p_i), with d_i(0) = 0
* ``sqeuclid`` : d_i(q) = (q - p_i)^2
* ``bregman:<name>`` : d_i(q) = f(q) - f(p_i) - f'(p_i) (q - p_i) for a named
  strictly convex scalar generator ``f``

Separability is what makes these divergences 2-symmetric and receding: moving
probability mass from a likelier event onto a rarer one never decreases the
divergence, and swapping mass between equiprobable events leaves it unchanged.
Those two facts are the load-bearing assumptions of the discrete solvers, and
:func:`check_transfer_feasibility` exposes the mass-transfer construction the
tests use to probe them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core_model import DimensionMismatch, ModelError, Pmf

__all__ = [
    "DivergenceError",
    "OffSimplex",
    "IndexOutOfRange",
    "UnknownDivergence",
    "DivergenceKind",
    "TransferSpec",
    "evaluate",
    "point_mass_divergence",
    "check_transfer_feasibility",
]


class DivergenceError(ValueError):
    """Base class for divergence evaluation failures."""


class OffSimplex(DivergenceError):
    """Candidate distribution has a negative entry or does not sum to one."""


class IndexOutOfRange(DivergenceError):
    """Event index outside the pmf support."""


class UnknownDivergence(DivergenceError):
    """Unrecognized divergence name."""


def _f_square(x: float) -> float:
    return x * x


def _fp_square(x: float) -> float:
    return 2.0 * x


def _f_xlog2x(x: float) -> float:
    return x * math.log2(x) if x > 0.0 else 0.0


def _fp_xlog2x(x: float) -> float:
    # derivative of x*log2(x); only ever evaluated at positive target masses
    return math.log2(x) + 1.0 / math.log(2.0)


def _f_exp(x: float) -> float:
    return math.exp(x)


def _fp_exp(x: float) -> float:
    return math.exp(x)


#: Named generators accepted by "bregman:<name>"; each entry is (f, f').
BREGMAN_GENERATORS: dict[str, tuple[Callable[[float], float], Callable[[float], float]]] = {
    "square": (_f_square, _fp_square),
    "xlog2x": (_f_xlog2x, _fp_xlog2x),
    "exp": (_f_exp, _fp_exp),
}


def _check_strictly_convex(name: str, f: Callable[[float], float]) -> None:
    """Second differences of f must be positive on a 1e-3 grid over [0, 1]."""
    h = 1e-3
    xs = [i * h for i in range(int(round(1.0 / h)) + 1)]
    vals = [f(x) for x in xs]
    for i in range(1, len(vals) - 1):
        if vals[i - 1] - 2.0 * vals[i] + vals[i + 1] <= 0.0:
            raise DivergenceError(
                f"bregman generator {name!r} is not strictly convex near x={xs[i]:.3f}"
            )


@dataclass(frozen=True)
class DivergenceKind:
    """One divergence family, identified by its config name.

    Instances compare and hash by ``name`` so they can key caches.  Use
    :meth:`parse` to build one from the config strings ``"kl2"``,
    ``"sqeuclid"`` or ``"bregman:<generator>"``.
    """

    name: str
    _f: Callable[[float], float] | None = field(default=None, compare=False)
    _fp: Callable[[float], float] | None = field(default=None, compare=False)

    @classmethod
    def parse(cls, name: str) -> "DivergenceKind":
        if name in ("kl2", "sqeuclid"):
            return cls(name=name)
        if name.startswith("bregman:"):
            gen = name.split(":", 1)[1]
            if gen not in BREGMAN_GENERATORS:
                raise UnknownDivergence(
                    f"unknown bregman generator {gen!r}; known: {sorted(BREGMAN_GENERATORS)}"
                )
            f, fp = BREGMAN_GENERATORS[gen]
            _check_strictly_convex(gen, f)
            return cls(name=name, _f=f, _fp=fp)
        raise UnknownDivergence(f"unknown divergence {name!r}")

    def term(self, q: float, p: float) -> float:
        """Per-coordinate contribution d_i(q) for target mass p > 0."""
        if self.name == "kl2":
            return q * math.log2(q / p) if q > 0.0 else 0.0
        if self.name == "sqeuclid":
            d = q - p
            return d * d
        f, fp = self._f, self._fp
        return f(q) - f(p) - fp(p) * (q - p)

    def term_array(self, q: np.ndarray, p: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`term`; q and p broadcast together."""
        q = np.asarray(q, dtype=float)
        p = np.asarray(p, dtype=float)
        if self.name == "kl2":
            safe = np.where(q > 0.0, q, 1.0)
            return np.where(q > 0.0, q * np.log2(safe / p), 0.0)
        if self.name == "sqeuclid":
            return (q - p) ** 2
        f = np.vectorize(self._f, otypes=[float])
        fp = np.vectorize(self._fp, otypes=[float])
        return f(q) - f(p) - fp(p) * (q - p)


@dataclass(frozen=True)
class TransferSpec:
    """Move all mass of ``from_event`` onto ``to_event``."""

    from_event: int
    to_event: int

    def __post_init__(self):
        if self.from_event == self.to_event:
            raise ModelError("transfer endpoints must differ")


def _validate_simplex(q: Sequence[float], n: int) -> tuple[float, ...]:
    vec = tuple(float(v) for v in q)
    if len(vec) != n:
        raise DimensionMismatch(f"distribution has {len(vec)} entries, pmf has {n}")
    for i, v in enumerate(vec):
        if not math.isfinite(v) or v < 0.0:
            raise OffSimplex(f"entry {v!r} at index {i} is not a probability")
    total = math.fsum(vec)
    if abs(total - 1.0) > 1e-9:
        raise OffSimplex(f"entries sum to {total!r}, expected 1 within 1e-9")
    return vec


def evaluate(kind: DivergenceKind, q: Sequence[float], p: Pmf) -> float:
    """D_p(q) = sum_i d_i(q_i); raises OffSimplex / DimensionMismatch."""
    vec = _validate_simplex(q, p.n)
    total = math.fsum(kind.term(qi, pi) for qi, pi in zip(vec, p.probs))
    # mathematically >= 0; negatives can only be accumulated round-off
    return total if total > 0.0 else 0.0


def point_mass_divergence(kind: DivergenceKind, j: int, p: Pmf) -> float:
    """Divergence of the distribution fully concentrated on event ``j``.

    Closed forms are used where available: for kl2 this is -log2(p_j), for
    sqeuclid it is (1 - p_j)^2 + sum_{i != j} p_i^2.  The value is
    non-increasing in p_j, which is what orders the level sets.
    """
    if not (0 <= j < p.n):
        raise IndexOutOfRange(f"event {j} outside [0, {p.n})")
    if kind.name == "kl2":
        return -math.log2(p.probs[j])
    if kind.name == "sqeuclid":
        terms = [(pi * pi) for pi in p.probs]
        terms[j] = (1.0 - p.probs[j]) ** 2
        return math.fsum(terms)
    total = math.fsum(
        kind.term(1.0 if i == j else 0.0, pi) for i, pi in enumerate(p.probs)
    )
    return total if total > 0.0 else 0.0


def check_transfer_feasibility(
    kind: DivergenceKind,
    p: Pmf,
    q: Sequence[float],
    transfer: TransferSpec,
) -> tuple[tuple[float, ...], float]:
    """Apply the transfer to ``q`` and evaluate the result.

    Returns ``(q', D_p(q'))`` where q' carries all of q[from_event] on
    to_event and zero on from_event.  When the target mass of to_event is no
    larger than that of from_event, the receding property guarantees the
    returned value is at least D_p(q) up to round-off; callers relying on
    that should check masses first.
    """
    a, b = transfer.to_event, transfer.from_event
    if not (0 <= a < p.n) or not (0 <= b < p.n):
        raise IndexOutOfRange(f"transfer ({b} -> {a}) outside [0, {p.n})")
    vec = list(_validate_simplex(q, p.n))
    vec[a] = vec[a] + vec[b]
    vec[b] = 0.0
    moved = tuple(vec)
    return moved, evaluate(kind, moved, p)
