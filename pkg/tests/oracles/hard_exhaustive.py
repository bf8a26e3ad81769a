"""Exhaustive confirmation for the five-event deterministic fixture.

Enumerates all 32 binary rejection vectors over (0.02, 0.03, 0.05, 0.05,
0.85), keeps those that are monotone (rarer events rejected no less than
likelier ones; equal probabilities unconstrained) and spend at most the
0.1 budget, and reports every maximizer of rejected mass.  Run directly;
the frozen facts: best mass, number of maximizers, lowest-index winner.
"""

import itertools
import math

P = (0.02, 0.03, 0.05, 0.05, 0.85)
DELTA = 0.1


def monotone(r) -> bool:
    for i in range(len(P)):
        for j in range(len(P)):
            if P[i] < P[j] and r[i] < r[j]:
                return False
    return True


def main() -> None:
    best_mass = -1.0
    winners = []
    for r in itertools.product((0, 1), repeat=len(P)):
        mass = math.fsum(ri * pi for ri, pi in zip(r, P))
        if mass > DELTA + 1e-12 or not monotone(r):
            continue
        if mass > best_mass + 1e-15:
            best_mass = mass
            winners = [r]
        elif abs(mass - best_mass) <= 1e-15:
            winners.append(r)
    print("best mass %.17g (== 0.1: %s)" % (best_mass, best_mass == 0.1))
    print("maximizers:", winners)
    rejected_sets = [tuple(i for i, ri in enumerate(r) if ri) for r in winners]
    chosen = min(rejected_sets)  # take lowest-indexed events first
    print("tie rule picks rejected set:", chosen)
    print("as rates:", tuple(1 if i in chosen else 0 for i in range(len(P))))


if __name__ == "__main__":
    main()
