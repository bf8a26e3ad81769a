"""Plain-loop lattice search used to pin the brute-force oracle itself.

Fixed instance: target (0.1, 0.3, 0.6), base-2 KL, bound 1.0, rates
(0.5, 0.2, 0.1), resolution 300.  The bound rules out piling everything
onto the largest event, so the minimizer has to mix.  Walks every
composition of 300 into
three parts with two nested loops, evaluates divergence and rejection
rate with math.fsum, keeps the first strict minimizer in lexicographic
order.  No third-party code.  Run directly; counts and value are frozen
into the oracle tests.
"""

import math

P = (0.1, 0.3, 0.6)
RATES = (0.5, 0.2, 0.1)
LAM = 1.0
RES = 300


def kl2(q: float, p: float) -> float:
    return 0.0 if q == 0.0 else q * math.log2(q / p)


def main() -> None:
    best = None
    for c0 in range(RES + 1):
        for c1 in range(RES + 1 - c0):
            c2 = RES - c0 - c1
            q = (c0 / RES, c1 / RES, c2 / RES)
            d = math.fsum(kl2(qi, pi) for qi, pi in zip(q, P))
            if d < LAM - 1e-12:
                continue
            rho = math.fsum(ri * qi for ri, qi in zip(RATES, q))
            if best is None or rho < best[0]:
                best = (rho, (c0, c1, c2))
    rho, counts = best
    print("counts:", counts)
    print("value  %.17g" % rho)


if __name__ == "__main__":
    main()
