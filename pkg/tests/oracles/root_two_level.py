"""Independent derivation of the mixing weight for the two-level fixture.

Target (0.2, 0.8), base-2 KL, bound 1.0.  The curve
g(q) = q*log2(q/0.2) + (1-q)*log2((1-q)/0.8) runs from g(0) ~ 0.32 up to
g(1) ~ 2.32, so it crosses 1.0 exactly once.  A coarse grid scan brackets
the crossing without assuming monotonicity, then bisection narrows it.
Run directly; the printed value is frozen into the test suite.
"""

import math


def g(q: float) -> float:
    total = 0.0
    if q > 0.0:
        total += q * math.log2(q / 0.2)
    if q < 1.0:
        total += (1.0 - q) * math.log2((1.0 - q) / 0.8)
    return total


def main() -> None:
    lam = 1.0
    steps = 10 ** 6
    brackets = []
    prev = g(0.0) - lam
    for i in range(1, steps + 1):
        cur = g(i / steps) - lam
        if prev <= 0.0 < cur or prev < 0.0 <= cur:
            brackets.append(((i - 1) / steps, i / steps))
        prev = cur
    print("sign changes:", len(brackets))
    assert len(brackets) == 1, brackets
    lo, hi = brackets[0]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) - lam > 0.0:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-16:
            break
    root = 0.5 * (lo + hi)
    print("root  %.17g" % root)
    print("g(root) - lam = %.3g" % (g(root) - lam))


if __name__ == "__main__":
    main()
