"""Hand evaluation of the randomized order-statistic index rule.

For sample size n and level mu the estimator draws order statistic
k+1 (1-based) with probability beta and k otherwise, where
k = floor((n+1)*mu) and beta = (n+1)*mu - k; when n is below
max(mu/(1-mu), (1-mu)/mu) it falls back to the fixed index
ceil(n*mu).  Run directly; the three printed cases are frozen into the
estimator tests.
"""

import math


def describe(n: int, mu: float) -> str:
    if n < max(mu / (1.0 - mu), (1.0 - mu) / mu):
        return f"n={n} mu={mu}: fall back, fixed index {math.ceil(n * mu)}"
    k = math.floor((n + 1) * mu)
    beta = (n + 1) * mu - k
    if beta == 0.0:
        return f"n={n} mu={mu}: always index {k}"
    return f"n={n} mu={mu}: index {k + 1} w.p. {beta}, else {k}"


def main() -> None:
    print(describe(9, 0.5))
    print(describe(9, 0.25))
    print(describe(3, 0.9))


if __name__ == "__main__":
    main()
