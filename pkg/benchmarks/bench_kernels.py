"""Compare the compiled kernels against the pure-Python fallback.

Times the simplex pivot on a mid-sized tableau and the lattice search on
a four-event instance, checks that both backends return bit-identical
results, and prints one line per (kernel, backend).

Run:  python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from advscc import DivergenceKind, GameSpec, RejectionFunction, make_pmf
from advscc import kernels
from advscc.adversary_oracle import _lattice_tables, _suffix_tables


def bench_pivot(backend, repeat: int) -> float:
    rng = np.random.default_rng(0)
    base = rng.standard_normal((220, 320))
    base[60, 110] = 2.5
    best = float("inf")
    for _ in range(repeat):
        tab = np.ascontiguousarray(base.copy())
        t0 = time.perf_counter()
        for k in range(200):
            backend.pivot_update(tab, 60, 110)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_lattice(backend, repeat: int):
    p = make_pmf([0.05, 0.15, 0.3, 0.5])
    kind = DivergenceKind.parse("kl2")
    spec = GameSpec(p=p, delta=0.2, lam=1.2, divergence=kind)
    r = RejectionFunction((0.8, 0.5, 0.2, 0.05))
    res = 220
    T, R = _lattice_tables(r.rates, p, kind, res)
    sufD, sufR = _suffix_tables(T, R, res)
    out = None
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = backend.lattice_min_rho(T, R, res, spec.lam - 1e-12, sufD, sufR)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    backends = {}
    for name in ("compiled", "fallback"):
        try:
            backends[name] = kernels.load(name)
        except ImportError:
            print(f"{name:9s} unavailable")
    if not backends:
        return

    results = {}
    for name, mod in backends.items():
        t_pivot = bench_pivot(mod, args.repeat)
        t_lat, out = bench_lattice(mod, args.repeat)
        results[name] = out
        print(f"{name:9s} pivot x200 {t_pivot * 1e3:8.2f} ms   "
              f"lattice {t_lat * 1e3:8.2f} ms")

    if len(results) == 2:
        a, b = results["compiled"], results["fallback"]
        same = a == b
        print(f"backends agree bit-for-bit: {same}  ({a[0]!r})")
        if not same:
            raise SystemExit(f"MISMATCH: {a!r} vs {b!r}")


if __name__ == "__main__":
    main()
