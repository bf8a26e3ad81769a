"""Random-instance generators and the type II error sweep over the bound.

The sweep solves both strategies (randomized and deterministic) for many
random targets at each divergence bound on a fixed grid, and aggregates the
worst-case type II errors into mean and SEM curves.  Everything is driven
by one seed; instances get independent derived streams, so reports are
byte-identical across runs and across worker counts.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core_model import GameSpec, Pmf, make_pmf
from .discrete_game import solve_hard_ldrs, solve_soft
from .divergence import DivergenceKind

__all__ = [
    "SweepConfig",
    "InstanceResult",
    "FailureRecord",
    "SweepReport",
    "gen_arbitrary_pmf",
    "gen_discretized_gaussian",
    "run_sweep",
    "raw_csv",
    "summary_csv",
]

_KL2 = DivergenceKind.parse("kl2")

DEFAULT_LAMBDA_GRID = tuple(0.5 * i for i in range(1, 26))


@dataclass(frozen=True)
class SweepConfig:
    family: str = "arbitrary"  # arbitrary | gaussian
    n_events: int = 50
    delta: float = 0.05
    lambda_grid: tuple[float, ...] = DEFAULT_LAMBDA_GRID
    reps: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.family not in ("arbitrary", "gaussian"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.n_events < 2:
            raise ValueError("n_events must be at least 2")
        if self.reps < 1:
            raise ValueError("reps must be positive")
        grid = tuple(float(v) for v in self.lambda_grid)
        if not grid or any(v <= 0.0 for v in grid):
            raise ValueError("lambda_grid must be positive")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("lambda_grid must be strictly ascending")
        object.__setattr__(self, "lambda_grid", grid)


@dataclass(frozen=True)
class InstanceResult:
    lam: float
    family: str
    rep: int
    hard_err: float
    soft_err: float
    soft_status: str
    hard_status: str


@dataclass(frozen=True)
class FailureRecord:
    lam: float
    rep: int
    message: str


@dataclass(frozen=True)
class SummaryRow:
    lam: float
    mean_hard: float
    sem_hard: float
    mean_soft: float
    sem_soft: float


@dataclass(frozen=True)
class SweepReport:
    config: SweepConfig
    rows: tuple[InstanceResult, ...]
    summary: tuple[SummaryRow, ...]
    failures: tuple[FailureRecord, ...] = ()


def gen_arbitrary_pmf(n_events: int, lam: float, rng: np.random.Generator) -> Pmf:
    """Random target with its rarest event forced under 2**(-lam).

    The first entry is uniform in (0, 2**(-lam)], the rest are uniform in
    (0, 1] renormalized onto the remaining mass, so a distribution at
    divergence lam always exists for the base-2 KL game.
    """
    if n_events < 2:
        raise ValueError("n_events must be at least 2")
    p1 = (2.0 ** -lam) * (1.0 - rng.random())
    rest = 1.0 - rng.random(n_events - 1)  # in (0, 1]
    rest = rest * ((1.0 - p1) / rest.sum())
    return make_pmf([p1, *rest])


def _phi(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def _first_bin_cumulative(sigma: float, edge: float) -> float:
    return _phi(edge / sigma)


def _sigma_min(edge_lo: float, edge_hi: float) -> float:
    # smallest sigma giving the outermost bin representable positive mass
    def mass(sigma: float) -> float:
        return _phi(edge_hi / sigma) - _phi(edge_lo / sigma)

    lo, hi = 1e-6, 1e3
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if mass(mid) > 1e-300:
            hi = mid
        else:
            lo = mid
    return hi


def gen_discretized_gaussian(n_events: int, lam: float,
                             rng: np.random.Generator) -> Pmf:
    """Centered Gaussian binned over [-10, 10], scale drawn to suit ``lam``.

    The scale is uniform between the smallest value keeping the outermost
    bin's mass representable and the value putting cumulative mass
    2**(-lam) below the first interior edge (found by bisection; when
    lam <= 1 no scale achieves that and 10x the lower limit is used).
    """
    if n_events < 2:
        raise ValueError("n_events must be at least 2")
    edges = np.linspace(-10.0, 10.0, n_events + 1)
    e0, e1 = float(edges[0]), float(edges[1])
    s_min = _sigma_min(e0, e1)
    target = 2.0 ** -lam
    if target < 0.5:
        lo, hi = s_min, 1e9
        for _ in range(200):
            mid = math.sqrt(lo * hi)
            if _first_bin_cumulative(mid, e1) < target:
                lo = mid
            else:
                hi = mid
        s_max = hi
    else:
        s_max = 10.0 * s_min
    s_max = max(s_max, s_min)
    sigma = s_min + rng.random() * (s_max - s_min)
    cdf = np.array([_phi(float(e) / sigma) for e in edges])
    masses = np.diff(cdf)
    masses = masses / masses.sum()
    return make_pmf(masses)


def _generate(family: str, n_events: int, lam: float,
              rng: np.random.Generator) -> Pmf:
    if family == "arbitrary":
        return gen_arbitrary_pmf(n_events, lam, rng)
    return gen_discretized_gaussian(n_events, lam, rng)


def _run_instance(task):
    index, family, n_events, delta, lam, rep, child = task
    try:
        rng = np.random.default_rng(child)
        p = _generate(family, n_events, lam, rng)
        spec = GameSpec(p=p, delta=delta, lam=lam, divergence=_KL2)
        soft = solve_soft(spec)
        hard = solve_hard_ldrs(spec)
        if soft.z is None or hard.value is None:
            raise RuntimeError(
                f"instance unexpectedly {soft.status}/{hard.status}"
            )
        return index, InstanceResult(
            lam=lam, family=family, rep=rep,
            hard_err=1.0 - hard.value, soft_err=1.0 - soft.z,
            soft_status=soft.status, hard_status=hard.status,
        )
    except Exception as exc:  # recorded, never fatal to the sweep
        return index, FailureRecord(lam=lam, rep=rep, message=str(exc))


def run_sweep(config: SweepConfig, jobs: int = 1) -> SweepReport:
    """Solve every (lambda, rep) instance and aggregate error curves.

    ``jobs`` > 1 distributes instances over worker processes; derived
    per-instance seeds make the result independent of the schedule.
    """
    grid = config.lambda_grid
    children = np.random.SeedSequence(config.seed).spawn(len(grid) * config.reps)
    tasks = []
    for li, lam in enumerate(grid):
        for rep in range(config.reps):
            idx = li * config.reps + rep
            tasks.append((idx, config.family, config.n_events, config.delta,
                          lam, rep, children[idx]))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_instance, tasks, chunksize=8))
    else:
        outcomes = [_run_instance(t) for t in tasks]
    outcomes.sort(key=lambda pair: pair[0])

    rows = tuple(r for _, r in outcomes if isinstance(r, InstanceResult))
    failures = tuple(r for _, r in outcomes if isinstance(r, FailureRecord))

    summary = []
    for lam in grid:
        hard = [r.hard_err for r in rows if r.lam == lam]
        soft = [r.soft_err for r in rows if r.lam == lam]
        if not hard:
            continue
        summary.append(SummaryRow(
            lam=lam,
            mean_hard=float(np.mean(hard)), sem_hard=_sem(hard),
            mean_soft=float(np.mean(soft)), sem_soft=_sem(soft),
        ))
    return SweepReport(config=config, rows=rows, summary=tuple(summary),
                       failures=failures)


def _sem(values) -> float:
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1) / math.sqrt(len(values)))


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _grid_note(config: SweepConfig) -> str:
    g = config.lambda_grid
    head = f"# lambda grid: {len(g)} values from {_fmt(g[0])} to {_fmt(g[-1])}"
    if len(g) < 2:
        return head
    steps = [b - a for a, b in zip(g, g[1:])]
    if max(steps) - min(steps) <= 1e-12:
        return head + f", arithmetic with step {_fmt(steps[0])}"
    return head + ", explicit list"


def raw_csv(report: SweepReport) -> str:
    lines = ["# advscc.sweep/1 raw", _grid_note(report.config),
             "lambda,family,rep,hard_err,soft_err"]
    for r in report.rows:
        lines.append(f"{_fmt(r.lam)},{r.family},{r.rep},"
                     f"{_fmt(r.hard_err)},{_fmt(r.soft_err)}")
    return "\n".join(lines) + "\n"


def summary_csv(report: SweepReport) -> str:
    lines = ["# advscc.sweep/1 summary", _grid_note(report.config),
             "lambda,mean_hard,sem_hard,mean_soft,sem_soft"]
    for s in report.summary:
        lines.append(f"{_fmt(s.lam)},{_fmt(s.mean_hard)},{_fmt(s.sem_hard)},"
                     f"{_fmt(s.mean_soft)},{_fmt(s.sem_soft)}")
    return "\n".join(lines) + "\n"
