"""Grid-backed single-class learner for continuous sample spaces.

The training pipeline turns a positive-only sample into a rejection rule:

1. Lay a randomly offset grid of pitch ``g`` over the space and record the
   cells the sample covers.
2. Draw a synthetic background sample uniformly from the covered region.
3. Train a soft classifier separating real points from background; its
   score orders points by how plausibly they come from the target.
4. Jitter the scores with tiny Gaussian noise (making their distribution
   continuous, which the quantile estimator requires), then estimate two
   score quantiles t- < t+ bracketing the rejection budget ``delta`` with a
   randomized order-statistic estimator that is unbiased in cdf value.
5. Reject a point if its cell was never covered, or if its score falls at
   or below the (slightly relaxed) lower threshold.

The margin pair (delta - 1/theta, delta + 1/theta) with theta growing like
n^(1/3) makes the type I budget hold with slack that vanishes as n grows.

Two knobs deviate deliberately from the idealized schedules, and are
recorded in ``SccModel.notes``: the jitter scale and margin sharpener are
fixed at desk-scale constants (sigma tiny but representable, m = 8) because
the idealized values underflow doubles, and ``theta_scale`` multiplies
theta so that finite-sample budgets are not drowned by the 1/theta margin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "SccError",
    "NonFinite",
    "EmptySample",
    "EmptyCells",
    "Degenerate",
    "MuOutOfRange",
    "DimensionMismatch",
    "GridSpec",
    "SccConfig",
    "SoftClassifier",
    "SccModel",
    "ReferenceDensity",
    "grid_key",
    "covered_cells",
    "sample_synthetic",
    "fit_baseline_classifier",
    "umvufb_quantile",
    "train_scc",
    "reject",
    "reject_many",
    "select_grid_pitch",
]


_trapz = getattr(np, "trapezoid", None) or getattr(np, "trapz")


class SccError(ValueError):
    """Base class for learner input errors."""


class NonFinite(SccError):
    """A coordinate was NaN or infinite."""


class EmptySample(SccError):
    """No sample points supplied."""


class EmptyCells(SccError):
    """No covered cells to draw synthetic points from."""


class Degenerate(SccError):
    """Sample carries no usable geometry (e.g. all points identical)."""


class MuOutOfRange(SccError):
    """Quantile level outside (0, 1)."""


class DimensionMismatch(SccError):
    """Point dimensionality differs from the model's."""


@dataclass(frozen=True)
class GridSpec:
    """Axis-aligned grid: cell j spans origin + pitch * [j, j + 1) per axis."""

    origin: tuple[float, ...]
    pitch: float
    d: int

    def __post_init__(self):
        if not (self.pitch > 0.0) or not math.isfinite(self.pitch):
            raise SccError(f"pitch must be positive and finite, got {self.pitch!r}")
        if len(self.origin) != self.d:
            raise SccError("origin dimension differs from d")


@dataclass(frozen=True)
class SccConfig:
    """Training knobs.  Defaults follow the design notes in this module.

    ``pitch=None`` selects the heuristic (diameter/4) * n^(-1/(d+2));
    ``bandwidth=None`` selects the median pairwise distance;
    ``n_centers=None`` keeps every training point as a kernel center.
    ``jitter_seed`` overrides only the jitter stream, which lets tests vary
    the jitter while holding everything else fixed.
    """

    pitch: float | None = None
    min_count: int = 1
    theta_scale: float = 8.0
    negbinom: bool = False
    use_validation_split: bool = False
    val_fraction: float = 0.25
    n_centers: int | None = 256
    ridge: float = 1e-3
    bandwidth: float | None = None
    max_iter: int = 5000
    grad_tol: float = 1e-6
    m: float = 8.0
    sigma_floor: float = 1e-12
    sigma_scale: float = 1e-9
    jitter_seed: int | None = None


@dataclass(frozen=True, eq=False)
class SoftClassifier:
    """Gaussian-kernel scorer h(x) = sum_j w_j exp(-|x-c_j|^2 / (2 bw^2)) + b.

    Trained under the logistic loss, which meets the required loss shape:
    non-negative, convex, differentiable, strictly convex left of zero, and
    decreasing at zero.
    """

    centers: np.ndarray
    weights: np.ndarray
    intercept: float
    bandwidth: float
    loss_name: str
    iterations: int
    final_loss: float

    @property
    def d(self) -> int:
        return self.centers.shape[1]

    def score_many(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.shape[1] != self.d:
            raise DimensionMismatch(
                f"points have dimension {X.shape[1]}, model has {self.d}"
            )
        sq = (
            np.sum(X * X, axis=1)[:, None]
            + np.sum(self.centers * self.centers, axis=1)[None, :]
            - 2.0 * X @ self.centers.T
        )
        K = np.exp(-np.maximum(sq, 0.0) / (2.0 * self.bandwidth ** 2))
        return K @ self.weights + self.intercept

    def score(self, x: Sequence[float]) -> float:
        return float(self.score_many(np.asarray(x, dtype=float).reshape(1, -1))[0])


@dataclass(frozen=True, eq=False)
class SccModel:
    """A trained rejection rule plus everything needed to audit it."""

    grid: GridSpec
    covered: frozenset
    classifier: SoftClassifier
    t_minus: float
    t_plus: float
    m: float
    sigma: float
    delta: float
    delta_minus: float
    delta_plus: float
    theta: float
    inclusive: bool
    notes: tuple[str, ...] = ()


def _as_points(sample) -> np.ndarray:
    X = np.asarray(sample, dtype=float)
    if X.size == 0:
        raise EmptySample("no sample points supplied")
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise SccError(f"expected a 2-D point array, got shape {X.shape}")
    if not np.isfinite(X).all():
        raise NonFinite("sample contains non-finite coordinates")
    return X


def grid_key(x: Sequence[float], grid: GridSpec) -> tuple[int, ...]:
    """Integer cell coordinates of ``x``: floor((x - origin) / pitch)."""
    out = []
    for xi, oi in zip(x, grid.origin, strict=True):
        if not math.isfinite(xi):
            raise NonFinite(f"coordinate {xi!r} is not finite")
        out.append(math.floor((xi - oi) / grid.pitch))
    return tuple(out)


def _keys_array(X: np.ndarray, grid: GridSpec) -> np.ndarray:
    if not np.isfinite(X).all():
        raise NonFinite("points contain non-finite coordinates")
    origin = np.asarray(grid.origin)
    return np.floor((X - origin) / grid.pitch).astype(np.int64)


def covered_cells(sample, grid: GridSpec, min_count: int = 1) -> frozenset:
    """Cells holding at least ``min_count`` sample points.

    ``min_count=1`` is plain coverage; larger values drop sparsely hit
    cells, trading support coverage for tighter background placement.
    """
    X = _as_points(sample)
    if min_count < 1:
        raise SccError(f"min_count must be at least 1, got {min_count}")
    counts: dict[tuple[int, ...], int] = {}
    for row in _keys_array(X, grid):
        key = tuple(int(v) for v in row)
        counts[key] = counts.get(key, 0) + 1
    return frozenset(k for k, c in counts.items() if c >= min_count)


def sample_synthetic(cells: Iterable[tuple[int, ...]], grid: GridSpec,
                     count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform draws from the union of ``cells``: pick a cell, then a point."""
    keys = sorted(cells)
    if not keys:
        raise EmptyCells("no cells to sample from")
    if count < 1:
        raise SccError(f"count must be positive, got {count}")
    keys_arr = np.asarray(keys, dtype=float)
    idx = rng.integers(0, len(keys), size=count)
    offsets = rng.random((count, grid.d))
    origin = np.asarray(grid.origin)
    return origin + (keys_arr[idx] + offsets) * grid.pitch


def _median_bandwidth(X: np.ndarray) -> float:
    # median pairwise distance over a deterministic subsample of <= 512 points
    n = X.shape[0]
    if n > 512:
        pick = np.linspace(0, n - 1, 512).astype(int)
        X = X[pick]
    sq = (
        np.sum(X * X, axis=1)[:, None]
        + np.sum(X * X, axis=1)[None, :]
        - 2.0 * X @ X.T
    )
    dist = np.sqrt(np.maximum(sq, 0.0))
    vals = dist[np.triu_indices(X.shape[0], k=1)]
    med = float(np.median(vals))
    if med > 0.0:
        return med
    pos = vals[vals > 0.0]
    if pos.size == 0:
        raise Degenerate("all training points are identical")
    return float(np.median(pos))


def fit_baseline_classifier(pos, neg, config: SccConfig = SccConfig(),
                            rng: np.random.Generator | None = None
                            ) -> SoftClassifier:
    """Train the Gaussian-kernel logistic scorer on pos (+1) vs neg (-1).

    Full-batch gradient descent with a fixed 1/L step (L from power
    iteration on the curvature bound) until the gradient infinity-norm
    drops to ``config.grad_tol`` or ``config.max_iter`` is hit.  The ridge
    penalty acts on the kernel weights only, never the intercept.  Centers
    are a subsample of the training points: random when ``rng`` is given,
    evenly strided otherwise, all points when ``n_centers`` is None.
    """
    P = _as_points(pos)
    N = _as_points(neg)
    if P.shape[1] != N.shape[1]:
        raise DimensionMismatch(
            f"pos has dimension {P.shape[1]}, neg has {N.shape[1]}"
        )
    X = np.vstack([P, N])
    y = np.concatenate([np.ones(len(P)), -np.ones(len(N))])
    n = len(X)

    bw = config.bandwidth if config.bandwidth is not None else _median_bandwidth(X)
    if not (bw > 0.0) or not math.isfinite(bw):
        raise SccError(f"bandwidth must be positive and finite, got {bw!r}")

    if config.n_centers is None or config.n_centers >= n:
        centers = X.copy()
    elif rng is not None:
        pick = rng.choice(n, size=config.n_centers, replace=False)
        centers = X[np.sort(pick)]
    else:
        pick = np.linspace(0, n - 1, config.n_centers).astype(int)
        centers = X[pick]
    c = len(centers)

    def kermat(A: np.ndarray, B: np.ndarray) -> np.ndarray:
        sq = (
            np.sum(A * A, axis=1)[:, None]
            + np.sum(B * B, axis=1)[None, :]
            - 2.0 * A @ B.T
        )
        return np.exp(-np.maximum(sq, 0.0) / (2.0 * bw * bw))

    Z = kermat(X, centers)
    Kcc = kermat(centers, centers)
    lam = config.ridge

    # curvature bound: (1/4n) Zaug' Zaug + lam * diag(Kcc, 0)
    Zaug = np.hstack([Z, np.ones((n, 1))])
    M = Zaug.T @ Zaug / (4.0 * n)
    M[:c, :c] += lam * Kcc
    v = np.ones(c + 1)
    for _ in range(100):
        w = M @ v
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            break
        v = w / norm
    L = float(v @ (M @ v))
    step = 1.0 / (1.01 * L) if L > 0.0 else 1.0

    alpha = np.zeros(c)
    b = 0.0
    iterations = 0
    for iterations in range(1, config.max_iter + 1):
        margin = y * (Z @ alpha + b)
        s = -y / (1.0 + np.exp(margin))  # d loss / d h, times n
        grad_a = Z.T @ s / n + lam * (Kcc @ alpha)
        grad_b = float(np.sum(s)) / n
        gmax = max(float(np.max(np.abs(grad_a))), abs(grad_b))
        if gmax <= config.grad_tol:
            iterations -= 1
            break
        alpha -= step * grad_a
        b -= step * grad_b

    margin = y * (Z @ alpha + b)
    loss = float(np.mean(np.logaddexp(0.0, -margin))
                 + 0.5 * lam * float(alpha @ (Kcc @ alpha)))
    return SoftClassifier(
        centers=centers, weights=alpha, intercept=b, bandwidth=bw,
        loss_name="logistic", iterations=iterations, final_loss=loss,
    )


def umvufb_quantile(values, mu: float, rng: np.random.Generator) -> float:
    """Randomized order-statistic estimate of the ``mu``-quantile.

    For n at least max(mu/(1-mu), (1-mu)/mu): take k = floor((n+1) mu) and
    return the (k+1)-th smallest value with probability (n+1) mu - k, the
    k-th otherwise; this makes the cdf value at the estimate unbiased for
    ``mu`` with variance at most 1/(4(n+1)).  Below that size the plain
    ceil(n mu)-th order statistic is the fall-back.  Indexing is 1-based on
    the sorted values.
    """
    if not (0.0 < mu < 1.0):
        raise MuOutOfRange(f"mu must lie in (0, 1), got {mu!r}")
    vals = np.sort(np.asarray(values, dtype=float))
    n = len(vals)
    if n == 0:
        raise EmptySample("no values to take a quantile of")
    if n < max(mu / (1.0 - mu), (1.0 - mu) / mu):
        idx = math.ceil(n * mu)
    else:
        k = math.floor((n + 1) * mu)
        beta = (n + 1) * mu - k
        idx = k + 1 if rng.random() < beta else k
    idx = min(max(idx, 1), n)
    return float(vals[idx - 1])


def _phi(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def _spawn_streams(rng, count: int) -> list[np.random.Generator]:
    if isinstance(rng, np.random.SeedSequence):
        seq = rng
    elif isinstance(rng, (int, np.integer)):
        seq = np.random.SeedSequence(int(rng))
    elif isinstance(rng, np.random.Generator):
        # derive a child sequence from the generator's own stream
        seq = np.random.SeedSequence(int(rng.integers(0, 2 ** 63)))
    else:
        raise SccError(f"rng must be an int, SeedSequence or Generator, "
                       f"got {type(rng).__name__}")
    return [np.random.default_rng(child) for child in seq.spawn(count)]


def _bbox_diameter(X: np.ndarray) -> float:
    span = X.max(axis=0) - X.min(axis=0)
    return float(np.linalg.norm(span))


def train_scc(sample, delta: float, config: SccConfig = SccConfig(),
              rng=0) -> SccModel:
    """Run the full training pipeline; see the module docstring.

    ``rng`` is a single splittable seed (int or SeedSequence): independent
    streams are derived from it for the grid offset, the synthetic sample
    size and draw, center subsampling, the validation split, the jitter,
    and the quantile estimator, so runs reproduce bit-for-bit.
    """
    X = _as_points(sample)
    n, d = X.shape
    if n < 2:
        raise SccError(f"need at least 2 sample points, got {n}")
    if not (0.0 < delta < 1.0):
        raise SccError(f"delta must lie in (0, 1), got {delta!r}")

    (rng_origin, rng_count, rng_syn, rng_centers,
     rng_split, rng_jitter, rng_est) = _spawn_streams(rng, 7)
    if config.jitter_seed is not None:
        rng_jitter = np.random.default_rng(
            np.random.SeedSequence(config.jitter_seed)
        )

    diam = _bbox_diameter(X)
    if config.pitch is not None:
        g = config.pitch
    elif diam > 0.0:
        g = (diam / 4.0) * n ** (-1.0 / (d + 2))
    else:
        g = 1.0
    grid = GridSpec(origin=tuple(rng_origin.uniform(0.0, g, size=d)),
                    pitch=float(g), d=d)

    covered = covered_cells(X, grid, config.min_count)
    if not covered:
        raise Degenerate(
            f"min_count={config.min_count} filtered out every covered cell"
        )

    n_syn = n
    if config.negbinom:
        n_syn = max(1, int(rng_count.negative_binomial(n, 0.5)))
    synthetic = sample_synthetic(covered, grid, n_syn, rng_syn)

    notes = [
        "jitter scale and margin sharpener fixed at sigma = "
        f"max({config.sigma_floor:g}, {config.sigma_scale:g} * score-range), "
        f"m = {config.m:g}: the idealized schedules underflow doubles",
    ]
    if config.theta_scale != 1.0:
        notes.append(
            f"theta scaled by {config.theta_scale:g} over the plain n^(1/3) "
            f"example rate to keep 1/theta well below delta at this n"
        )

    if config.use_validation_split:
        perm = rng_split.permutation(n)
        n_val = min(max(1, int(round(config.val_fraction * n))), n - 2)
        fit_idx, val_idx = perm[n_val:], perm[:n_val]
        clf = fit_baseline_classifier(X[fit_idx], synthetic, config,
                                      rng=rng_centers)
        quantile_scores = clf.score_many(X[val_idx])
        notes.append("thresholds estimated on a held-out validation split")
    else:
        clf = fit_baseline_classifier(X, synthetic, config, rng=rng_centers)
        quantile_scores = clf.score_many(X)

    theta = config.theta_scale * n ** (1.0 / 3.0)
    delta_minus = delta - 1.0 / theta
    delta_plus = delta + 1.0 / theta
    if delta_minus <= 0.0:
        raise SccError(
            f"delta - 1/theta = {delta_minus!r} is not positive: "
            f"increase n or theta_scale"
        )

    span = float(quantile_scores.max() - quantile_scores.min())
    sigma = max(config.sigma_floor, config.sigma_scale * span)
    jittered = quantile_scores + rng_jitter.normal(0.0, sigma,
                                                   size=len(quantile_scores))

    phi_m, phi_neg_m = _phi(config.m), _phi(-config.m)
    mu_minus = min(max(phi_m * delta_minus + phi_neg_m / 2.0, 1e-9), 1.0 - 1e-9)
    mu_plus = min(max(phi_m * delta_plus + phi_neg_m / 2.0, 1e-9), 1.0 - 1e-9)
    t_minus = umvufb_quantile(jittered, mu_minus, rng_est)
    t_plus = umvufb_quantile(jittered, mu_plus, rng_est)

    return SccModel(
        grid=grid, covered=covered, classifier=clf,
        t_minus=t_minus, t_plus=t_plus, m=config.m, sigma=sigma,
        delta=delta, delta_minus=delta_minus, delta_plus=delta_plus,
        theta=theta, inclusive=bool(t_minus < t_plus), notes=tuple(notes),
    )


def reject(model: SccModel, x: Sequence[float]) -> bool:
    """True when the model rejects ``x``.

    Points in never-covered cells are rejected outright.  Covered points
    compare their score against t- minus the jitter allowance m * sigma;
    the comparison is inclusive exactly when t- < t+.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if len(x) != model.grid.d:
        raise DimensionMismatch(
            f"point has dimension {len(x)}, model has {model.grid.d}"
        )
    if grid_key(x, model.grid) not in model.covered:
        return True
    h = model.classifier.score(x)
    threshold = model.t_minus - model.m * model.sigma
    return h <= threshold if model.inclusive else h < threshold


def reject_many(model: SccModel, X) -> np.ndarray:
    """Vectorized :func:`reject` over rows of ``X``."""
    pts = np.asarray(X, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if pts.shape[1] != model.grid.d:
        raise DimensionMismatch(
            f"points have dimension {pts.shape[1]}, model has {model.grid.d}"
        )
    keys = _keys_array(pts, model.grid)
    uncovered = np.array(
        [tuple(int(v) for v in row) not in model.covered for row in keys]
    )
    out = uncovered.copy()
    inside = ~uncovered
    if inside.any():
        h = model.classifier.score_many(pts[inside])
        threshold = model.t_minus - model.m * model.sigma
        hit = h <= threshold if model.inclusive else h < threshold
        out[inside] = hit
    return out


def select_grid_pitch(sample, t: int) -> float:
    """Smallest pitch (1% relative) whose singleton-cell count is <= t.

    Singleton cells are those holding exactly one sample point; their count
    is the natural estimate of how much target mass the covered region
    misses.  The search runs geometrically over [diameter/n, diameter],
    doubling the upper end a few times if even the full diameter leaves too
    many singletons through unlucky alignment; the grid origin is fixed at
    zero during the search.
    """
    X = _as_points(sample)
    if t < 0:
        raise SccError(f"t must be non-negative, got {t}")
    n, d = X.shape
    diam = _bbox_diameter(X)
    if diam == 0.0:
        return 1.0

    def singletons(g: float) -> int:
        keys = np.floor(X / g).astype(np.int64)
        _, counts = np.unique(keys, axis=0, return_counts=True)
        return int(np.sum(counts == 1))

    lo, hi = diam / n, diam
    if singletons(lo) <= t:
        return lo
    doublings = 0
    while singletons(hi) > t:
        hi *= 2.0
        doublings += 1
        if doublings > 6:
            return hi
    # invariant: lo fails, hi passes; shrink geometrically
    while hi / lo > 1.01:
        mid = math.sqrt(lo * hi)
        if singletons(mid) <= t:
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True, eq=False)
class ReferenceDensity:
    """Analytic 1-D Gaussian mixture used to grade the learner in tests.

    Exposes the density itself and the distribution of the density value
    of a random draw, so tests can locate the exact level-set threshold a
    perfect delta-rejector would use.
    """

    weights: tuple[float, ...]
    means: tuple[float, ...]
    sigmas: tuple[float, ...]
    _grid: np.ndarray = field(init=False, repr=False)
    _pdf_grid: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not (len(self.weights) == len(self.means) == len(self.sigmas)):
            raise SccError("mixture parameter lengths differ")
        if abs(math.fsum(self.weights) - 1.0) > 1e-12:
            raise SccError("mixture weights must sum to 1")
        if any(s <= 0.0 for s in self.sigmas):
            raise SccError("mixture sigmas must be positive")
        lo = min(m - 10.0 * s for m, s in zip(self.means, self.sigmas))
        hi = max(m + 10.0 * s for m, s in zip(self.means, self.sigmas))
        grid = np.linspace(lo, hi, 200_001)
        object.__setattr__(self, "_grid", grid)
        object.__setattr__(self, "_pdf_grid", self.pdf(grid))
        total = float(_trapz(self._pdf_grid, grid))
        if abs(total - 1.0) > 1e-6:
            raise SccError(f"mixture integrates to {total!r}, expected 1")

    def pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for w, m, s in zip(self.weights, self.means, self.sigmas):
            out += w * np.exp(-0.5 * ((x - m) / s) ** 2) / (s * math.sqrt(2 * math.pi))
        return out

    def level_cdf(self, threshold: float) -> float:
        """P(p(X) <= threshold) for X drawn from the mixture."""
        mask = self._pdf_grid <= threshold
        return float(_trapz(np.where(mask, self._pdf_grid, 0.0), self._grid))

    def level_threshold(self, delta: float) -> float:
        """Density value v with P(p(X) <= v) = delta."""
        if not (0.0 < delta < 1.0):
            raise SccError(f"delta must lie in (0, 1), got {delta!r}")
        lo, hi = 0.0, float(self._pdf_grid.max())
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if self.level_cdf(mid) < delta:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)
