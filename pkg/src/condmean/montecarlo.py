"""Monte Carlo experiments for fiber-length and modulus tails.

Every experiment is a deterministic function of its configuration and
seed: trials are cut into fixed chunks, each chunk consumes its own
substream, and reductions run in chunk order (see _engine).  Where the
uniform law admits an exact answer the experiments report it next to
the estimate so asserting code never compares against an unverifiable
number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._engine import TailEstimate, estimate_from_hits, reduce_hits, run_chunks
from .bounds import (
    RegularityParams,
    ball_growth_ok,
    regularity_check,
    uniform_regularity_params,
)
from .distributions import (
    DensitySpec,
    Gaussian,
    SeedSpec,
    Smooth,
    Uniform,
    _simpson_refining,
    fiber_length_tail_exact_uniform,
    gaussian_mean_density_bound,
    sample_block,
)
from .errors import DensitySpecError, DomainError
from .modulus import modulus_gaussian
from .spectral import GraphSpec

_MAX_BOXES = 4096


def _support_ell(law: DensitySpec) -> float:
    if isinstance(law, (Uniform, Smooth)):
        return law.ell
    raise DensitySpecError("experiment needs a compactly supported law")


def _support_offset(law: DensitySpec) -> float:
    return law.offset if isinstance(law, Uniform) else 0.0


@dataclass(frozen=True)
class ExperimentConfig:
    """Shared knobs of a tail experiment.

    Exactly one of ``delta`` (direct threshold) or ``alpha`` (coupled
    threshold delta = s^alpha) must be given.  The event estimated is
    {raw modulus > s / delta}, i.e. the fiber is shorter than
    sqrt(n) delta; the raw (unclamped) modulus is used, so thresholds
    below 1 are meaningful.
    """

    law: DensitySpec
    n: int
    s: float
    trials: int
    seed: SeedSpec
    delta: float | None = None
    alpha: float | None = None
    workers: int | None = None

    def __post_init__(self) -> None:
        if self.n < 2:
            raise DomainError(f"need n >= 2, got {self.n}")
        if self.s <= 0:
            raise DomainError(f"need s > 0, got {self.s}")
        if self.trials < 1:
            raise DomainError(f"need trials >= 1, got {self.trials}")
        if (self.delta is None) == (self.alpha is None):
            raise DomainError("exactly one of delta or alpha must be set")
        if self.delta is not None and self.delta <= 0:
            raise DomainError(f"need delta > 0, got {self.delta}")
        if self.alpha is not None and not 0 < self.alpha < 1:
            raise DomainError(f"need 0 < alpha < 1, got {self.alpha}")

    @property
    def threshold_delta(self) -> float:
        return self.delta if self.delta is not None else self.s**self.alpha

    @property
    def mode(self) -> str:
        if isinstance(self.law, Uniform):
            return "uniform-exact"
        if isinstance(self.law, Smooth):
            return "smooth-numeric"
        return "gaussian-closed-form"


@dataclass(frozen=True)
class ModulusTailResult:
    """Estimated modulus tail, with the exact value when one exists."""

    estimate: TailEstimate
    exact: float | None
    threshold_delta: float


@dataclass(frozen=True)
class FiberTailResult:
    """Estimated fiber-length tail, with the exact value when one exists."""

    estimate: TailEstimate
    exact: float | None
    r: float


def _length_hits(law: DensitySpec, n: int, r: float, seed: SeedSpec, trials: int, workers):
    """Count trials with fiber length strictly below r."""
    ell = _support_ell(law)

    def one_chunk(index: int, m: int) -> int:
        rng = seed.rng(index)
        x = sample_block(law, (m, n), rng)
        spread = x.max(axis=1) - x.min(axis=1)
        lengths = math.sqrt(n) * (ell - spread)
        return int((lengths < r).sum())

    return run_chunks(trials, workers, one_chunk)


def estimate_modulus_tail(cfg: ExperimentConfig) -> ModulusTailResult:
    """Estimate P(raw modulus > s / delta) by direct sampling.

    For compact laws the event equals {fiber length < sqrt(n) delta};
    the uniform law additionally reports the exact order-statistics
    value.  A Gaussian law has a deterministic modulus, so its "tail"
    is an exact indicator and no sampling is spent.
    """
    delta = cfg.threshold_delta
    if isinstance(cfg.law, Gaussian):
        level = cfg.s / delta
        hit = 1.0 if modulus_gaussian(cfg.n, cfg.s).exact > level else 0.0
        est = estimate_from_hits(int(hit * cfg.trials), cfg.trials)
        return ModulusTailResult(estimate=est, exact=hit, threshold_delta=delta)
    r = math.sqrt(cfg.n) * delta
    per_chunk = _length_hits(cfg.law, cfg.n, r, cfg.seed, cfg.trials, cfg.workers)
    est = reduce_hits(per_chunk, cfg.trials)
    exact = None
    if isinstance(cfg.law, Uniform):
        exact = fiber_length_tail_exact_uniform(cfg.n, cfg.law.ell, r)
    return ModulusTailResult(estimate=est, exact=exact, threshold_delta=delta)


def estimate_fiber_tail(cfg: ExperimentConfig, r: float) -> FiberTailResult:
    """Estimate P(fiber length < r) for a compactly supported law."""
    if r < 0:
        raise DomainError(f"need r >= 0, got {r}")
    per_chunk = _length_hits(cfg.law, cfg.n, r, cfg.seed, cfg.trials, cfg.workers)
    est = reduce_hits(per_chunk, cfg.trials)
    exact = None
    if isinstance(cfg.law, Uniform):
        exact = fiber_length_tail_exact_uniform(cfg.n, cfg.law.ell, r)
    return FiberTailResult(estimate=est, exact=exact, r=r)


@dataclass(frozen=True)
class PartitionSpec:
    """Partition of the support interval by shared cut points.

    cut_points must be strictly increasing and span the support of the
    law it is used with; coordinate i falling into interval k_i places
    the sample in box (k_1, ..., k_n).
    """

    cut_points: tuple[float, ...]

    def __post_init__(self) -> None:
        pts = tuple(float(c) for c in self.cut_points)
        if len(pts) < 2 or any(b <= a for a, b in zip(pts, pts[1:])):
            raise DomainError(f"cut points must be strictly increasing, got {pts}")
        object.__setattr__(self, "cut_points", pts)

    @property
    def num_intervals(self) -> int:
        return len(self.cut_points) - 1

    def interval_probs(self, law: DensitySpec) -> np.ndarray:
        """Exact per-interval probabilities under the law."""
        lo, hi = self.cut_points[0], self.cut_points[-1]
        if isinstance(law, Uniform):
            support = (law.offset, law.offset + law.ell)
        elif isinstance(law, Smooth):
            support = (0.0, law.ell)
        else:
            raise DensitySpecError("partition experiments need a compact law")
        tol = 1e-12 * max(1.0, law.ell)
        if abs(lo - support[0]) > tol or abs(hi - support[1]) > tol:
            raise DomainError(
                f"cut points [{lo}, {hi}] must span the support {support}"
            )
        if isinstance(law, Uniform):
            return np.diff(self.cut_points) / law.ell
        return np.array(
            [
                _simpson_refining(law.rho, a, b)
                for a, b in zip(self.cut_points, self.cut_points[1:])
            ]
        )


@dataclass(frozen=True)
class MuRule:
    """Fluctuation-measurable choice of the window's left endpoint.

    kind "constant": always ``value``.  kind "median-eta": the median
    of the fluctuation vector (0 by symmetry for n = 2, nontrivial for
    odd n).  Both depend on the sample only through the fluctuations,
    which is what makes the decomposition legitimate.
    """

    kind: str
    value: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("constant", "median-eta"):
            raise DomainError(f"unknown mu rule {self.kind!r}")

    def evaluate(self, fluctuations: np.ndarray) -> np.ndarray:
        if self.kind == "constant":
            return np.full(fluctuations.shape[0], self.value)
        return np.median(fluctuations, axis=1)


@dataclass(frozen=True)
class BoxStat:
    """One partition box: exact probability, draws, and conditional hit rate."""

    index: tuple[int, ...]
    prob: float
    count: int
    hits: int
    conditional: float
    stderr: float


@dataclass(frozen=True)
class PartitionReport:
    """Direct versus decomposed estimate of P(mean in [mu, mu + s]).

    ``direct`` comes from one sample stream; ``decomposed`` recombines
    per-box conditional rates from an independent stream with the exact
    box probabilities.  ``agree_ok`` checks the two against their
    combined noise; ``sup_ok`` checks that the total never beats the
    largest per-box conditional rate (the decomposition inequality).
    """

    direct: TailEstimate
    decomposed: float
    decomposed_stderr: float
    agree_ok: bool
    sup_conditional: float
    sup_ok: bool
    boxes: tuple[BoxStat, ...]
    dropped_prob: float


def estimate_local_partition(
    cfg: ExperimentConfig, partition: PartitionSpec, mu_rule: MuRule
) -> PartitionReport:
    """Estimate a mean-window probability directly and by decomposition.

    The sample space is cut into product boxes of the coordinate
    partition.  Box probabilities are exact (the law is a product law);
    conditional window probabilities are estimated per box from a
    stream independent of the direct estimate.  Boxes never visited
    contribute their probability to ``dropped_prob`` and are excluded
    from the sup.
    """
    k = partition.num_intervals
    if k**cfg.n > _MAX_BOXES:
        raise DomainError(
            f"{k}^{cfg.n} boxes exceed the cap {_MAX_BOXES}; coarsen the partition"
        )
    probs_1d = partition.interval_probs(cfg.law)
    box_probs = probs_1d
    for _ in range(cfg.n - 1):
        box_probs = np.multiply.outer(box_probs, probs_1d)
    box_probs = box_probs.reshape(-1)

    edges = np.array(partition.cut_points)
    nboxes = k**cfg.n

    def direct_chunk(index: int, m: int) -> int:
        rng = cfg.seed.rng(0, index)
        x = sample_block(cfg.law, (m, cfg.n), rng)
        xi = x.mean(axis=1)
        mu = mu_rule.evaluate(x - xi[:, None])
        return int(((xi >= mu) & (xi <= mu + cfg.s)).sum())

    def boxes_chunk(index: int, m: int) -> tuple[np.ndarray, np.ndarray]:
        rng = cfg.seed.rng(1, index)
        x = sample_block(cfg.law, (m, cfg.n), rng)
        xi = x.mean(axis=1)
        mu = mu_rule.evaluate(x - xi[:, None])
        hit = (xi >= mu) & (xi <= mu + cfg.s)
        idx = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, k - 1)
        flat = np.zeros(m, dtype=np.int64)
        for col in range(cfg.n):
            flat = flat * k + idx[:, col]
        counts = np.bincount(flat, minlength=nboxes)
        hits = np.bincount(flat[hit], minlength=nboxes)
        return counts, hits

    direct_hits = run_chunks(cfg.trials, cfg.workers, direct_chunk)
    direct = reduce_hits(direct_hits, cfg.trials)

    per_chunk = run_chunks(cfg.trials, cfg.workers, boxes_chunk)
    counts = np.zeros(nboxes, dtype=np.int64)
    hits = np.zeros(nboxes, dtype=np.int64)
    for c, h in per_chunk:
        counts += c
        hits += h

    boxes: list[BoxStat] = []
    decomposed = 0.0
    var = 0.0
    dropped = 0.0
    sup = 0.0
    sup_se = 0.0
    for flat_idx in range(nboxes):
        p_box = float(box_probs[flat_idx])
        if counts[flat_idx] == 0:
            dropped += p_box
            continue
        c = int(counts[flat_idx])
        h = int(hits[flat_idx])
        cond = h / c
        se = math.sqrt(cond * (1.0 - cond) / c)
        decomposed += p_box * cond
        var += (p_box * se) ** 2
        if cond > sup:
            sup, sup_se = cond, se
        boxes.append(
            BoxStat(
                index=tuple(
                    (flat_idx // k ** (cfg.n - 1 - j)) % k for j in range(cfg.n)
                ),
                prob=p_box,
                count=c,
                hits=h,
                conditional=cond,
                stderr=se,
            )
        )
    decomposed_stderr = math.sqrt(var)
    agree_ok = abs(direct.p_hat - decomposed) <= 4.0 * math.sqrt(
        direct.stderr**2 + var
    ) + dropped
    sup_ok = direct.p_hat <= sup + 4.0 * (direct.stderr + sup_se)
    return PartitionReport(
        direct=direct,
        decomposed=decomposed,
        decomposed_stderr=decomposed_stderr,
        agree_ok=agree_ok,
        sup_conditional=sup,
        sup_ok=sup_ok,
        boxes=tuple(boxes),
        dropped_prob=dropped,
    )


def _clip_halfplane(poly: list[tuple[float, float]], a: float, b: float, c: float):
    """Keep the part of a convex polygon with a x + b y <= c."""
    out: list[tuple[float, float]] = []
    m = len(poly)
    for i in range(m):
        px, py = poly[i]
        qx, qy = poly[(i + 1) % m]
        p_in = a * px + b * py <= c
        q_in = a * qx + b * qy <= c
        if p_in:
            out.append((px, py))
        if p_in != q_in:
            t = (c - a * px - b * py) / (a * (qx - px) + b * (qy - py))
            out.append((px + t * (qx - px), py + t * (qy - py)))
    return out


def mean_band_probability_n2(ell: float, low: float, high: float) -> float:
    """Exact P(low <= (X1 + X2)/2 <= high) for two IID uniforms on [0, ell].

    Clips the square [0, ell]^2 by the two half-planes of the band and
    takes the polygon area; this is a geometric route independent of
    the order-statistics formulas.  Example: ell = 1, band [0.45, 0.55]
    for the mean gives 0.19.
    """
    if ell <= 0:
        raise DomainError(f"need ell > 0, got {ell}")
    if high < low:
        raise DomainError(f"need low <= high, got [{low}, {high}]")
    poly = [(0.0, 0.0), (ell, 0.0), (ell, ell), (0.0, ell)]
    poly = _clip_halfplane(poly, 1.0, 1.0, 2.0 * high)
    if poly:
        poly = _clip_halfplane(poly, -1.0, -1.0, -2.0 * low)
    if len(poly) < 3:
        return 0.0
    area = 0.0
    for i in range(len(poly)):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % len(poly)]
        area += x0 * y1 - x1 * y0
    return abs(area) / 2.0 / ell**2


@dataclass(frozen=True)
class RegularityReport:
    """One regularity-condition check on a graph ball.

    The event is {raw modulus of the |Q| coordinates in the ball
    exceeds the threshold s^(1-alpha)}.  ``exact_confirms`` records
    whether the exact uniform tail respects the ceiling at this grid
    point; only then is ``ok`` (the empirical check) meaningful as a
    validation of the formula rather than of the sampler.
    """

    q_size: int
    radius: int
    s: float
    alpha: float
    threshold: float
    ceiling: float
    estimate: TailEstimate
    exact: float
    ok: bool
    exact_confirms: bool
    growth_ok: bool
    params: RegularityParams


def regularity_experiment(
    law: Uniform,
    graph: GraphSpec,
    radius: int,
    s: float,
    alpha: float,
    trials: int,
    seed: SeedSpec,
    workers: int | None = None,
) -> RegularityReport:
    """Check the uniform-law regularity condition on a graph ball.

    Draws the potential restricted to Q = B_radius(center), estimates
    the modulus tail at the coupled threshold, and compares with the
    ceiling |Q|^2 s^(2 alpha) / (4 ell^2) and with the exact tail.  The
    ball-growth budget of the graph is verified at the queried radius.
    """
    if not isinstance(law, Uniform):
        raise DensitySpecError("the regularity condition is stated for uniform laws")
    ball = graph.ball(radius)
    q = int(ball.shape[0])
    if q < 2:
        raise DomainError(f"ball of radius {radius} has {q} < 2 vertices")
    params = uniform_regularity_params(law.ell, alpha)
    delta = s**alpha
    cfg = ExperimentConfig(
        law=law, n=q, s=s, trials=trials, seed=seed, alpha=alpha, workers=workers
    )
    res = estimate_modulus_tail(cfg)
    ceiling = params.tail_ceiling(q, s)
    est = res.estimate
    exact = fiber_length_tail_exact_uniform(q, law.ell, math.sqrt(q) * delta)
    return RegularityReport(
        q_size=q,
        radius=radius,
        s=s,
        alpha=alpha,
        threshold=params.threshold(q, s),
        ceiling=ceiling,
        estimate=est,
        exact=exact,
        ok=est.p_hat <= ceiling + 4.0 * est.stderr,
        exact_confirms=exact <= ceiling * (1.0 + 1e-9) + 1e-15,
        growth_ok=ball_growth_ok(q, max(radius, 1), graph.default_growth()),
        params=params,
    )


def empirical_window_sup(values: np.ndarray, width: float) -> float:
    """Largest fraction of points any closed window of given width holds."""
    v = np.sort(np.asarray(values, dtype=float))
    m = v.shape[0]
    if m == 0:
        raise DomainError("need at least one value")
    ends = np.searchsorted(v, v + width, side="right")
    return float((ends - np.arange(m)).max()) / m


def _ks_distance(sorted_a: np.ndarray, sorted_b: np.ndarray) -> float:
    grid = np.concatenate([sorted_a, sorted_b])
    fa = np.searchsorted(sorted_a, grid, side="right") / sorted_a.shape[0]
    fb = np.searchsorted(sorted_b, grid, side="right") / sorted_b.shape[0]
    return float(np.abs(fa - fb).max())


@dataclass(frozen=True)
class IndependenceReport:
    """Evidence that the Gaussian mean ignores its fluctuations.

    The mean's distribution inside each fluctuation-quantile bin is
    compared against the pooled distribution (KS distance), and the
    pooled histogram peak is compared with the closed-form density cap.
    """

    trials: int
    bin_ks: tuple[float, ...]
    max_ks: float
    peak_density: float
    density_bound: float
    window_sup: float
    window_exact: float
    window_s: float


def gaussian_independence_check(
    n: int,
    trials: int,
    seed: SeedSpec,
    quantile_bins: int = 10,
    hist_bin_width: float = 0.02,
    window_s: float = 0.1,
    workers: int | None = None,
) -> IndependenceReport:
    """Sample Gaussian means and test independence from the fluctuations.

    Bins trials by the quantile of the first fluctuation coordinate and
    reports the worst KS distance between a bin's mean distribution and
    the pooled one, the peak of the pooled histogram (density units)
    against sqrt(n/2 pi), and the empirical sliding-window sup against
    the closed-form Gaussian modulus.
    """
    if quantile_bins < 2:
        raise DomainError(f"need >= 2 bins, got {quantile_bins}")
    if hist_bin_width <= 0:
        raise DomainError(f"need positive bin width, got {hist_bin_width}")
    law = Gaussian()

    def one_chunk(index: int, m: int) -> tuple[np.ndarray, np.ndarray]:
        rng = seed.rng(index)
        x = sample_block(law, (m, n), rng)
        xi = x.mean(axis=1)
        return xi, x[:, 0] - xi

    parts = run_chunks(trials, workers, one_chunk)
    xi = np.concatenate([p[0] for p in parts])
    eta1 = np.concatenate([p[1] for p in parts])

    pooled = np.sort(xi)
    qs = np.quantile(eta1, np.linspace(0.0, 1.0, quantile_bins + 1))
    which = np.clip(np.searchsorted(qs, eta1, side="right") - 1, 0, quantile_bins - 1)
    ks = tuple(
        _ks_distance(np.sort(xi[which == b]), pooled) for b in range(quantile_bins)
    )

    lo = math.floor(pooled[0] / hist_bin_width) * hist_bin_width
    hi = math.ceil(pooled[-1] / hist_bin_width) * hist_bin_width
    edges = np.arange(lo, hi + hist_bin_width / 2, hist_bin_width)
    counts, _ = np.histogram(pooled, bins=edges)
    peak = float(counts.max()) / (trials * hist_bin_width)

    return IndependenceReport(
        trials=trials,
        bin_ks=ks,
        max_ks=max(ks),
        peak_density=peak,
        density_bound=gaussian_mean_density_bound(n),
        window_sup=empirical_window_sup(pooled, window_s),
        window_exact=modulus_gaussian(n, window_s).exact,
        window_s=window_s,
    )
