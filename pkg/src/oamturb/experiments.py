"""Seeded sweep harness over correction runs, with CSV output.

Every sweep follows one recipe: a grid of points, a fixed number of
trials per point, one fresh turbulent channel per trial, one correction
run per channel.  Rows carry the uncorrected, lowest, and final mse of
each run under a shared schema, so a single pair of writers covers all
five sweep kinds.  Trial seeds derive from (base_seed, point index,
trial index) and never repeat across points, which makes file contents
reproducible bit for bit regardless of thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import LinkSetup
from .optics import Image8
from .cnn import CnnModel, Dataset, TrainConfig, label_grid, subset_per_label, train
from .errors import ConfigError
from .feedback import GdoConfig, gdo_run, make_channel
from .io import load_pgm, save_image, write_csv
from .rng import derive_seed

SWEEP_ETA = "eta"
SWEEP_ITERATIONS = "iterations"
SWEEP_TRAIN_SIZE = "train-size"
SWEEP_OAM = "oam"
SWEEP_STRENGTH = "strength"

_KINDS = (SWEEP_ETA, SWEEP_ITERATIONS, SWEEP_TRAIN_SIZE, SWEEP_OAM, SWEEP_STRENGTH)

_METRICS = ("uncorrected", "best", "final")

RAW_COLUMNS = (
    "kind", "point_index", "point", "trial", "channel_seed",
    "cn2_true", "cn2_predicted", "uncorrected_mse", "best_mse", "final_mse",
)

STATS_COLUMNS = (
    "kind", "point_index", "point", "metric",
    "mean", "std", "median", "p10", "p95", "trials",
)


@dataclass(frozen=True)
class SweepSpec:
    """What to sweep and under which fixed channel settings.

    points are the swept values (eta values, iteration counts, training
    sizes, OAM indices, or cn2 strengths depending on kind).  cn2 and
    eta hold whichever of the pair is not being swept.
    """

    kind: str
    points: tuple[float, ...]
    trials: int = 10
    ell: int = 5
    base_seed: int = 0
    cn2: float = 3e-11
    eta: float = 275.0
    max_iter: int = 700
    record_stride: int = 10

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ConfigError(f"unknown sweep kind {self.kind!r}")
        if len(self.points) == 0:
            raise ConfigError("sweep needs at least one point")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")


@dataclass(frozen=True)
class TrialRow:
    point_index: int
    point: float
    trial: int
    channel_seed: int
    cn2_true: float
    cn2_predicted: float
    uncorrected: float
    best: float
    final: float


@dataclass(frozen=True)
class PointStats:
    point_index: int
    point: float
    metric: str
    mean: float
    std: float
    median: float
    p10: float
    p95: float
    trials: int


@dataclass(frozen=True)
class SweepResult:
    kind: str
    spec: SweepSpec
    rows: tuple[TrialRow, ...]

    def values(self, metric: str, point_index: int) -> np.ndarray:
        if metric not in _METRICS:
            raise ConfigError(f"unknown metric {metric!r}")
        picked = [
            getattr(r, metric) for r in self.rows if r.point_index == point_index
        ]
        return np.asarray(picked, dtype=np.float64)

    def point_indices(self) -> list[int]:
        return sorted({r.point_index for r in self.rows})

    def stats(self) -> list[PointStats]:
        out: list[PointStats] = []
        for pi in self.point_indices():
            point = next(r.point for r in self.rows if r.point_index == pi)
            for metric in _METRICS:
                v = self.values(metric, pi)
                out.append(PointStats(
                    point_index=pi,
                    point=point,
                    metric=metric,
                    mean=float(np.mean(v)),
                    std=float(np.std(v)),
                    median=float(np.median(v)),
                    p10=float(np.percentile(v, 10)),
                    p95=float(np.percentile(v, 95)),
                    trials=len(v),
                ))
        return out

    def mean_curve(self, metric: str) -> np.ndarray:
        return np.asarray(
            [float(np.mean(self.values(metric, pi))) for pi in self.point_indices()]
        )


def trial_seed(base_seed: int, point_index: int, trial: int) -> int:
    """Channel seed for one (point, trial) cell; unique across the sweep."""
    return derive_seed(base_seed, "point", point_index, "trial", trial)


def _check_seed_uniqueness(spec: SweepSpec) -> None:
    seeds = {
        trial_seed(spec.base_seed, pi, t)
        for pi in range(len(spec.points))
        for t in range(spec.trials)
    }
    if len(seeds) != len(spec.points) * spec.trials:
        raise ConfigError("trial seed collision; change base_seed")


def _run_pool(jobs, worker, threads: int):
    """Map worker over jobs, preserving determinism regardless of pool size."""
    if threads <= 1:
        return [worker(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, jobs))


def _prewarm(setup: LinkSetup, ells, cn2s) -> None:
    """Fill the per-setup caches up front so pooled trials only read them."""
    for ell in set(int(e) for e in ells):
        setup.target_intensity(ell)
    for cn2 in set(float(c) for c in cn2s):
        setup.spectrum(cn2)


def _correction_row(
    setup: LinkSetup,
    model: CnnModel | None,
    spec: SweepSpec,
    point_index: int,
    point: float,
    trial: int,
    *,
    cn2: float,
    eta: float,
    max_iter: int,
    ell: int,
    cn2_range: tuple[float, float],
) -> TrialRow:
    seed = trial_seed(spec.base_seed, point_index, trial)
    ch = make_channel(setup, cn2, seed)
    cfg = GdoConfig(
        eta=eta,
        max_iter=max_iter,
        record_stride=spec.record_stride,
        rng_seed=derive_seed(seed, "gdo"),
    )
    res = gdo_run(setup, ch, model, cfg, ell, cn2_range=cn2_range)
    return TrialRow(
        point_index=point_index,
        point=point,
        trial=trial,
        channel_seed=seed,
        cn2_true=res.cn2_true,
        cn2_predicted=res.cn2_predicted,
        uncorrected=res.uncorrected_mse,
        best=res.best_mse,
        final=res.final_mse,
    )


def _label_range() -> tuple[float, float]:
    values = label_grid().values
    return float(values[0]), float(values[-1])


def sweep_eta(
    spec: SweepSpec, setup: LinkSetup, model: CnnModel | None, *, threads: int = 1
) -> SweepResult:
    """Correction quality versus gradient step size at a fixed budget."""
    if spec.kind != SWEEP_ETA:
        raise ConfigError("spec.kind must be 'eta'")
    _check_seed_uniqueness(spec)
    _prewarm(setup, [spec.ell], [spec.cn2])
    rng_range = _label_range()
    jobs = [
        (pi, float(eta), t)
        for pi, eta in enumerate(spec.points)
        for t in range(spec.trials)
    ]

    def worker(job):
        pi, eta, t = job
        return _correction_row(
            setup, model, spec, pi, eta, t,
            cn2=spec.cn2, eta=eta, max_iter=spec.max_iter,
            ell=spec.ell, cn2_range=rng_range,
        )

    rows = sorted(_run_pool(jobs, worker, threads),
                  key=lambda r: (r.point_index, r.trial))
    return SweepResult(spec.kind, spec, tuple(rows))


def sweep_iterations(
    spec: SweepSpec, setup: LinkSetup, model: CnnModel | None, *, threads: int = 1
) -> SweepResult:
    """One long run per trial; points read the recorded mse trace.

    Every point must be a multiple of the record stride and no larger
    than the longest requested iteration count.  best at point p is the
    lowest recorded mse up to p, final is the mse exactly at p.
    """
    if spec.kind != SWEEP_ITERATIONS:
        raise ConfigError("spec.kind must be 'iterations'")
    points = [int(p) for p in spec.points]
    if any(p < 0 or p % spec.record_stride != 0 for p in points):
        raise ConfigError(
            f"iteration points must be non-negative multiples of {spec.record_stride}"
        )
    _check_seed_uniqueness(spec)
    _prewarm(setup, [spec.ell], [spec.cn2])
    rng_range = _label_range()
    longest = max(points)

    def worker(trial: int):
        seed = trial_seed(spec.base_seed, 0, trial)
        ch = make_channel(setup, spec.cn2, seed)
        cfg = GdoConfig(
            eta=spec.eta, max_iter=longest, record_stride=spec.record_stride,
            rng_seed=derive_seed(seed, "gdo"),
        )
        return trial, seed, gdo_run(setup, ch, model, cfg, spec.ell, cn2_range=rng_range)

    runs = _run_pool(list(range(spec.trials)), worker, threads)
    # expand each trace into one row per requested point
    rows: list[TrialRow] = []
    for trial, seed, res in runs:
        trace = [m for _, m in res.mse_trace]
        for pi, p in enumerate(points):
            k = p // spec.record_stride
            rows.append(TrialRow(
                point_index=pi,
                point=float(p),
                trial=trial,
                channel_seed=seed,
                cn2_true=res.cn2_true,
                cn2_predicted=res.cn2_predicted,
                uncorrected=res.uncorrected_mse,
                best=float(min(trace[: k + 1])),
                final=float(trace[k]),
            ))
    rows.sort(key=lambda r: (r.point_index, r.trial))
    return SweepResult(spec.kind, spec, tuple(rows))


def sweep_train_size(
    spec: SweepSpec,
    setup: LinkSetup,
    pool: Dataset,
    train_cfg: TrainConfig,
    *,
    threads: int = 1,
) -> SweepResult:
    """Correction quality versus images per training class.

    Size 0 runs the corrector with a uniform-random strength guess in
    place of a classifier; other sizes train a model on a seeded random
    subset of the pool.
    """
    if spec.kind != SWEEP_TRAIN_SIZE:
        raise ConfigError("spec.kind must be 'train-size'")
    sizes = [int(p) for p in spec.points]
    if any(s < 0 for s in sizes):
        raise ConfigError("training sizes must be >= 0")
    _check_seed_uniqueness(spec)
    _prewarm(setup, [spec.ell], [spec.cn2])
    rng_range = _label_range()

    models: dict[int, CnnModel | None] = {}
    for pi, size in enumerate(sizes):
        if size == 0:
            models[pi] = None
            continue
        subset = subset_per_label(
            pool, size, derive_seed(spec.base_seed, "subset", pi)
        )
        model, _ = train(train_cfg, subset)
        models[pi] = model

    jobs = [
        (pi, float(size), t)
        for pi, size in enumerate(sizes)
        for t in range(spec.trials)
    ]

    def worker(job):
        pi, size, t = job
        return _correction_row(
            setup, models[pi], spec, pi, size, t,
            cn2=spec.cn2, eta=spec.eta, max_iter=spec.max_iter,
            ell=spec.ell, cn2_range=rng_range,
        )

    rows = sorted(_run_pool(jobs, worker, threads),
                  key=lambda r: (r.point_index, r.trial))
    return SweepResult(spec.kind, spec, tuple(rows))


def sweep_oam(
    spec: SweepSpec,
    setup: LinkSetup,
    models: dict[int, CnnModel | None],
    *,
    threads: int = 1,
) -> SweepResult:
    """Correction quality versus OAM index at one fixed strength.

    models maps each swept index to the classifier trained for it (one
    model per index; None runs that index without a classifier).
    """
    if spec.kind != SWEEP_OAM:
        raise ConfigError("spec.kind must be 'oam'")
    ells = [int(p) for p in spec.points]
    missing = [e for e in ells if e not in models]
    if missing:
        raise ConfigError(f"no model supplied for OAM index {missing[0]}")
    _check_seed_uniqueness(spec)
    _prewarm(setup, ells, [spec.cn2])
    rng_range = _label_range()
    jobs = [
        (pi, ell, t) for pi, ell in enumerate(ells) for t in range(spec.trials)
    ]

    def worker(job):
        pi, ell, t = job
        return _correction_row(
            setup, models[ell], spec, pi, float(ell), t,
            cn2=spec.cn2, eta=spec.eta, max_iter=spec.max_iter,
            ell=ell, cn2_range=rng_range,
        )

    rows = sorted(_run_pool(jobs, worker, threads),
                  key=lambda r: (r.point_index, r.trial))
    return SweepResult(spec.kind, spec, tuple(rows))


def sweep_strength(
    spec: SweepSpec, setup: LinkSetup, model: CnnModel | None, *, threads: int = 1
) -> SweepResult:
    """Correction quality versus channel strength at one OAM index."""
    if spec.kind != SWEEP_STRENGTH:
        raise ConfigError("spec.kind must be 'strength'")
    strengths = [float(p) for p in spec.points]
    if any(s <= 0 for s in strengths):
        raise ConfigError("strengths must be positive")
    _check_seed_uniqueness(spec)
    _prewarm(setup, [spec.ell], strengths)
    rng_range = _label_range()
    jobs = [
        (pi, s, t) for pi, s in enumerate(strengths) for t in range(spec.trials)
    ]

    def worker(job):
        pi, s, t = job
        return _correction_row(
            setup, model, spec, pi, s, t,
            cn2=s, eta=spec.eta, max_iter=spec.max_iter,
            ell=spec.ell, cn2_range=rng_range,
        )

    rows = sorted(_run_pool(jobs, worker, threads),
                  key=lambda r: (r.point_index, r.trial))
    return SweepResult(spec.kind, spec, tuple(rows))


def strength_test_points(count: int) -> tuple[float, ...]:
    """Evenly spread strengths that sit between the training grid values."""
    grid = label_grid().values
    mids = 0.5 * (grid[:-1] + grid[1:])
    if not 1 <= count <= len(mids):
        raise ConfigError(f"count must be in 1..{len(mids)}")
    picks = np.linspace(0, len(mids) - 1, count)
    return tuple(float(mids[int(round(i))]) for i in picks)


def plateau_detected(
    means: np.ndarray, fraction: float = 0.2, tol: float = 0.05
) -> bool:
    """True when the mean curve improves by < tol over its last fraction."""
    m = np.asarray(means, dtype=np.float64)
    if len(m) < 2:
        return True
    k0 = min(int(np.floor(len(m) * (1.0 - fraction))), len(m) - 2)
    start = float(m[k0])
    if start == 0.0:
        return True
    return (start - float(m[-1])) / start < tol


def spearman(a, b) -> float:
    """Rank correlation; average ranks over ties, no external dependencies."""
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise ConfigError("spearman needs two equal-length 1-d samples, n >= 2")
    rx = _average_ranks(x)
    ry = _average_ranks(y)
    rx -= rx.mean()
    ry -= ry.mean()
    denom = np.sqrt(np.sum(rx * rx) * np.sum(ry * ry))
    if denom == 0.0:
        return 0.0
    return float(np.sum(rx * ry) / denom)


def _average_ranks(x: np.ndarray) -> np.ndarray:
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x), dtype=np.float64)
    xs = x[order]
    i = 0
    while i < len(xs):
        j = i
        while j + 1 < len(xs) and xs[j + 1] == xs[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j)
        i = j + 1
    return ranks


def montage(images: list[Image8], cols: int, pad: int = 2) -> Image8:
    """Tile equal-sized images into a grid, left to right then top down."""
    if not images:
        raise ConfigError("montage needs at least one image")
    if cols < 1:
        raise ConfigError("cols must be >= 1")
    h, w = images[0].shape
    for im in images:
        if im.shape != (h, w):
            raise ConfigError("montage images must share one shape")
    rows = -(-len(images) // cols)
    out = np.zeros(
        (rows * h + pad * (rows - 1), cols * w + pad * (cols - 1)),
        dtype=np.uint8,
    )
    for k, im in enumerate(images):
        r, c = divmod(k, cols)
        out[r * (h + pad) : r * (h + pad) + h,
            c * (w + pad) : c * (w + pad) + w] = im.pixels
    return Image8(out)


def render_montage(paths, out_path, cols: int, pad: int = 2) -> Image8:
    """Load PGM panels, tile them, and write the result (PGM or PNG)."""
    panels = [load_pgm(p) for p in paths]
    tiled = montage(panels, cols, pad)
    save_image(out_path, tiled)
    return tiled


def raw_rows(result: SweepResult) -> list[tuple]:
    return [
        (result.kind, r.point_index, r.point, r.trial, r.channel_seed,
         r.cn2_true, r.cn2_predicted, r.uncorrected, r.best, r.final)
        for r in result.rows
    ]


def stats_rows(result: SweepResult) -> list[tuple]:
    return [
        (result.kind, s.point_index, s.point, s.metric,
         s.mean, s.std, s.median, s.p10, s.p95, s.trials)
        for s in result.stats()
    ]


def write_sweep_csvs(result: SweepResult, raw_path, stats_path) -> None:
    """Emit the per-trial table and the per-point statistics table."""
    write_csv(raw_path, list(RAW_COLUMNS), raw_rows(result))
    write_csv(stats_path, list(STATS_COLUMNS), stats_rows(result))
