"""Seen/unseen generalization evaluation on checkerboard spatial splits."""

from __future__ import annotations

import csv
import inspect
import io
import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import clone

from ._io import atomic_write_text
from .base import training_digest
from .exceptions import EmptySubsetError, ProvenanceError
from .metrics import mean_power, sample_powers, to_db

DEFAULT_A_VALUES = tuple(round(0.5 + 0.1 * i, 10) for i in range(14))
REPORT_COLUMNS = ("estimator_id", "a_m", "p_seen_db", "p_unseen_db", "gap_db")
HEATMAP_COLUMNS = ("cell_x", "cell_y", "mean_p_db", "count")
DISPLAY_RANGE_DB = (-15.0, 0.0)


@dataclass(frozen=True)
class CheckerboardSplit:
    """Squares of side ``a`` (m) anchored at ``origin``; cells are half-open.

    A point goes to the training side iff
    ``(floor((x - x0) / a) + floor((y - y0) / a)) mod 2 == parity_for_train``;
    the z coordinate is ignored.
    """

    a: float
    origin: tuple = (0.0, 0.0)
    parity_for_train: int = 0

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"square side must be positive, got {self.a}")
        if self.parity_for_train not in (0, 1):
            raise ValueError("parity_for_train must be 0 or 1")
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    def parity(self, positions):
        p = np.atleast_2d(np.asarray(positions, dtype=np.float64))
        ix = np.floor((p[:, 0] - self.origin[0]) / self.a).astype(np.int64)
        iy = np.floor((p[:, 1] - self.origin[1]) / self.a).astype(np.int64)
        return (ix + iy) % 2

    def train_mask(self, positions):
        return self.parity(positions) == self.parity_for_train

    def split(self, data):
        return _split_by_mask(data, self.train_mask(_positions_of(data)))


def _positions_of(data):
    if hasattr(data, "positions"):
        return np.asarray(data.positions)
    items = list(data)
    if items and hasattr(items[0], "position"):
        return np.stack([np.asarray(r.position) for r in items])
    return np.atleast_2d(np.asarray(items, dtype=np.float64))


def _split_by_mask(data, mask):
    if hasattr(data, "subset"):
        return data.subset(mask), data.subset(~mask)
    items = list(data)
    return [r for r, m in zip(items, mask) if m], [r for r, m in zip(items, mask) if not m]


def checkerboard_split(records, a, origin=(0.0, 0.0), parity_for_train=0):
    """Split records/samples into (train, test) by checkerboard parity."""
    return CheckerboardSplit(a, origin, parity_for_train).split(records)


@dataclass(frozen=True)
class RandomSplit:
    """Uniform random assignment of a fraction of points to training."""

    train_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")

    def train_mask(self, positions):
        n = len(positions)
        rng = np.random.default_rng(self.seed)
        mask = np.zeros(n, dtype=bool)
        mask[rng.permutation(n)[: int(round(self.train_fraction * n))]] = True
        return mask

    def split(self, data):
        return _split_by_mask(data, self.train_mask(_positions_of(data)))


@dataclass
class EvalReport:
    """Seen/unseen aggregates plus every per-point power.

    ``gap_db`` is ``p_unseen_db - p_seen_db``; negative values are the loss
    incurred in regions without training data. A failed sweep entry keeps
    NaN aggregates and the failure message in ``error``.
    """

    estimator_id: str
    a: float | None
    p_seen_db: float
    p_unseen_db: float
    positions: np.ndarray = field(default_factory=lambda: np.empty((0, 3)))
    powers: np.ndarray = field(default_factory=lambda: np.empty(0))
    seen: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=bool))
    error: str | None = None

    @property
    def gap_db(self):
        return self.p_unseen_db - self.p_seen_db

    @property
    def p_all_db(self):
        return float(to_db(mean_power(self.powers)))

    @property
    def per_point(self):
        return list(zip(map(tuple, self.positions), self.powers.tolist()))

    def row(self):
        return {
            "estimator_id": self.estimator_id,
            "a_m": self.a,
            "p_seen_db": self.p_seen_db,
            "p_unseen_db": self.p_unseen_db,
            "gap_db": self.gap_db,
        }


def check_provenance(estimator, train):
    """Reject estimators fitted on anything other than ``train``.

    Estimators without a ``train_digest_`` are data-independent and pass.
    """
    digest = getattr(estimator, "train_digest_", None)
    if digest is None:
        digest = getattr(getattr(estimator, "model_", None), "train_digest_", None)
    if digest is not None and digest != training_digest(train.H_U):
        raise ProvenanceError("estimator was not fitted on the training side of this split")


def fit_estimator(estimator, samples):
    """``estimator.fit`` on a sample set, forwarding positions when accepted."""
    params = inspect.signature(estimator.fit).parameters
    if "positions" in params:
        return estimator.fit(samples.H_U, samples.h_D, positions=samples.positions)
    return estimator.fit(samples.H_U, samples.h_D)


def evaluate_seen_unseen(estimator, split, samples, estimator_id=None):
    """Mean normalized power on the split's training (seen) and test (unseen) sides."""
    mask = split.train_mask(samples.positions)
    if not mask.any() or mask.all():
        side = "training" if not mask.any() else "test"
        raise EmptySubsetError(f"{side} side of the split is empty (a = {getattr(split, 'a', None)})")
    train = samples.subset(mask)
    check_provenance(estimator, train)
    powers = sample_powers(samples, estimator)
    return EvalReport(
        estimator_id=estimator_id or type(estimator).__name__,
        a=getattr(split, "a", None),
        p_seen_db=float(to_db(mean_power(powers[mask]))),
        p_unseen_db=float(to_db(mean_power(powers[~mask]))),
        positions=np.asarray(samples.positions),
        powers=powers,
        seen=mask,
    )


def derive_seed(base_seed, a):
    """Deterministic per-grid-size training seed."""
    ss = np.random.SeedSequence([int(base_seed), int(round(a * 1000))])
    return int(ss.generate_state(1)[0])


def _make_estimator(estimator_or_factory, a, seed):
    if callable(estimator_or_factory) and not hasattr(estimator_or_factory, "fit"):
        return estimator_or_factory(a, seed)
    est = clone(estimator_or_factory)
    if "random_state" in est.get_params(deep=False):
        est.set_params(random_state=seed)
    return est


def _sweep_entry(samples, estimator_or_factory, a, origin, parity, base_seed, estimator_id):
    split = CheckerboardSplit(a, origin, parity)
    try:
        mask = split.train_mask(samples.positions)
        if not mask.any() or mask.all():
            raise EmptySubsetError(f"a = {a} m leaves one side of the split empty")
        est = _make_estimator(estimator_or_factory, a, derive_seed(base_seed, a))
        fit_estimator(est, samples.subset(mask))
        return evaluate_seen_unseen(est, split, samples, estimator_id)
    except EmptySubsetError as err:
        return EvalReport(estimator_id, a, math.nan, math.nan, error=str(err))


def sweep_grid(samples, estimator, a_values=DEFAULT_A_VALUES, origin=(0.0, 0.0), parity_for_train=0,
               base_seed=0, estimator_id=None, n_jobs=1):
    """Refit and evaluate once per square side in ``a_values``.

    ``estimator`` is an unfitted estimator (cloned per entry, its
    ``random_state`` replaced by :func:`derive_seed`) or a factory
    ``f(a, seed) -> estimator``. Entries whose split is degenerate come back
    with ``error`` set; the others are unaffected.
    """
    a_values = list(a_values)
    if not a_values:
        raise ValueError("a_values must not be empty")
    if estimator_id is None:
        estimator_id = type(estimator).__name__ if hasattr(estimator, "fit") else getattr(estimator, "__name__", "estimator")
    args = [(samples, estimator, float(a), origin, parity_for_train, base_seed, estimator_id) for a in a_values]
    if n_jobs == 1:
        return [_sweep_entry(*arg) for arg in args]
    from joblib import Parallel, delayed

    return Parallel(n_jobs=n_jobs)(delayed(_sweep_entry)(*arg) for arg in args)


def diagram_points(reports):
    """(estimator_id, a, p_seen_db, gap_db) for every successful report."""
    return [(r.estimator_id, r.a, r.p_seen_db, r.gap_db) for r in reports if r.error is None]


@dataclass
class HeatmapGrid:
    """Per-cell linear mean of P over an axis-aligned grid.

    ``bounds`` is (x_min, y_min, x_max, y_max); ``sums``/``counts`` are indexed
    [ix, iy]. Empty cells have count 0 and NaN mean.
    """

    cell_size: float
    bounds: tuple
    sums: np.ndarray
    counts: np.ndarray

    @property
    def mean(self):
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.counts > 0, self.sums / np.maximum(self.counts, 1), np.nan)

    @property
    def mean_db(self):
        with np.errstate(divide="ignore"):
            return 10 * np.log10(self.mean)

    @property
    def occupied(self):
        return int(np.count_nonzero(self.counts))

    def cell_centres(self):
        nx, ny = self.counts.shape
        xs = self.bounds[0] + (np.arange(nx) + 0.5) * self.cell_size
        ys = self.bounds[1] + (np.arange(ny) + 0.5) * self.cell_size
        return xs, ys


def heatmap_from_powers(positions, powers, cell_size, bounds=None):
    if not cell_size > 0:
        raise ValueError("cell_size must be positive")
    p = np.atleast_2d(np.asarray(positions, dtype=np.float64))
    powers = np.asarray(powers, dtype=np.float64)
    if bounds is None:
        x0 = math.floor(p[:, 0].min() / cell_size) * cell_size
        y0 = math.floor(p[:, 1].min() / cell_size) * cell_size
    else:
        x0, y0 = bounds[0], bounds[1]
    ix = np.floor((p[:, 0] - x0) / cell_size).astype(np.int64)
    iy = np.floor((p[:, 1] - y0) / cell_size).astype(np.int64)
    if bounds is None:
        nx, ny = ix.max() + 1, iy.max() + 1
    else:
        nx = max(1, math.ceil((bounds[2] - x0) / cell_size))
        ny = max(1, math.ceil((bounds[3] - y0) / cell_size))
        if ix.min() < 0 or iy.min() < 0 or ix.max() >= nx or iy.max() >= ny:
            raise ValueError("positions fall outside the heatmap bounds")
    sums = np.zeros((nx, ny))
    counts = np.zeros((nx, ny), dtype=np.int64)
    np.add.at(sums, (ix, iy), powers)
    np.add.at(counts, (ix, iy), 1)
    return HeatmapGrid(cell_size, (x0, y0, x0 + nx * cell_size, y0 + ny * cell_size), sums, counts)


def heatmap(samples, estimator, cell_size, bounds=None):
    """Grid of mean normalized power of ``estimator`` over the measurement area."""
    if not cell_size > 0:
        raise ValueError("cell_size must be positive")
    return heatmap_from_powers(samples.positions, sample_powers(samples, estimator), cell_size, bounds)


def latent_azimuth_correlation(latent, azimuth):
    """Pearson correlation between a 1-D latent and the azimuth angle."""
    latent = np.ravel(latent)
    azimuth = np.ravel(azimuth)
    if np.std(latent) == 0 or np.std(azimuth) == 0:
        return math.nan
    return float(np.corrcoef(latent, azimuth)[0, 1])


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(round(v, 12))
    return str(v)


def reports_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for r in reports:
        row = r.row()
        writer.writerow([_fmt(row[c]) for c in REPORT_COLUMNS])
    return buf.getvalue()


def write_reports_csv(reports, path):
    return atomic_write_text(path, reports_csv(reports))


def read_reports_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def heatmap_csv(grid: HeatmapGrid) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEATMAP_COLUMNS)
    xs, ys = grid.cell_centres()
    mean_db = grid.mean_db
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            count = int(grid.counts[i, j])
            writer.writerow([_fmt(float(x)), _fmt(float(y)), _fmt(float(mean_db[i, j])) if count else "", count])
    return buf.getvalue()


def write_heatmap_csv(grid, path):
    return atomic_write_text(path, heatmap_csv(grid))
