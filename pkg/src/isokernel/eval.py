"""Experimental protocols: cross-validated sharpness selection, online
test-then-train simulation in fixed-size blocks, single-epoch batch runs,
and parameter sweeps.

All randomness flows from ``ProtocolConfig.seed``; two runs with the same
config and data produce identical Metrics except for wall times. Learners
compared under one seed consume the same shuffled stream.
"""

import csv
import json
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .dataset import (
    Dataset,
    LabeledPoint,
    SparseVector,
    kfold,
    shuffle,
    split_head,
    unify_dims,
)
from .errors import ConfigError
from .featuremap import Mapper
from .kernels import Laplacian
from .learner import DualModel, IKOGDModel, NOGDModel, predict_label
from .nystrom import fit_nystrom

SCHEMA_VERSION = 1

LEARNERS = ("ogd", "ik-ogd-iforest", "ik-ogd-anne", "nogd")

# psi search range: powers of two from 2^2 to 2^12
DEFAULT_GRID = tuple(2**m for m in range(2, 13))


@dataclass
class ProtocolConfig:
    """Everything a protocol run needs besides the data itself."""

    learner: str
    eta: float = 0.5
    t: int = 100
    b: int = 100
    r: int = 20
    psi_grid: tuple = DEFAULT_GRID
    block_size: int = 1000
    folds: int = 5
    seed: int = 0
    train_size: int | None = None  # online protocol: initial training head
    cv_max_points: int | None = None  # cap on points used for psi selection
    normalize: bool = False

    def __post_init__(self):
        if self.learner not in LEARNERS:
            raise ConfigError(
                f"unknown learner {self.learner!r}; choose from {LEARNERS}"
            )
        if not self.psi_grid:
            raise ConfigError("psi grid must be nonempty")
        if self.block_size < 1:
            raise ConfigError("block size must be >= 1")

    def resolved(self):
        """Full config as a plain dict (defaults included)."""
        out = asdict(self)
        out["psi_grid"] = list(self.psi_grid)
        return out


@dataclass
class Metrics:
    """Everything recorded about one protocol run."""

    learner: str
    dataset: str
    protocol: str
    psi: int
    config: dict
    block_accuracy: list = field(default_factory=list)
    cumulative_accuracy: list = field(default_factory=list)
    final_accuracy: float | None = None
    n_predictions: int = 0
    n_correct: int = 0
    updates: int = 0
    last_predict_ops: int = 0
    total_predict_ops: int = 0
    encode_ops_per_point: int = 0
    train_time: float = 0.0
    test_time: float = 0.0
    degenerate: bool = False
    schema_version: int = SCHEMA_VERSION

    def to_dict(self):
        return asdict(self)

    def write_json(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


# ---------------------------------------------------------------------------
# learner pipelines


class _IKRun:
    def __init__(self, config, psi, scheme, seed):
        self.config = config
        self.psi = psi
        self.scheme = scheme
        self.seed = seed
        self.mapper = None
        self.model = None
        self.encoded_points = 0

    def fit(self, train):
        self.mapper = Mapper.fit(
            train, self.psi, self.config.t, self.scheme, self.seed
        )
        self.model = IKOGDModel(self.config.t, self.psi, mapper=self.mapper)

    def encode(self, ds):
        self.encoded_points += len(ds)
        return self.mapper.map_many(ds)

    def encode_ops_total(self):
        return self.mapper.assign_ops

    def train_pass(self, encoded, labels):
        eta = self.config.eta
        for f, c in zip(encoded, labels):
            self.model.step(f, int(c), eta)

    def predict(self, encoded):
        return self.model.predict_many(encoded)


class _OGDRun:
    def __init__(self, config, psi, seed):
        self.config = config
        self.psi = psi
        self.seed = seed
        self.model = None
        self.encoded_points = 0

    def fit(self, train):
        self.model = DualModel(Laplacian(self.psi, train.dim))

    def encode(self, ds):
        self.encoded_points += len(ds)
        return [p.x for p in ds]

    def encode_ops_total(self):
        return 0

    def train_pass(self, encoded, labels):
        eta = self.config.eta
        for x, c in zip(encoded, labels):
            self.model.step(x, int(c), eta)

    def predict(self, encoded):
        return self.model.predict_many(encoded)


class _NOGDRun:
    def __init__(self, config, psi, seed):
        self.config = config
        self.psi = psi
        self.seed = seed
        self.nystrom = None
        self.model = None
        self.encoded_points = 0

    def fit(self, train):
        kernel = Laplacian(self.psi, train.dim)
        self.nystrom = fit_nystrom(
            train, self.config.b, self.config.r, kernel, self.seed
        )
        self.model = NOGDModel(self.nystrom.effective_r, nystrom=self.nystrom)

    def encode(self, ds):
        self.encoded_points += len(ds)
        return self.nystrom.map_many(ds)

    def encode_ops_total(self):
        return self.nystrom.kernel_evals

    def train_pass(self, encoded, labels):
        eta = self.config.eta
        for xhat, c in zip(encoded, labels):
            self.model.step(xhat, int(c), eta)

    def predict(self, encoded):
        return self.model.predict_many(encoded)


def _make_run(config, psi, seed):
    if config.learner == "ik-ogd-iforest":
        return _IKRun(config, psi, "iforest", seed)
    if config.learner == "ik-ogd-anne":
        return _IKRun(config, psi, "anne", seed)
    if config.learner == "ogd":
        return _OGDRun(config, psi, seed)
    return _NOGDRun(config, psi, seed)


def _needs_psi_sample(learner):
    return learner.startswith("ik-ogd")


def _workers():
    raw = os.environ.get("ISOKERNEL_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _map_maybe_parallel(fn, items):
    workers = _workers()
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# optional per-attribute min-max scaling (off by default)


def minmax_params(train):
    X = train.dense()
    lo = X.min(axis=0)
    span = X.max(axis=0) - lo
    span[span == 0.0] = 1.0
    return lo, span


def apply_minmax(ds, lo, span):
    X = (ds.dense() - lo) / span
    points = []
    for row, p in zip(X, ds.points):
        nz = np.flatnonzero(row)
        points.append(
            LabeledPoint(SparseVector(nz + 1, row[nz], ds.dim), p.c)
        )
    return Dataset(points, dim=ds.dim, name=ds.name)


# ---------------------------------------------------------------------------
# protocols


def _accuracy(scores, labels):
    preds = np.fromiter(
        (predict_label(s) for s in scores), dtype=np.int64, count=len(scores)
    )
    return float(np.mean(preds == np.asarray(labels)))


def _fold_accuracy(fold_train, fold_val, psi, config, seed):
    run = _make_run(config, psi, seed)
    run.fit(fold_train)
    run.train_pass(run.encode(fold_train), fold_train.labels())
    scores = run.predict(run.encode(fold_val))
    return _accuracy(scores, fold_val.labels())


def cv_select_psi(train, config):
    """Mean validation accuracy over k folds for each grid psi; argmax.

    Ties break to the smallest psi. Grid values demanding a larger sample
    than a training fold provides are skipped with a warning; if that skips
    everything the configuration is unusable. With a single-element grid the
    choice is forced and no folds are run.
    """
    grid = sorted(set(config.psi_grid))
    if len(grid) == 1:
        return grid[0]
    if len(train) < config.folds:
        raise ConfigError(
            f"need at least {config.folds} points for {config.folds}-fold CV"
        )
    cv_ds = train
    if config.cv_max_points is not None and len(train) > config.cv_max_points:
        cv_ds, _ = split_head(
            shuffle(train, (config.seed, 211)), config.cv_max_points
        )
    folds = kfold(cv_ds, config.folds, (config.seed, 223))
    min_fold_train = min(len(ft) for ft, _ in folds)

    usable = []
    for psi in grid:
        if _needs_psi_sample(config.learner) and psi > min_fold_train:
            warnings.warn(
                f"psi={psi} exceeds fold-train size {min_fold_train}; skipped"
            )
            continue
        usable.append(psi)
    if not usable:
        raise ConfigError("every grid psi exceeds the fold-train size")

    cells = [
        (psi, i, ft, fv) for psi in usable for i, (ft, fv) in enumerate(folds)
    ]
    accs = _map_maybe_parallel(
        lambda cell: _fold_accuracy(
            cell[2], cell[3], cell[0], config, (config.seed, 227, cell[1])
        ),
        cells,
    )
    mean_acc = {}
    for (psi, _, _, _), acc in zip(cells, accs):
        mean_acc.setdefault(psi, []).append(acc)
    best_psi, best_acc = None, -1.0
    for psi in usable:  # ascending: ties keep the smallest psi
        acc = float(np.mean(mean_acc[psi]))
        if acc > best_acc:
            best_psi, best_acc = psi, acc
    return best_psi


def run_online(dataset, config):
    """Test-then-train simulation over a shuffled stream.

    The head of the stream (``config.train_size`` points) selects psi by
    cross-validation, fits the feature map or landmarks, and trains the
    initial model. The rest arrives in blocks: every block is first
    predicted with the latest model, then used to update it. Cumulative
    accuracy is recorded after each block.
    """
    if config.train_size is None:
        raise ConfigError("online protocol requires train_size")
    if config.train_size >= len(dataset):
        raise ConfigError(
            f"train_size {config.train_size} leaves no stream "
            f"(dataset has {len(dataset)} points)"
        )
    ds = shuffle(dataset, config.seed)
    head, tail = split_head(ds, config.train_size)
    if config.normalize:
        lo, span = minmax_params(head)
        head = apply_minmax(head, lo, span)
        tail = apply_minmax(tail, lo, span)

    t_train = time.perf_counter()
    psi = cv_select_psi(head, config)
    run = _make_run(config, psi, (config.seed, 229))
    run.fit(head)
    run.train_pass(run.encode(head), head.labels())
    train_time = time.perf_counter() - t_train

    metrics = Metrics(
        learner=config.learner,
        dataset=dataset.name,
        protocol="online",
        psi=psi,
        config=config.resolved(),
        degenerate=len(tail) < config.block_size,
    )
    test_time = 0.0
    seen = correct = 0
    labels = tail.labels()
    for lo_i in range(0, len(tail), config.block_size):
        hi_i = min(lo_i + config.block_size, len(tail))
        block = tail.subset(np.arange(lo_i, hi_i))
        block_labels = labels[lo_i:hi_i]
        encoded = run.encode(block)

        t0 = time.perf_counter()
        scores = run.predict(encoded)
        test_time += time.perf_counter() - t0
        preds = np.fromiter(
            (predict_label(s) for s in scores), dtype=np.int64, count=len(block)
        )
        block_correct = int(np.sum(preds == block_labels))
        seen += len(block)
        correct += block_correct
        metrics.block_accuracy.append(block_correct / len(block))
        metrics.cumulative_accuracy.append(correct / seen)

        t0 = time.perf_counter()
        run.train_pass(encoded, block_labels)
        train_time += time.perf_counter() - t0

    metrics.n_predictions = seen
    metrics.n_correct = correct
    metrics.final_accuracy = correct / seen if seen else None
    metrics.updates = run.model.updates
    metrics.last_predict_ops = run.model.last_predict_ops
    metrics.total_predict_ops = run.model.total_ops
    if run.encoded_points:
        metrics.encode_ops_per_point = run.encode_ops_total() // run.encoded_points
    metrics.train_time = train_time
    metrics.test_time = test_time
    return metrics


def run_batch(train, test, config):
    """Single train-and-test trial: one online epoch, then a frozen test.

    psi is selected by cross-validation on the training set, the model is
    trained in one pass over a seeded shuffle of it, and accuracy is
    measured on the untouched test set.
    """
    if len(train) == 0 or len(test) == 0:
        raise ConfigError("batch protocol needs nonempty train and test sets")
    train, test = unify_dims(train, test)
    if config.normalize:
        lo, span = minmax_params(train)
        train = apply_minmax(train, lo, span)
        test = apply_minmax(test, lo, span)

    t0 = time.perf_counter()
    psi = cv_select_psi(train, config)
    stream = shuffle(train, config.seed)
    run = _make_run(config, psi, (config.seed, 229))
    run.fit(stream)
    run.train_pass(run.encode(stream), stream.labels())
    train_time = time.perf_counter() - t0

    t0 = time.perf_counter()
    scores = run.predict(run.encode(test))
    test_time = time.perf_counter() - t0
    labels = test.labels()
    preds = np.fromiter(
        (predict_label(s) for s in scores), dtype=np.int64, count=len(test)
    )
    correct = int(np.sum(preds == labels))

    return Metrics(
        learner=config.learner,
        dataset=f"{train.name}->{test.name}",
        protocol="batch",
        psi=psi,
        config=config.resolved(),
        final_accuracy=correct / len(test),
        n_predictions=len(test),
        n_correct=correct,
        updates=run.model.updates,
        last_predict_ops=run.model.last_predict_ops,
        total_predict_ops=run.model.total_ops,
        encode_ops_per_point=(
            run.encode_ops_total() // run.encoded_points
            if run.encoded_points
            else 0
        ),
        train_time=train_time,
        test_time=test_time,
    )


SWEEP_AXES = ("t", "psi", "b")


def sweep(axis, values, config, train, test):
    """One batch run per value of the swept parameter, sharing all seeds."""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}")
    if not values:
        raise ConfigError("sweep needs at least one value")

    def one(value):
        if axis == "t":
            cfg = replace(config, t=int(value))
        elif axis == "b":
            cfg = replace(config, b=int(value))
        else:
            cfg = replace(config, psi_grid=(int(value),))
        return run_batch(train, test, cfg)

    return _map_maybe_parallel(one, list(values))


# ---------------------------------------------------------------------------
# metric emission


RUN_CSV_FIELDS = [
    "schema_version",
    "learner",
    "dataset",
    "protocol",
    "psi",
    "t",
    "b",
    "final_accuracy",
    "n_predictions",
    "updates",
    "last_predict_ops",
    "total_predict_ops",
    "encode_ops_per_point",
    "train_time",
    "test_time",
    "degenerate",
]


def write_runs_csv(path, metrics_list):
    """One CSV row per run."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=RUN_CSV_FIELDS)
        writer.writeheader()
        for m in metrics_list:
            row = {k: getattr(m, k) for k in RUN_CSV_FIELDS if hasattr(m, k)}
            row["t"] = m.config["t"]
            row["b"] = m.config["b"]
            writer.writerow(row)


def write_blocks_csv(path, metrics):
    """One CSV row per stream block of an online run."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["schema_version", "block", "block_accuracy", "cumulative_accuracy"]
        )
        for i, (ba, ca) in enumerate(
            zip(metrics.block_accuracy, metrics.cumulative_accuracy)
        ):
            writer.writerow([metrics.schema_version, i, ba, ca])


# ---------------------------------------------------------------------------
# synthetic task used by tests and bundled sample data


def make_two_gaussians(n, dim, separation, seed, name="two-gaussians"):
    """Balanced two-class dataset: spherical Gaussians ``separation`` apart."""
    rng = np.random.default_rng(seed)
    labels = rng.choice([-1, 1], size=n)
    offset = separation / (2.0 * np.sqrt(dim))
    X = rng.standard_normal((n, dim)) + labels[:, None] * offset
    points = []
    for row, c in zip(X, labels):
        nz = np.flatnonzero(row)
        points.append(
            LabeledPoint(SparseVector(nz + 1, row[nz], dim), int(c))
        )
    return Dataset(points, dim=dim, name=name)
