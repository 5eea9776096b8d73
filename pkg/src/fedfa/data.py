"""Federated datasets: synthetic heterogeneous generation, CSV ingestion, splits."""

import csv
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._validation import check_int, check_real
from .exceptions import (
    CSVParseError,
    DegenerateShardError,
    InvalidParameterError,
    SchemaMismatchError,
)

TRAIN_RATIO = 0.8


@dataclass
class DeviceShard:
    """One device's examples, already split into train and test parts."""

    device_id: int
    X_train: np.ndarray
    y_train: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray

    @property
    def n_train(self):
        return int(self.y_train.shape[0])

    @property
    def n_test(self):
        return int(self.y_test.shape[0])


@dataclass
class FederatedDataset:
    shards: list
    n_features: int
    n_classes: int
    gen_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        ids = [s.device_id for s in self.shards]
        if ids != list(range(len(ids))):
            raise InvalidParameterError("device ids must be unique and contiguous from 0")
        for s in self.shards:
            for X in (s.X_train, s.X_test):
                if X.ndim != 2 or X.shape[1] != self.n_features:
                    raise SchemaMismatchError(
                        f"device {s.device_id}: features have shape {X.shape}, "
                        f"expected (*, {self.n_features})"
                    )
            for y in (s.y_train, s.y_test):
                if y.size and (y.min() < 0 or y.max() >= self.n_classes):
                    raise SchemaMismatchError(
                        f"device {s.device_id}: labels outside [0, {self.n_classes})"
                    )

    @property
    def n_devices(self):
        return len(self.shards)

    @property
    def train_sizes(self):
        return np.array([s.n_train for s in self.shards], dtype=np.int64)

    def content_hash(self):
        """SHA-256 over every array in device order; equal datasets hash equal."""
        h = hashlib.sha256()
        h.update(f"{self.n_features},{self.n_classes},{self.n_devices}".encode())
        for s in self.shards:
            for arr in (s.X_train, s.y_train, s.X_test, s.y_test):
                h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class SyntheticConfig:
    """Parameters of the Synthetic(alpha, beta) family.

    ``alpha`` scales how much the per-device labeling models differ and
    ``beta`` how much the per-device feature means differ. Both are used as
    standard deviations of the device-level hyper-draws.
    """

    alpha: float = 1.0
    beta: float = 1.0
    iid: bool = False
    n_devices: int = 30
    n_features: int = 60
    n_classes: int = 10
    seed: int = 0
    s_min: int = 50
    pareto_shape: float = 1.5

    def __post_init__(self):
        check_real(self.alpha, "alpha", low=0.0)
        check_real(self.beta, "beta", low=0.0)
        check_int(self.n_devices, "n_devices", min_value=1)
        check_int(self.n_features, "n_features", min_value=1)
        check_int(self.n_classes, "n_classes", min_value=2)
        check_int(self.seed, "seed", min_value=0)
        check_int(self.s_min, "s_min", min_value=2)
        check_real(self.pareto_shape, "pareto_shape", low=0.0, low_inclusive=False)


SYNTHETIC_PRESETS = {
    "synthetic_iid": dict(alpha=0.0, beta=0.0, iid=True),
    "synthetic_0_0": dict(alpha=0.0, beta=0.0),
    "synthetic_0.5_0.5": dict(alpha=0.5, beta=0.5),
    "synthetic_1_1": dict(alpha=1.0, beta=1.0),
}


def power_law_sizes(n_devices, s_min, shape, rng):
    """Pareto-distributed sample counts by inverse-CDF sampling.

    Each size is ``floor(s_min * u ** (-1 / shape))`` with ``u`` uniform on
    ``(0, 1]``, so every size is at least ``s_min``.
    """
    check_int(n_devices, "n_devices", min_value=1)
    check_int(s_min, "s_min", min_value=2)
    check_real(shape, "shape", low=0.0, low_inclusive=False)
    u = 1.0 - rng.random(n_devices)
    return [int(math.floor(s_min * ui ** (-1.0 / shape))) for ui in u]


def split_train_test(X, y, ratio=TRAIN_RATIO, rng=None):
    """Shuffle then cut at ``floor(ratio * n)``; the prefix is the train part."""
    check_real(ratio, "ratio", low=0.0, high=1.0, low_inclusive=False, high_inclusive=False)
    X = np.asarray(X)
    y = np.asarray(y)
    n = y.shape[0]
    if n < 2:
        raise DegenerateShardError(f"need at least 2 examples to split, got {n}")
    n_train = int(math.floor(ratio * n))
    if n_train == 0 or n_train == n:
        raise DegenerateShardError(
            f"ratio {ratio} on {n} examples leaves an empty side ({n_train} train)"
        )
    rng = np.random.default_rng(0) if rng is None else rng
    perm = rng.permutation(n)
    tr, te = perm[:n_train], perm[n_train:]
    return X[tr], y[tr], X[te], y[te]


def _label(X, W, b):
    return np.argmax(X @ W.T + b, axis=1)


def _generate(cfg):
    rng = np.random.default_rng(cfg.seed)
    d, C = cfg.n_features, cfg.n_classes
    sizes = power_law_sizes(cfg.n_devices, cfg.s_min, cfg.pareto_shape, rng)
    feature_std = np.arange(1, d + 1, dtype=np.float64) ** (-1.2 / 2)

    if cfg.iid:
        W_shared = rng.normal(0.0, 1.0, (C, d))
        b_shared = rng.normal(0.0, 1.0, C)

    shards, models = [], []
    for k, n_k in enumerate(sizes):
        if cfg.iid:
            W, b = W_shared, b_shared
            mean_x = np.zeros(d)
        else:
            u_k = rng.normal(0.0, cfg.alpha)
            W = rng.normal(u_k, 1.0, (C, d))
            b = rng.normal(u_k, 1.0, C)
            B_k = rng.normal(0.0, cfg.beta)
            mean_x = rng.normal(B_k, 1.0, d)
        X = mean_x + rng.standard_normal((n_k, d)) * feature_std
        y = _label(X, W, b)
        X_tr, y_tr, X_te, y_te = split_train_test(X, y, TRAIN_RATIO, rng)
        if y_tr.shape[0] < 2:
            raise DegenerateShardError(f"device {k} gets only {y_tr.shape[0]} train examples")
        shards.append(DeviceShard(k, X_tr, y_tr, X_te, y_te))
        models.append((W, b))

    meta = {
        "source": "synthetic",
        "alpha": cfg.alpha,
        "beta": cfg.beta,
        "iid": cfg.iid,
        "seed": cfg.seed,
        "s_min": cfg.s_min,
        "pareto_shape": cfg.pareto_shape,
        "sizes": sizes,
    }
    return FederatedDataset(shards, d, C, meta), models


def generate_synthetic(cfg):
    """Build a Synthetic(alpha, beta) federated dataset.

    Per device ``k``: ``u_k ~ N(0, alpha)``, labeling model ``W_k, b_k`` with
    entries ``N(u_k, 1)``; ``B_k ~ N(0, beta)`` and feature mean ``v_k`` with
    entries ``N(B_k, 1)``; features ``x ~ N(v_k, diag(j^-1.2))``; label is
    ``argmax(W_k x + b_k)``. In the iid variant one ``W, b ~ N(0, 1)`` is shared
    and every ``v_k = 0``. Each device is then split 80/20.
    """
    return _generate(cfg)[0]


def generate_with_models(cfg):
    """Same dataset as :func:`generate_synthetic`, plus each device's ``(W_k, b_k)``."""
    return _generate(cfg)


def load_csv_dataset(path, n_features, n_classes, device_column="device",
                     label_column="label", ratio=TRAIN_RATIO, seed=0):
    """Read a ``f0..f{d-1},label,device`` CSV and split each device 80/20.

    Device ids in the file may be arbitrary integers; they are renumbered
    0..N-1 in ascending order. ``gen_meta["device_ids"]`` keeps the originals.
    """
    path = Path(path)
    feature_cols = [f"f{j}" for j in range(n_features)]
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaMismatchError(f"{path}: file is empty")
        header = [h.strip() for h in header]
        if device_column not in header:
            raise SchemaMismatchError(f"{path}: unknown device column {device_column!r}")
        missing = [c for c in feature_cols + [label_column] if c not in header]
        if missing:
            raise SchemaMismatchError(f"{path}: missing columns {missing}")
        f_idx = [header.index(c) for c in feature_cols]
        l_idx = header.index(label_column)
        d_idx = header.index(device_column)

        rows_by_device = {}
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise CSVParseError(
                    f"expected {len(header)} fields, got {len(row)}", row=row_no
                )
            try:
                feats = [float(row[i]) for i in f_idx]
            except ValueError as exc:
                raise CSVParseError(f"non-numeric feature: {exc}", row=row_no) from None
            try:
                label = int(row[l_idx])
                device = int(row[d_idx])
            except ValueError as exc:
                raise CSVParseError(f"bad label or device id: {exc}", row=row_no) from None
            if not 0 <= label < n_classes:
                raise SchemaMismatchError(
                    f"{path}: row {row_no}: label {label} outside [0, {n_classes})"
                )
            rows_by_device.setdefault(device, []).append((feats, label))

    if not rows_by_device:
        raise SchemaMismatchError(f"{path}: no data rows")

    X = np.array([r[0] for rows in rows_by_device.values() for r in rows], dtype=np.float64)
    y = np.array([r[1] for rows in rows_by_device.values() for r in rows], dtype=np.int64)
    groups = np.array([dev for dev, rows in rows_by_device.items() for _ in rows])
    dataset = partition_by_group(X.reshape(len(y), n_features), y, groups, n_classes,
                                 ratio=ratio, seed=seed)
    dataset.gen_meta.update(source="csv", path=str(path))
    return dataset


def partition_by_group(X, y, groups, n_classes, ratio=TRAIN_RATIO, seed=0):
    """Group rows by device id and split each device with :func:`split_train_test`.

    Devices are renumbered 0..N-1 in ascending order of their original ids,
    which are kept in ``gen_meta["device_ids"]``. A device with a single row
    cannot be split and keeps it as training data with an empty test part.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    groups = np.asarray(groups)
    if X.ndim != 2 or y.shape != (X.shape[0],) or groups.shape != y.shape:
        raise SchemaMismatchError(
            f"X {X.shape}, y {y.shape} and groups {groups.shape} are inconsistent"
        )
    rng = np.random.default_rng(seed)
    original_ids, inverse = np.unique(groups, return_inverse=True)
    shards = []
    for new_id, dev in enumerate(original_ids):
        rows = np.flatnonzero(inverse == new_id)
        if rows.size == 1:
            shards.append(DeviceShard(new_id, X[rows], y[rows], X[rows[:0]], y[rows[:0]]))
            continue
        try:
            X_tr, y_tr, X_te, y_te = split_train_test(X[rows], y[rows], ratio, rng)
        except DegenerateShardError as exc:
            raise DegenerateShardError(f"device {dev}: {exc}") from None
        shards.append(DeviceShard(new_id, X_tr, y_tr, X_te, y_te))
    meta = {"seed": seed, "device_ids": original_ids.tolist()}
    return FederatedDataset(shards, X.shape[1], n_classes, meta)


def write_csv_dataset(dataset, path):
    """Write every example (train then test, per device) in the CSV input format."""
    path = Path(path)
    header = [f"f{j}" for j in range(dataset.n_features)] + ["label", "device"]
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for s in dataset.shards:
            for X, y in ((s.X_train, s.y_train), (s.X_test, s.y_test)):
                for xi, yi in zip(X, y):
                    writer.writerow([repr(float(v)) for v in xi] + [int(yi), s.device_id])
    return path
