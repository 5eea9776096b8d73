"""Fairness statistics over per-device accuracies and metric file emission."""

import csv
import hashlib
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .exceptions import InvalidParameterError


@dataclass
class AccuracyStats:
    """Distribution summary in percent; ``variance`` is in percent squared."""

    average: float
    worst20: float
    best20: float
    variance: float

    def as_dict(self):
        return asdict(self)


@dataclass
class RoundRecord:
    round: int
    client_train_loss: float
    selected: list
    client_train_acc: list
    weights: list = None
    corrected: bool = False
    global_train_loss: float = None
    global_test_acc: float = None

    CSV_FIELDS = (
        "round",
        "client_train_loss",
        "global_train_loss",
        "global_test_acc",
        "selected",
        "client_train_acc",
        "weights",
        "corrected",
    )


def accuracy_stats(per_device_acc):
    """Average, worst-20%, best-20% and population variance, all in percent.

    Quintile buckets hold ``ceil(0.2 * N)`` devices so they are never empty.

    >>> accuracy_stats([0.0, 0.25, 0.5, 0.75, 1.0])
    AccuracyStats(average=50.0, worst20=0.0, best20=100.0, variance=1250.0)
    """
    acc = np.sort(np.asarray(per_device_acc, dtype=np.float64)) * 100.0
    if acc.size == 0:
        raise InvalidParameterError("accuracy_stats needs at least one device")
    bucket = math.ceil(0.2 * acc.size)
    average = float(acc.mean())
    return AccuracyStats(
        average=average,
        worst20=float(acc[:bucket].mean()),
        best20=float(acc[-bucket:].mean()),
        variance=float(np.mean((acc - average) ** 2)),
    )


def config_hash(config):
    """Stable SHA-256 of a JSON-serializable config mapping."""
    payload = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _fmt(value):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (list, tuple, np.ndarray)):
        return ";".join(_fmt(v) for v in value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.6f" % value


def _write_json(path, obj):
    with path.open("w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def emit_history(history, final_acc, stats, config, path_prefix):
    """Write the rounds CSV, final per-device accuracy CSV and summary JSON.

    Returns the list of written paths.
    """
    prefix = Path(path_prefix)
    rounds_path = prefix.parent / f"{prefix.name}_rounds.csv"
    acc_path = prefix.parent / f"{prefix.name}_final_acc.csv"
    summary_path = prefix.parent / f"{prefix.name}_summary.json"
    try:
        prefix.parent.mkdir(parents=True, exist_ok=True)
        with rounds_path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(RoundRecord.CSV_FIELDS)
            for rec in history:
                writer.writerow([_fmt(getattr(rec, name)) for name in RoundRecord.CSV_FIELDS])
        with acc_path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(("device_id", "test_accuracy"))
            for device_id, acc in enumerate(final_acc):
                writer.writerow((device_id, _fmt(float(acc))))
        _write_json(summary_path, {
            "config": config,
            "config_hash": config_hash(config),
            "stats": stats.as_dict(),
        })
    except OSError as exc:
        raise OSError(f"failed writing metrics under {prefix}: {exc}") from exc
    return [rounds_path, acc_path, summary_path]


def emit_comparison(results, config, path_prefix):
    """Write one summary JSON holding an :class:`AccuracyStats` block per algorithm."""
    prefix = Path(path_prefix)
    path = prefix.parent / f"{prefix.name}_compare_summary.json"
    try:
        prefix.parent.mkdir(parents=True, exist_ok=True)
        _write_json(path, {
            "config": config,
            "config_hash": config_hash(config),
            "results": {name: stats.as_dict() for name, stats in results.items()},
        })
    except OSError as exc:
        raise OSError(f"failed writing {path}: {exc}") from exc
    return path


def read_rounds_csv(path):
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
