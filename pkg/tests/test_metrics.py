import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fedfa.exceptions import InvalidParameterError
from fedfa.metrics import (
    AccuracyStats,
    RoundRecord,
    accuracy_stats,
    config_hash,
    emit_comparison,
    emit_history,
    read_rounds_csv,
)

accuracies = st.lists(st.floats(0.0, 1.0), min_size=1, max_size=60)


def two_pass_variance(values):
    mean = sum(values) / len(values)
    return sum((v - mean) ** 2 for v in values) / len(values)


class TestAccuracyStats:
    def test_constant(self):
        assert accuracy_stats([0.5] * 7) == AccuracyStats(50.0, 50.0, 50.0, 0.0)

    def test_five_devices(self):
        s = accuracy_stats([0.0, 0.25, 0.5, 0.75, 1.0])
        assert (s.average, s.worst20, s.best20, s.variance) == (50.0, 0.0, 100.0, 1250.0)

    def test_bucket_is_ceil(self):
        # 30 devices put 6 in each tail bucket
        acc = np.arange(30) / 29
        s = accuracy_stats(acc)
        assert s.worst20 == pytest.approx(100 * acc[:6].mean())
        assert s.best20 == pytest.approx(100 * acc[-6:].mean())
        assert accuracy_stats([0.3]).worst20 == pytest.approx(30.0)

    def test_empty(self):
        with pytest.raises(InvalidParameterError):
            accuracy_stats([])

    @given(accuracies, st.randoms())
    def test_order_invariant(self, acc, rnd):
        shuffled = acc[:]
        rnd.shuffle(shuffled)
        assert accuracy_stats(acc) == accuracy_stats(shuffled)

    @given(accuracies)
    def test_bounds(self, acc):
        s = accuracy_stats(acc)
        assert s.worst20 <= s.average + 1e-9 and s.average <= s.best20 + 1e-9
        assert s.variance >= 0

    @given(accuracies)
    def test_variance_oracle(self, acc):
        assert math.isclose(accuracy_stats(acc).variance,
                            two_pass_variance([100 * a for a in acc]), abs_tol=1e-9, rel_tol=1e-12)


def _history(n):
    return [RoundRecord(round=t, client_train_loss=0.5 / (t + 1), selected=[0, 2],
                        client_train_acc=[0.25, 0.5], weights=[0.4, 0.6] if t else None,
                        corrected=t == 2, global_train_loss=1.0 / (t + 1),
                        global_test_acc=None if t == 1 else 0.5)
            for t in range(n)]


class TestEmit:
    def test_files(self, tmp_path):
        config = {"seed": 3, "algorithm": "fedfa", "lr": 1e-4}
        paths = emit_history(_history(3), np.array([0.5, np.nan, 1.0]),
                             accuracy_stats([0.5, 1.0]), config, tmp_path / "out" / "run")
        assert [p.name for p in paths] == ["run_rounds.csv", "run_final_acc.csv", "run_summary.json"]
        rows = read_rounds_csv(paths[0])
        assert len(rows) == 3
        assert rows[0]["weights"] == "" and rows[1]["weights"] == "0.400000;0.600000"
        assert rows[1]["global_test_acc"] == "" and rows[2]["corrected"] == "1"
        assert rows[0]["selected"] == "0;2"
        assert paths[1].read_text().splitlines() == [
            "device_id,test_accuracy", "0,0.500000", "1,", "2,1.000000"]
        summary = json.loads(paths[2].read_text())
        assert summary["config"] == config
        assert summary["config_hash"] == config_hash(summary["config"])
        assert summary["stats"]["average"] == 75.0

    def test_comparison(self, tmp_path):
        stats = accuracy_stats([0.5])
        path = emit_comparison({"fedavg": stats, "fedfa": stats}, {"seed": 1}, tmp_path / "c")
        data = json.loads(path.read_text())
        assert path.name == "c_compare_summary.json"
        assert set(data["results"]) == {"fedavg", "fedfa"}

    def test_io_error_names_path(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        with pytest.raises(OSError, match="file"):
            emit_history(_history(1), [1.0], accuracy_stats([1.0]), {}, blocker / "run")

    def test_config_hash_stable(self):
        assert config_hash({"a": 1, "b": 2}) == config_hash({"b": 2, "a": 1})
        assert config_hash({"a": 1}) != config_hash({"a": 2})
