import numpy as np
import pytest

from fedfa.data import DeviceShard, FederatedDataset, SyntheticConfig, generate_synthetic
from fedfa.model import ModelParams


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_synthetic():
    cfg = SyntheticConfig(alpha=1.0, beta=1.0, n_devices=8, n_features=5, n_classes=3,
                          seed=11, s_min=20)
    return generate_synthetic(cfg)


@pytest.fixture(scope="session")
def equal_shards():
    """Ten devices with 40 examples each (32 train / 8 test), d=4, C=3."""
    cfg = SyntheticConfig(alpha=0.5, beta=0.5, n_devices=10, n_features=4, n_classes=3,
                          seed=5, s_min=40, pareto_shape=1e9)
    ds = generate_synthetic(cfg)
    assert len(set(ds.train_sizes)) == 1
    return ds


def random_params(rng, C, d, scale=1.0):
    return ModelParams(rng.normal(0, scale, (C, d)), rng.normal(0, scale, C))


def toy_dataset(rng, sizes, d=2, C=2):
    shards = []
    for k, n in enumerate(sizes):
        X = rng.normal(k, 1.0, (n, d))
        y = (X[:, 0] > k).astype(np.int64) % C
        n_tr = int(0.8 * n)
        shards.append(DeviceShard(k, X[:n_tr], y[:n_tr], X[n_tr:], y[n_tr:]))
    return FederatedDataset(shards, d, C)


# acceptance reporting: tests marked ``criterion(n, title)`` get one summary line each

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    report = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None and (report.when == "call" or report.failed or report.skipped):
        number, title = marker.args
        prev = _CRITERIA.get(number, (title, "PASS", ""))
        status = prev[1]
        if report.failed:
            status = "FAIL"
        elif report.skipped and status == "PASS":
            status = "SKIP"
        detail = "; ".join(v for k, v in item.user_properties if k == "detail") or prev[2]
        _CRITERIA[number] = (title, status, detail)
    return report


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, status, detail = _CRITERIA[number]
        line = f"[{status}] criterion {number}: {title}"
        terminalreporter.write_line(line + (f" ({detail})" if detail else ""))
