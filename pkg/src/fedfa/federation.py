"""Server loop for FedAvg, FedProx and FedFa.

FedFa differs from FedAvg in three places:

* clients train with momentum (see :mod:`fedfa.optim`);
* the server aggregates with weights built from the information quantity of
  each participant's normalized training accuracy and participation count;
* the server keeps a momentum term over the round-to-round model difference
  and applies it every ``round_b`` rounds.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from ._validation import check_int, check_probability_vector, check_real, derive_seed
from .exceptions import ClientError, DimensionMismatchError, InvalidParameterError
from .metrics import RoundRecord
from .model import ModelParams, accuracy, mean_loss
from .optim import local_train

logger = logging.getLogger(__name__)

ALGORITHMS = ("fedavg", "fedprox", "fedfa")


@dataclass
class ClientReport:
    client_id: int
    params: ModelParams
    train_acc: float
    participation_count: int
    n_samples: int
    train_loss: float = float("nan")

    def __post_init__(self):
        if not 0.0 <= self.train_acc <= 1.0:
            raise InvalidParameterError(f"train_acc must lie in [0, 1], got {self.train_acc}")
        check_int(self.participation_count, "participation_count", min_value=1)
        check_int(self.n_samples, "n_samples", min_value=1)


@dataclass(frozen=True)
class AggregationPolicy:
    """Server-side behaviour of one algorithm.

    ``alpha`` multiplies the accuracy information and ``beta`` the
    participation information. ``eta_s=None`` means "reuse the client
    learning rate" and is resolved by :func:`run_round`.
    """

    kind: str = "fedavg"
    alpha: float = 0.5
    beta: float = 0.5
    gamma_s: float = 0.5
    eta_s: float = None
    round_b: int = 3
    c_eps: float = 1e-10
    weighting_enabled: bool = False
    server_momentum_enabled: bool = False

    def __post_init__(self):
        if self.kind not in ALGORITHMS:
            raise InvalidParameterError(f"kind must be one of {ALGORITHMS}, got {self.kind!r}")
        check_real(self.alpha, "alpha", low=0.0, high=1.0)
        check_real(self.beta, "beta", low=0.0, high=1.0)
        check_real(self.gamma_s, "gamma_s", low=0.0, high=1.0, high_inclusive=False)
        if self.eta_s is not None:
            check_real(self.eta_s, "eta_s", low=0.0, low_inclusive=False)
        check_int(self.round_b, "round_b", min_value=1)
        check_real(self.c_eps, "c_eps", low=0.0, low_inclusive=False)
        if self.weighting_enabled and abs(self.alpha + self.beta - 1.0) > 1e-9:
            raise InvalidParameterError(
                f"alpha + beta must equal 1, got {self.alpha} + {self.beta}"
            )

    @classmethod
    def fedavg(cls, **kw):
        return cls(kind="fedavg", **kw)

    @classmethod
    def fedprox(cls, **kw):
        return cls(kind="fedprox", **kw)

    @classmethod
    def fedfa(cls, **kw):
        kw.setdefault("weighting_enabled", True)
        kw.setdefault("server_momentum_enabled", True)
        return cls(kind="fedfa", **kw)


@dataclass
class ServerState:
    w: ModelParams
    m: np.ndarray
    rng: np.random.Generator
    counters: np.ndarray
    t: int = 0
    n_corrections: int = 0

    @classmethod
    def initial(cls, n_clients, n_classes, n_features, seed=0):
        w = ModelParams.zeros(n_classes, n_features)
        return cls(
            w=w,
            m=np.zeros(w.size),
            rng=np.random.default_rng(seed),
            counters=np.zeros(n_clients, dtype=np.int64),
        )


def select_clients(state, K, probs=None):
    """Draw ``K`` distinct clients, each draw proportional to the remaining ``p_k``.

    Returns the ids sorted ascending.
    """
    n = state.counters.shape[0]
    K = check_int(K, "K", min_value=1)
    if K > n:
        raise InvalidParameterError(f"K={K} exceeds the {n} available clients")
    if probs is None:
        probs = np.full(n, 1.0 / n)
    probs = check_probability_vector(probs, n)
    if np.count_nonzero(probs) < K:
        raise InvalidParameterError(f"only {np.count_nonzero(probs)} clients have p_k > 0, need {K}")
    chosen = state.rng.choice(n, size=K, replace=False, p=probs)
    return np.sort(chosen)


def _by_client_id(reports):
    if not reports:
        raise InvalidParameterError("no client reports to aggregate")
    return sorted(reports, key=lambda r: r.client_id)


def aggregate_weighted(reports, weights):
    """``sum_k weight_k * w_k``, summed in ascending client-id order.

    ``weights`` is aligned with ``reports``.
    """
    if len(weights) != len(reports):
        raise DimensionMismatchError(f"{len(weights)} weights for {len(reports)} reports")
    pairs = sorted(zip(reports, weights), key=lambda p: p[0].client_id)
    if not pairs:
        raise InvalidParameterError("no client reports to aggregate")
    ref = pairs[0][0].params
    W = np.zeros_like(ref.W)
    b = np.zeros_like(ref.b)
    for report, weight in pairs:
        if not report.params.same_shape(ref):
            raise DimensionMismatchError(f"client {report.client_id} params have the wrong shape")
        W += weight * report.params.W
        b += weight * report.params.b
    return ModelParams(W, b)


def sample_size_weights(reports):
    n = np.array([r.n_samples for r in reports], dtype=np.float64)
    return n / n.sum()


def aggregate_sample_size(reports):
    """FedAvg aggregation: ``sum_k (n_k / n) w_k`` over this round's participants."""
    if not reports:
        raise InvalidParameterError("no client reports to aggregate")
    return aggregate_weighted(reports, sample_size_weights(reports))


def accuracy_information(acc, c_eps=1e-10):
    """``-log2(acc)``, or ``-log2(acc + c_eps)`` where ``acc == 0``."""
    acc = np.asarray(acc, dtype=np.float64)
    return -np.log2(np.where(acc == 0.0, acc + c_eps, acc))


def frequency_information(freq, c_eps=1e-10):
    """``-log2(1 - freq)``, or ``-log2(1 - freq + c_eps)`` where ``1 - freq == 0``."""
    rest = 1.0 - np.asarray(freq, dtype=np.float64)
    return -np.log2(np.where(rest == 0.0, rest + c_eps, rest))


def _renormalize(values):
    total = values.sum()
    if total <= 0.0 or not np.isfinite(total) or np.all(values == values[0]):
        return np.full(values.shape, 1.0 / values.size)
    return values / total


def info_weights(reports, policy):
    """FedFa aggregation weights, aligned with ``reports``.

    Training accuracy and participation count are each normalized over the
    round's participants and turned into information quantities, so a low
    accuracy or a high participation count earns more weight. Each
    information vector is renormalized to sum to one and the two are blended
    as ``alpha * acc_info + beta * freq_info``.

    If every participant reports zero accuracy the accuracy information is
    taken as uniform.
    """
    if not reports:
        raise InvalidParameterError("no client reports to weight")
    if len(reports) == 1:
        return np.ones(1)
    acc = np.array([r.train_acc for r in reports], dtype=np.float64)
    freq = np.array([r.participation_count for r in reports], dtype=np.float64)

    acc_total = acc.sum()
    if acc_total == 0.0:
        acc_info = np.full(acc.size, 1.0 / acc.size)
    else:
        acc_info = _renormalize(accuracy_information(acc / acc_total, policy.c_eps))
    freq_info = _renormalize(frequency_information(freq / freq.sum(), policy.c_eps))
    if np.all(acc_info == freq_info):
        # symmetric round: skip the blend so identical clients get exactly 1/K
        return acc_info
    return policy.alpha * acc_info + policy.beta * freq_info


def server_momentum_step(state, w_agg, policy, eta_s=None):
    """Update the server momentum and, on gated rounds, correct ``w_agg``.

    ``m <- gamma_s * m + (1 - gamma_s) * (w_agg - w)`` runs every round; the
    correction ``w_agg - eta_s * m`` is applied only when ``(t + 1)`` is a
    multiple of ``round_b``. Returns ``(params, corrected)``.
    """
    if not w_agg.same_shape(state.w):
        raise DimensionMismatchError("aggregated params do not match server params")
    eta = policy.eta_s if eta_s is None else eta_s
    if eta is None:
        raise InvalidParameterError("eta_s is unresolved; pass eta_s or set it on the policy")
    agg = w_agg.flat()
    delta = agg - state.w.flat()
    state.m = policy.gamma_s * state.m + (1.0 - policy.gamma_s) * delta
    if (state.t + 1) % policy.round_b != 0:
        return w_agg, False
    state.n_corrections += 1
    corrected = agg - eta * state.m
    return ModelParams.from_flat(corrected, w_agg.n_classes, w_agg.n_features), True


def _train_client(state, shard, train_cfg, participation_count):
    cfg = replace(train_cfg, shuffle_seed=derive_seed(train_cfg.shuffle_seed, state.t, shard.device_id))
    params, loss = local_train(state.w, shard.X_train, shard.y_train, cfg)
    return ClientReport(
        client_id=shard.device_id,
        params=params,
        train_acc=accuracy(params, shard.X_train, shard.y_train),
        participation_count=participation_count,
        n_samples=shard.n_train,
        train_loss=loss,
    )


def aggregate_round(reports, policy):
    """Pick the weighting rule for ``policy`` and aggregate. Returns ``(params, weights)``."""
    reports = _by_client_id(reports)
    if policy.weighting_enabled:
        weights = info_weights(reports, policy)
    else:
        weights = sample_size_weights(reports)
    return aggregate_weighted(reports, weights), weights


def run_round(state, dataset, policy, train_cfg, clients_per_round=10, probs=None):
    """One communication round. Mutates and returns ``state`` with a :class:`RoundRecord`."""
    selected = select_clients(state, clients_per_round, probs)
    reports = []
    for cid in selected:
        count = int(state.counters[cid]) + 1
        try:
            reports.append(_train_client(state, dataset.shards[cid], train_cfg, count))
        except Exception as exc:
            raise ClientError(int(cid), exc) from exc
    state.counters[selected] += 1

    w_new, weights = aggregate_round(reports, policy)
    corrected = False
    if policy.server_momentum_enabled:
        eta_s = train_cfg.lr if policy.eta_s is None else policy.eta_s
        w_new, corrected = server_momentum_step(state, w_new, policy, eta_s)

    record = RoundRecord(
        round=state.t,
        client_train_loss=float(np.mean([r.train_loss for r in reports])),
        selected=[int(c) for c in selected],
        client_train_acc=[r.train_acc for r in reports],
        weights=[float(w) for w in weights] if policy.weighting_enabled else None,
        corrected=corrected,
    )
    state.w = w_new
    state.t += 1
    return state, record


def evaluate(params, dataset):
    """Global train loss, pooled test accuracy and per-device test accuracies.

    Devices without test examples get ``nan`` accuracy and are left out of
    the pooled figure.
    """
    n_train = dataset.train_sizes
    losses = np.array([mean_loss(params, s.X_train, s.y_train) for s in dataset.shards])
    n_test = np.array([s.n_test for s in dataset.shards], dtype=np.float64)
    device_acc = np.array([
        accuracy(params, s.X_test, s.y_test) if s.n_test else np.nan for s in dataset.shards
    ])
    train_loss = float(np.dot(losses, n_train) / n_train.sum())
    has_test = n_test > 0
    test_acc = float(np.dot(device_acc[has_test], n_test[has_test]) / n_test.sum())
    return train_loss, test_acc, device_acc


@dataclass
class ExperimentResult:
    history: list
    final_device_acc: np.ndarray
    state: ServerState
    trajectory: list = field(default_factory=list)


def run_experiment(dataset, policy, train_cfg, rounds, eval_every=1, clients_per_round=10,
                   probs=None, seed=0, record_trajectory=False):
    """Run ``rounds`` rounds from zero-initialized parameters.

    The global model is evaluated on every device every ``eval_every`` rounds
    and after the last round. ``record_trajectory`` keeps a copy of the flat
    global parameters after each round.
    """
    rounds = check_int(rounds, "rounds", min_value=1)
    eval_every = check_int(eval_every, "eval_every", min_value=1)
    state = ServerState.initial(dataset.n_devices, dataset.n_classes, dataset.n_features,
                                seed=derive_seed(seed, "selection"))
    train_cfg = replace(train_cfg, shuffle_seed=derive_seed(seed, "shuffle"))
    history, trajectory = [], []
    device_acc = None
    for _ in range(rounds):
        state, record = run_round(state, dataset, policy, train_cfg, clients_per_round, probs)
        if record_trajectory:
            trajectory.append(state.w.flat())
        if state.t % eval_every == 0 or state.t == rounds:
            record.global_train_loss, record.global_test_acc, device_acc = evaluate(state.w, dataset)
            logger.debug("round %d loss %.4f acc %.4f", record.round,
                         record.global_train_loss, record.global_test_acc)
        history.append(record)
    return ExperimentResult(history, device_acc, state, trajectory)
