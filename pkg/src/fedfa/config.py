"""Experiment configuration shared by the CLI and the estimator API.

Algorithm-dependent defaults (learning rate, client momentum, proximal
coefficient) stay ``None`` until resolved for a specific algorithm.
"""

import dataclasses
from dataclasses import dataclass

from ._validation import check_int, check_real
from .data import SYNTHETIC_PRESETS
from .exceptions import InvalidParameterError
from .federation import ALGORITHMS, AggregationPolicy
from .optim import LocalTrainConfig

FEDFA_LR = 1e-4
BASELINE_LR = 0.01
FEDPROX_MU = 1.0
# client momentum: 0.9 on the mildly heterogeneous presets, 0.5 otherwise
LOW_HETEROGENEITY = ("synthetic_iid", "synthetic_0_0")


class ConfigError(InvalidParameterError):
    pass


@dataclass
class ExperimentConfig:
    dataset: str = None
    csv: str = None
    n_features: int = None
    n_classes: int = None
    device_column: str = "device"
    n_devices: int = 30
    s_min: int = 50
    pareto_shape: float = 1.5
    algorithm: str = "fedfa"
    rounds: int = 200
    clients_per_round: int = 10
    epochs: int = 20
    batch_size: int = 10
    lr: float = None
    gamma_c: float = None
    gamma_s: float = 0.5
    eta_s: float = None
    round_b: int = 3
    alpha: float = 0.5
    beta: float = 0.5
    prox_mu: float = None
    c_eps: float = 1e-10
    weighting: bool = True
    server_momentum: bool = True
    seed: int = None
    eval_every: int = 1
    output: str = "results/run"

    def to_dict(self):
        return dataclasses.asdict(self)

    @property
    def dataset_name(self):
        return self.dataset or "synthetic_1_1"

    def validate(self, training=True):
        if self.dataset is not None and self.csv is not None:
            raise ConfigError("conflicting keys: 'dataset' and 'csv' are mutually exclusive")
        if self.csv is None and self.dataset_name not in SYNTHETIC_PRESETS:
            raise ConfigError(
                f"dataset: unknown preset {self.dataset_name!r}; "
                f"choose from {sorted(SYNTHETIC_PRESETS)} or pass --csv"
            )
        if self.csv is not None and (self.n_features is None or self.n_classes is None):
            raise ConfigError("csv: n_features and n_classes are required with --csv")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm: must be one of {ALGORITHMS}, got {self.algorithm!r}")
        for key in ("n_devices", "rounds", "clients_per_round", "epochs", "batch_size",
                    "round_b", "eval_every"):
            _keyed(check_int, getattr(self, key), key, min_value=1)
        _keyed(check_int, self.s_min, "s_min", min_value=2)
        _keyed(check_real, self.pareto_shape, "pareto_shape", low=0.0, low_inclusive=False)
        _keyed(check_int, self.seed, "seed", min_value=0)
        if not training:
            return self
        if self.clients_per_round > self.n_devices and self.csv is None:
            raise ConfigError(
                f"clients_per_round: {self.clients_per_round} exceeds n_devices={self.n_devices}"
            )
        for key in ("alpha", "beta"):
            _keyed(check_real, getattr(self, key), key, low=0.0, high=1.0)
        if self.algorithm == "fedfa" and self.weighting and abs(self.alpha + self.beta - 1) > 1e-9:
            raise ConfigError(f"alpha, beta: must sum to 1 for fedfa, got {self.alpha} + {self.beta}")
        # surfaces range errors on the remaining numeric keys
        for algo in ALGORITHMS:
            self.policy(algo)
            self.train_config(algo)
        return self

    def resolved_lr(self, algo):
        if self.lr is not None:
            return self.lr
        return FEDFA_LR if algo == "fedfa" else BASELINE_LR

    def resolved_gamma_c(self, algo):
        if algo != "fedfa":
            return 0.0 if self.gamma_c is None else self.gamma_c
        if self.gamma_c is not None:
            return self.gamma_c
        return 0.9 if self.dataset_name in LOW_HETEROGENEITY and self.csv is None else 0.5

    def resolved_prox_mu(self, algo):
        if algo != "fedprox":
            return 0.0
        return FEDPROX_MU if self.prox_mu is None else self.prox_mu

    def policy(self, algo):
        fedfa = algo == "fedfa"
        try:
            return AggregationPolicy(
                kind=algo,
                alpha=self.alpha,
                beta=self.beta,
                gamma_s=self.gamma_s,
                eta_s=self.eta_s,
                round_b=self.round_b,
                c_eps=self.c_eps,
                weighting_enabled=fedfa and self.weighting,
                server_momentum_enabled=fedfa and self.server_momentum,
            )
        except InvalidParameterError as exc:
            raise ConfigError(str(exc)) from None

    def train_config(self, algo):
        try:
            return LocalTrainConfig(
                epochs=self.epochs,
                batch_size=self.batch_size,
                lr=self.resolved_lr(algo),
                gamma_c=self.resolved_gamma_c(algo),
                prox_mu=self.resolved_prox_mu(algo),
            )
        except InvalidParameterError as exc:
            raise ConfigError(str(exc)) from None

    def resolved(self, algo):
        """The config with every algorithm-dependent default filled in."""
        d = self.to_dict()
        d.update(
            algorithm=algo,
            lr=self.resolved_lr(algo),
            gamma_c=self.resolved_gamma_c(algo),
            prox_mu=self.resolved_prox_mu(algo),
        )
        if self.csv is None:
            d["dataset"] = self.dataset_name
        return d


def _keyed(check, value, key, **kw):
    try:
        return check(value, key, **kw)
    except InvalidParameterError as exc:
        raise ConfigError(str(exc)) from None
