"""Deterministic simulator for FedAvg, FedProx and FedFa federated optimization."""

from .data import (
    SYNTHETIC_PRESETS,
    DeviceShard,
    FederatedDataset,
    SyntheticConfig,
    generate_synthetic,
    load_csv_dataset,
    partition_by_group,
    power_law_sizes,
    split_train_test,
)
from .estimators import FederatedClassifier, make_federated_synthetic, make_preset
from .federation import (
    AggregationPolicy,
    ClientReport,
    ServerState,
    aggregate_sample_size,
    info_weights,
    run_experiment,
    run_round,
    select_clients,
    server_momentum_step,
)
from .metrics import AccuracyStats, RoundRecord, accuracy_stats, emit_history
from .model import ModelParams, accuracy, loss_and_grad, predict_proba
from .optim import LocalTrainConfig, local_train

__version__ = "0.1.0"

__all__ = [
    "SYNTHETIC_PRESETS",
    "AccuracyStats",
    "AggregationPolicy",
    "ClientReport",
    "DeviceShard",
    "FederatedClassifier",
    "FederatedDataset",
    "LocalTrainConfig",
    "ModelParams",
    "RoundRecord",
    "ServerState",
    "SyntheticConfig",
    "accuracy",
    "accuracy_stats",
    "aggregate_sample_size",
    "emit_history",
    "generate_synthetic",
    "info_weights",
    "load_csv_dataset",
    "local_train",
    "loss_and_grad",
    "make_federated_synthetic",
    "make_preset",
    "partition_by_group",
    "power_law_sizes",
    "predict_proba",
    "run_experiment",
    "run_round",
    "select_clients",
    "server_momentum_step",
    "split_train_test",
]
