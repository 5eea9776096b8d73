"""``fedfa-sim``: reproducible experiment runner.

Subcommands::

    fedfa-sim run      --algorithm fedfa --dataset synthetic_1_1 --seed 42
    fedfa-sim compare  --dataset synthetic_1_1 --seed 42
    fedfa-sim gen-data --dataset synthetic_0.5_0.5 --output data/s55

Values come from built-in defaults, then an optional ``--config`` JSON file
(keys are the flag names with underscores), then explicit flags. The seed
falls back to ``$FEDFA_SEED`` when neither file nor flag sets it.
"""

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from ._validation import derive_seed
from .config import ConfigError, ExperimentConfig
from .data import SYNTHETIC_PRESETS, SyntheticConfig, generate_synthetic, load_csv_dataset, write_csv_dataset
from .exceptions import ClientError, DataError, NonFiniteError
from .federation import ALGORITHMS, run_experiment
from .metrics import accuracy_stats, emit_comparison, emit_history

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

FIELD_NAMES = [f.name for f in dataclasses.fields(ExperimentConfig)]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_common(p):
    S = argparse.SUPPRESS
    p.add_argument("--config", help="JSON file whose keys match the flag names")
    p.add_argument("--dataset", help=f"synthetic preset: {', '.join(SYNTHETIC_PRESETS)}")
    p.add_argument("--csv", help="CSV file with columns f0..f{d-1},label,device")
    p.add_argument("--n-features", type=int, help="feature count (synthetic default 60)")
    p.add_argument("--n-classes", type=int, help="class count (synthetic default 10)")
    p.add_argument("--device-column", default=S)
    p.add_argument("--n-devices", type=int)
    p.add_argument("--s-min", type=int, help="smallest device sample count")
    p.add_argument("--pareto-shape", type=float)
    p.add_argument("--seed", type=int, help="root seed (fallback: $FEDFA_SEED, then 0)")
    p.add_argument("--output", help="output path prefix")
    p.add_argument("-v", "--verbose", action="store_true", default=S)


def _add_training(p, with_algorithm=True):
    if with_algorithm:
        p.add_argument("--algorithm", choices=ALGORITHMS)
    p.add_argument("--rounds", type=int)
    p.add_argument("--clients-per-round", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lr", type=float, help="client learning rate (fedfa 1e-4, baselines 0.01)")
    p.add_argument("--gamma-c", type=float, help="client momentum factor")
    p.add_argument("--gamma-s", type=float, help="server momentum factor")
    p.add_argument("--eta-s", type=float, help="server step size (default: client lr)")
    p.add_argument("--round-b", type=int, help="apply server momentum every b rounds")
    p.add_argument("--alpha", type=float, help="weight on accuracy information")
    p.add_argument("--beta", type=float, help="weight on participation information")
    p.add_argument("--prox-mu", type=float, help="FedProx proximal coefficient")
    p.add_argument("--c-eps", type=float)
    p.add_argument("--weighting", action=argparse.BooleanOptionalAction)
    p.add_argument("--server-momentum", action=argparse.BooleanOptionalAction)
    p.add_argument("--eval-every", type=int)


def build_parser():
    parser = _Parser(prog="fedfa-sim", description="Federated optimization simulator",
                     argument_default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name, help_text in (("run", "run one algorithm"),
                            ("compare", "run fedavg, fedprox and fedfa on one dataset")):
        p = sub.add_parser(name, help=help_text, argument_default=argparse.SUPPRESS)
        _add_common(p)
        _add_training(p, with_algorithm=name == "run")
    p = sub.add_parser("gen-data", help="write a synthetic dataset as CSV",
                       argument_default=argparse.SUPPRESS)
    _add_common(p)
    return parser


def load_config_file(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config: {path} must hold a JSON object")
    out = {}
    for key, value in data.items():
        name = key.replace("-", "_")
        if name not in FIELD_NAMES:
            raise ConfigError(f"config: unknown key {key!r}")
        out[name] = value
    return out


def parse_config(argv):
    """Return ``(command, ExperimentConfig, verbose)``; raises :class:`ConfigError`."""
    parser = build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        raise SystemExit(EXIT_CONFIG)
    args = vars(parser.parse_args(argv))
    command = args.pop("command", None)
    if command is None:
        parser.print_usage(sys.stderr)
        raise SystemExit(EXIT_CONFIG)
    verbose = args.pop("verbose", False)
    values = load_config_file(args.pop("config")) if "config" in args else {}
    values.update({k: v for k, v in args.items() if v is not None})
    if values.get("seed") is None:
        env = os.environ.get("FEDFA_SEED")
        try:
            values["seed"] = int(env) if env is not None else 0
        except ValueError:
            raise ConfigError(f"seed: FEDFA_SEED={env!r} is not an integer") from None
    if command == "compare":
        values.pop("algorithm", None)
    try:
        cfg = ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(f"config: {exc}") from None
    return command, cfg.validate(training=command != "gen-data"), verbose


def build_dataset(cfg):
    if cfg.csv is not None:
        return load_csv_dataset(cfg.csv, cfg.n_features, cfg.n_classes, cfg.device_column,
                                seed=derive_seed(cfg.seed, "data"))
    syn = SyntheticConfig(
        n_devices=cfg.n_devices,
        n_features=60 if cfg.n_features is None else cfg.n_features,
        n_classes=10 if cfg.n_classes is None else cfg.n_classes,
        seed=derive_seed(cfg.seed, "data"),
        s_min=cfg.s_min,
        pareto_shape=cfg.pareto_shape,
        **SYNTHETIC_PRESETS[cfg.dataset_name],
    )
    return generate_synthetic(syn)


def run_algorithm(cfg, dataset, algo):
    """Run one algorithm under ``cfg``; returns ``(ExperimentResult, AccuracyStats)``."""
    if cfg.clients_per_round > dataset.n_devices:
        raise ConfigError(
            f"clients_per_round: {cfg.clients_per_round} exceeds the {dataset.n_devices} devices"
        )
    result = run_experiment(
        dataset,
        cfg.policy(algo),
        cfg.train_config(algo),
        rounds=cfg.rounds,
        eval_every=cfg.eval_every,
        clients_per_round=cfg.clients_per_round,
        seed=cfg.seed,
    )
    acc = result.final_device_acc
    return result, accuracy_stats(acc[np.isfinite(acc)])


def run(cfg):
    """Execute the ``run`` subcommand; returns the written paths."""
    dataset = build_dataset(cfg)
    result, stats = run_algorithm(cfg, dataset, cfg.algorithm)
    logger.info("%s: %s", cfg.algorithm, stats)
    return emit_history(result.history, result.final_device_acc, stats,
                        cfg.resolved(cfg.algorithm), cfg.output)


def compare(cfg):
    """Run every algorithm on one dataset and seed; returns the written paths."""
    dataset = build_dataset(cfg)
    results, paths = {}, []
    for algo in ALGORITHMS:
        result, stats = run_algorithm(cfg, dataset, algo)
        logger.info("%s: %s", algo, stats)
        results[algo] = stats
        paths += emit_history(result.history, result.final_device_acc, stats,
                              cfg.resolved(algo), f"{cfg.output}_{algo}")
    echo = cfg.to_dict()
    echo.pop("algorithm")
    paths.append(emit_comparison(results, echo, cfg.output))
    return paths


def gen_data(cfg):
    if cfg.csv is not None:
        raise ConfigError("csv: gen-data only produces synthetic datasets")
    dataset = build_dataset(cfg)
    prefix = Path(cfg.output)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    csv_path = write_csv_dataset(dataset, prefix.parent / f"{prefix.name}.csv")
    meta_path = prefix.parent / f"{prefix.name}_meta.json"
    with meta_path.open("w", encoding="utf-8") as fh:
        json.dump({"config": cfg.to_dict(), "gen_meta": dataset.gen_meta,
                   "n_features": dataset.n_features, "n_classes": dataset.n_classes},
                  fh, sort_keys=True, indent=2)
        fh.write("\n")
    return [csv_path, meta_path]


COMMANDS = {"run": run, "compare": compare, "gen-data": gen_data}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    try:
        command, cfg, verbose = parse_config(argv)
    except ConfigError as exc:
        print(f"fedfa-sim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        paths = COMMANDS[command](cfg)
    except ConfigError as exc:
        print(f"fedfa-sim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, FileNotFoundError) as exc:
        print(f"fedfa-sim: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NonFiniteError, ClientError) as exc:
        if isinstance(exc, ClientError) and not isinstance(exc.cause, NonFiniteError):
            raise
        print(f"fedfa-sim: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for path in paths:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
