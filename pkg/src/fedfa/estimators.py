"""scikit-learn compatible front end.

:class:`FederatedClassifier` trains a softmax regression with FedAvg, FedProx
or FedFa over data that is partitioned by a ``groups`` array (one group per
device) and then behaves like any fitted sklearn classifier::

    X, y, groups = make_federated_synthetic(alpha=1, beta=1, random_state=0)
    clf = FederatedClassifier(algorithm="fedfa", rounds=50).fit(X, y, groups=groups)
    clf.score(X, y)
"""

import numbers

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.preprocessing import LabelEncoder
from sklearn.utils import check_random_state
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .config import ExperimentConfig
from .data import SYNTHETIC_PRESETS, SyntheticConfig, generate_synthetic, partition_by_group
from .federation import run_experiment
from .metrics import accuracy_stats
from .model import ModelParams
from .model import predict_proba as _predict_proba


def make_federated_synthetic(alpha=1.0, beta=1.0, *, iid=False, n_devices=30, n_features=60,
                             n_classes=10, s_min=50, pareto_shape=1.5, random_state=0):
    """Draw a Synthetic(alpha, beta) population as flat arrays.

    Returns ``(X, y, groups)`` where ``groups[i]`` is the device of row ``i``.
    Rows of each device appear train split first, then test split.
    """
    cfg = SyntheticConfig(alpha=alpha, beta=beta, iid=iid, n_devices=n_devices,
                          n_features=n_features, n_classes=n_classes,
                          seed=_seed_from(random_state), s_min=s_min,
                          pareto_shape=pareto_shape)
    ds = generate_synthetic(cfg)
    X = np.concatenate([np.vstack([s.X_train, s.X_test]) for s in ds.shards])
    y = np.concatenate([np.concatenate([s.y_train, s.y_test]) for s in ds.shards])
    groups = np.concatenate([np.full(s.n_train + s.n_test, s.device_id) for s in ds.shards])
    return X, y, groups


def make_preset(name, random_state=0, **kw):
    """:func:`make_federated_synthetic` for one of the named presets."""
    return make_federated_synthetic(**SYNTHETIC_PRESETS[name], random_state=random_state, **kw)


def _seed_from(random_state):
    if isinstance(random_state, numbers.Integral) and not isinstance(random_state, bool):
        return int(random_state)
    return int(check_random_state(random_state).randint(np.iinfo(np.int32).max))


class FederatedClassifier(ClassifierMixin, BaseEstimator):
    """Multinomial logistic regression trained by simulated federated optimization.

    Parameters
    ----------
    algorithm : {"fedavg", "fedprox", "fedfa"}, default="fedfa"
    rounds : int, default=200
        Communication rounds.
    clients_per_round : int, default=10
    epochs : int, default=20
        Local epochs per round.
    batch_size : int, default=10
    lr : float, default=None
        Client learning rate; ``None`` picks 1e-4 for fedfa and 0.01 otherwise.
    gamma_c : float, default=None
        Client momentum; ``None`` picks 0.5 for fedfa and 0 otherwise.
    gamma_s, eta_s, round_b : server momentum factor, step (``None`` = lr)
        and gating period.
    alpha, beta : float, default=0.5
        Blend of accuracy and participation information; must sum to 1.
    prox_mu : float, default=None
        Proximal coefficient; ``None`` picks 1.0 for fedprox.
    c_eps : float, default=1e-10
    weighting, server_momentum : bool, default=True
        FedFa components; ignored by the baselines.
    test_size : float, default=0.2
        Fraction of every device held out for ``device_test_accuracy_``.
    eval_every : int, default=10
    random_state : int, RandomState or None, default=None

    Attributes
    ----------
    coef_ : ndarray of shape (n_classes, n_features)
    intercept_ : ndarray of shape (n_classes,)
    classes_ : ndarray
    history_ : list of RoundRecord
    device_test_accuracy_ : ndarray of shape (n_devices,)
    fairness_ : AccuracyStats
    """

    def __init__(self, algorithm="fedfa", rounds=200, clients_per_round=10, epochs=20,
                 batch_size=10, lr=None, gamma_c=None, gamma_s=0.5, eta_s=None, round_b=3,
                 alpha=0.5, beta=0.5, prox_mu=None, c_eps=1e-10, weighting=True,
                 server_momentum=True, test_size=0.2, eval_every=10, random_state=None):
        self.algorithm = algorithm
        self.rounds = rounds
        self.clients_per_round = clients_per_round
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.gamma_c = gamma_c
        self.gamma_s = gamma_s
        self.eta_s = eta_s
        self.round_b = round_b
        self.alpha = alpha
        self.beta = beta
        self.prox_mu = prox_mu
        self.c_eps = c_eps
        self.weighting = weighting
        self.server_momentum = server_momentum
        self.test_size = test_size
        self.eval_every = eval_every
        self.random_state = random_state

    def _experiment_config(self, n_devices, seed):
        gamma_c = self.gamma_c
        if gamma_c is None:
            gamma_c = 0.5 if self.algorithm == "fedfa" else 0.0
        cfg = ExperimentConfig(
            n_devices=n_devices,
            algorithm=self.algorithm,
            rounds=self.rounds,
            clients_per_round=min(self.clients_per_round, n_devices),
            epochs=self.epochs,
            batch_size=self.batch_size,
            lr=self.lr,
            gamma_c=gamma_c,
            gamma_s=self.gamma_s,
            eta_s=self.eta_s,
            round_b=self.round_b,
            alpha=self.alpha,
            beta=self.beta,
            prox_mu=self.prox_mu,
            c_eps=self.c_eps,
            weighting=self.weighting,
            server_momentum=self.server_momentum,
            eval_every=self.eval_every,
            seed=seed,
        )
        return cfg.validate()

    def fit(self, X, y, groups=None):
        """Partition by ``groups``, split each device, and run federated training.

        Without ``groups`` every row belongs to one device.
        """
        X, y = check_X_y(X, y, dtype=np.float64)
        if groups is None:
            groups = np.zeros(len(y), dtype=np.int64)
        groups = check_array(groups, ensure_2d=False, dtype=None)
        if groups.shape != y.shape:
            raise ValueError(f"groups has shape {groups.shape}, expected {y.shape}")
        if not 0.0 < self.test_size < 1.0:
            raise ValueError(f"test_size must lie in (0, 1), got {self.test_size}")

        encoder = LabelEncoder().fit(y)
        self.classes_ = encoder.classes_
        if len(self.classes_) < 2:
            raise ValueError("FederatedClassifier needs at least two classes")
        seed = _seed_from(self.random_state)
        dataset = partition_by_group(X, encoder.transform(y), groups, len(self.classes_),
                                     ratio=1.0 - self.test_size, seed=seed)
        cfg = self._experiment_config(dataset.n_devices, seed)
        result = run_experiment(
            dataset,
            cfg.policy(self.algorithm),
            cfg.train_config(self.algorithm),
            rounds=cfg.rounds,
            eval_every=cfg.eval_every,
            clients_per_round=cfg.clients_per_round,
            seed=seed,
        )
        params = result.state.w
        self.coef_ = params.W
        self.intercept_ = params.b
        self.n_features_in_ = X.shape[1]
        self.history_ = result.history
        self.device_ids_ = np.asarray(dataset.gen_meta["device_ids"])
        self.device_test_accuracy_ = result.final_device_acc
        finite = result.final_device_acc[np.isfinite(result.final_device_acc)]
        self.fairness_ = accuracy_stats(finite) if finite.size else None
        return self

    def predict_proba(self, X):
        check_is_fitted(self)
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, but {type(self).__name__} "
                f"is expecting {self.n_features_in_} features as input"
            )
        return _predict_proba(ModelParams(self.coef_, self.intercept_), X)

    def predict(self, X):
        proba = self.predict_proba(X)
        return self.classes_[np.argmax(proba, axis=1)]
