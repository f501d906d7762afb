"""Variational MLP classifier trained by reparameterized gradient ascent.

Every weight carries a mean-field Gaussian posterior (mu, log_std); a
forward pass samples weights as w = mu + exp(log_std) * eps. The network has
no biases: tanh hidden layers feed a sigmoid output layer whose activations
are normalized to probabilities. Training maximizes

    ELBO = sum_batch E_q[log p(label)] - KL(q || N(0, prior_std^2))

with an analytic KL and hand-written float64 backprop, optimized by Adam.
When a minibatch is used the KL is scaled by batch/N so the full-batch
objective is recovered in expectation.
"""

from __future__ import annotations

import json

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.metrics import balanced_accuracy_score
from sklearn.utils.validation import check_X_y, check_array

from .exceptions import NonFiniteGradient, UntrainedModel

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def layer_shapes(n_in: int, hidden_layers: int, hidden_width: int, n_out: int) -> list[tuple[int, int]]:
    sizes = [n_in] + [hidden_width] * hidden_layers + [n_out]
    return [(sizes[i], sizes[i + 1]) for i in range(len(sizes) - 1)]


def forward(weights: list[np.ndarray], X: np.ndarray) -> np.ndarray:
    """Class probabilities for one concrete weight draw."""
    h = X
    for W in weights[:-1]:
        h = np.tanh(h @ W)
    y = expit(h @ weights[-1])
    return y / y.sum(axis=1, keepdims=True)


def _forward_backward(weights, X, y_idx):
    """Sum of log-probabilities of the true labels, and its weight gradients."""
    acts = [X]
    h = X
    for W in weights[:-1]:
        h = np.tanh(h @ W)
        acts.append(h)
    y = expit(acts[-1] @ weights[-1])
    total = y.sum(axis=1, keepdims=True)
    n = X.shape[0]
    rows = np.arange(n)
    log_p = np.log(y[rows, y_idx]) - np.log(total[:, 0])

    # d log p_k / dz_j = 1[j=k](1 - y_k) - y_j(1 - y_j)/S
    dz = -(y * (1.0 - y)) / total
    dz[rows, y_idx] += 1.0 - y[rows, y_idx]

    grads = [np.empty(0)] * len(weights)
    grads[-1] = acts[-1].T @ dz
    delta = dz @ weights[-1].T
    for li in range(len(weights) - 2, -1, -1):
        delta = delta * (1.0 - acts[li + 1] ** 2)
        grads[li] = acts[li].T @ delta
        if li > 0:
            delta = delta @ weights[li].T
    return float(log_p.sum()), grads


def kl_to_prior(mus, log_stds, prior_std: float) -> float:
    """KL(q || N(0, prior_std^2)) summed over every weight."""
    total = 0.0
    s2 = prior_std**2
    for mu, ls in zip(mus, log_stds):
        sig2 = np.exp(2.0 * ls)
        total += float(
            np.sum(np.log(prior_std) - ls + (sig2 + mu**2) / (2.0 * s2) - 0.5)
        )
    return total


def elbo_and_grads(mus, log_stds, eps_draws, X, y_idx, prior_std, kl_scale=1.0):
    """ELBO estimate and gradients w.r.t. every mu and log_std.

    eps_draws is a list of mc draws, each one eps array per layer; the data
    term and its gradients are averaged over draws. Pure and deterministic,
    so finite differences can be checked against it directly.
    """
    g_mu = [np.zeros_like(m) for m in mus]
    g_ls = [np.zeros_like(m) for m in mus]
    data_term = 0.0
    n_mc = len(eps_draws)
    for eps in eps_draws:
        weights = [m + np.exp(ls) * e for m, ls, e in zip(mus, log_stds, eps)]
        log_p, wgrads = _forward_backward(weights, X, y_idx)
        data_term += log_p / n_mc
        for li, g in enumerate(wgrads):
            g_mu[li] += g / n_mc
            g_ls[li] += g * eps[li] * np.exp(log_stds[li]) / n_mc

    s2 = prior_std**2
    elbo = data_term - kl_scale * kl_to_prior(mus, log_stds, prior_std)
    for li in range(len(mus)):
        g_mu[li] -= kl_scale * mus[li] / s2
        g_ls[li] -= kl_scale * (np.exp(2.0 * log_stds[li]) / s2 - 1.0)
    return elbo, g_mu, g_ls


class _NonFiniteStep(Exception):
    pass


class VariationalMLPClassifier(BaseEstimator, ClassifierMixin):
    """Bayesian-by-backprop MLP with an sklearn estimator surface.

    predict_proba averages the categorical outputs of n_posterior_samples
    weight draws; snapshots during training keep the parameters that score
    best on a held-out slice, measured by balanced accuracy. With n_init > 1
    the whole optimization is repeated from independent initializations and
    the run with the best held-out score is kept (reparameterization noise
    occasionally strands a single run on a plateau).
    """

    def __init__(
        self,
        hidden_layers=1,
        hidden_width=25,
        epochs=30000,
        batch_size=None,
        learning_rate=0.01,
        prior_std=1.0,
        init_std=0.1,
        mc_samples=1,
        n_init=1,
        callback_every=2000,
        validation_fraction=0.1,
        n_posterior_samples=100,
        max_restarts=3,
        random_state=None,
    ):
        self.hidden_layers = hidden_layers
        self.hidden_width = hidden_width
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.prior_std = prior_std
        self.init_std = init_std
        self.mc_samples = mc_samples
        self.n_init = n_init
        self.callback_every = callback_every
        self.validation_fraction = validation_fraction
        self.n_posterior_samples = n_posterior_samples
        self.max_restarts = max_restarts
        self.random_state = random_state

    # ------------------------------------------------------------------ fit

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        self.n_features_in_ = X.shape[1]

        budget = self.max_restarts + 1
        ss = np.random.SeedSequence(self.random_state)
        children = ss.spawn(self.n_init * budget + 1)
        self._predict_seed = children[-1]

        best_run = None
        for init in range(self.n_init):
            last_err = None
            for attempt in range(budget):
                rng = np.random.default_rng(children[init * budget + attempt])
                try:
                    self._train(X, y_idx, rng)
                    last_err = None
                    break
                except _NonFiniteStep as err:
                    last_err = err
            if last_err is not None:
                raise NonFiniteGradient(
                    f"gradients were non-finite in {budget} attempts: {last_err}"
                )
            run = (
                self.heldout_score_,
                self.mu_,
                self.log_std_,
                self.best_epoch_,
                self.history_,
            )
            if best_run is None or run[0] > best_run[0]:
                best_run = run
        (
            self.heldout_score_,
            self.mu_,
            self.log_std_,
            self.best_epoch_,
            self.history_,
        ) = best_run
        return self

    def _train(self, X, y_idx, rng):
        n = X.shape[0]
        n_val = int(round(self.validation_fraction * n))
        order = rng.permutation(n)
        val_idx, tr_idx = order[:n_val], order[n_val:]
        if len(tr_idx) == 0 or len(val_idx) == 0:
            tr_idx = val_idx = np.arange(n)
        X_tr, y_tr = X[tr_idx], y_idx[tr_idx]
        X_val, y_val = X[val_idx], y_idx[val_idx]

        shapes = layer_shapes(
            X.shape[1], self.hidden_layers, self.hidden_width, len(self.classes_)
        )
        # posterior means start spread at init_std rather than exactly zero: a
        # zero start leaves the mean network identically uniform, and with no
        # biases the only symmetry breaking is posterior sampling noise, which
        # occasionally strands a class output in a merged basin
        mus = [rng.normal(0.0, self.init_std, s) for s in shapes]
        log_stds = [np.full(s, np.log(self.init_std)) for s in shapes]

        batch = len(X_tr) if not self.batch_size else min(self.batch_size, len(X_tr))
        kl_scale = batch / len(X_tr)

        m_state = [np.zeros(s) for s in shapes + shapes]
        v_state = [np.zeros(s) for s in shapes + shapes]
        best = (-np.inf, None, None, 0)
        history = []

        for epoch in range(1, self.epochs + 1):
            idx = (
                np.arange(len(X_tr))
                if batch == len(X_tr)
                else rng.integers(0, len(X_tr), size=batch)
            )
            eps_draws = [
                [rng.standard_normal(s) for s in shapes] for _ in range(self.mc_samples)
            ]
            with np.errstate(all="ignore"):  # the finiteness guard below handles these
                elbo, g_mu, g_ls = elbo_and_grads(
                    mus, log_stds, eps_draws, X_tr[idx], y_tr[idx], self.prior_std, kl_scale
                )
            grads = g_mu + g_ls
            if not all(np.all(np.isfinite(g)) for g in grads):
                raise _NonFiniteStep(f"epoch {epoch}")

            params = mus + log_stds
            bc1 = 1.0 - ADAM_BETA1**epoch
            bc2 = 1.0 - ADAM_BETA2**epoch
            for pi, (p, g) in enumerate(zip(params, grads)):
                m_state[pi] = ADAM_BETA1 * m_state[pi] + (1 - ADAM_BETA1) * g
                v_state[pi] = ADAM_BETA2 * v_state[pi] + (1 - ADAM_BETA2) * g**2
                p += (
                    self.learning_rate
                    * (m_state[pi] / bc1)
                    / (np.sqrt(v_state[pi] / bc2) + ADAM_EPS)
                )

            if epoch % self.callback_every == 0 or epoch == self.epochs:
                score = balanced_accuracy_score(y_val, forward(mus, X_val).argmax(axis=1))
                history.append(
                    {
                        "epoch": epoch,
                        "elbo": float(elbo),
                        "heldout_balanced_accuracy": float(score),
                    }
                )
                if score >= best[0]:
                    best = (
                        score,
                        [m.copy() for m in mus],
                        [s.copy() for s in log_stds],
                        epoch,
                    )

        self.mu_ = best[1] if best[1] is not None else mus
        self.log_std_ = best[2] if best[2] is not None else log_stds
        self.heldout_score_ = float(best[0])
        self.best_epoch_ = int(best[3])
        self.history_ = history

    # ------------------------------------------------------------- predict

    def _check_fitted(self):
        if not hasattr(self, "mu_"):
            raise UntrainedModel("this classifier has not been fitted")

    def predict_proba(self, X):
        self._check_fitted()
        X = check_array(X, dtype=np.float64)
        rng = np.random.default_rng(self._predict_seed)
        out = np.zeros((X.shape[0], len(self.classes_)))
        for _ in range(self.n_posterior_samples):
            weights = [
                m + np.exp(ls) * rng.standard_normal(m.shape)
                for m, ls in zip(self.mu_, self.log_std_)
            ]
            out += forward(weights, X)
        return out / self.n_posterior_samples

    def predict(self, X):
        proba = self.predict_proba(X)
        return self.classes_[proba.argmax(axis=1)]

    def predict_mean(self, X):
        """Argmax prediction through the posterior-mean weights only."""
        self._check_fitted()
        X = check_array(X, dtype=np.float64)
        return self.classes_[forward(self.mu_, X).argmax(axis=1)]

    # -------------------------------------------------------- serialization

    def to_json(self) -> dict:
        self._check_fitted()
        config = self.get_params()
        config["classes"] = [int(c) for c in self.classes_]
        config["n_features"] = int(self.n_features_in_)
        return {
            "config": config,
            "prior_std": self.prior_std,
            "layers": [
                {
                    "mu": m.tolist(),
                    "log_std": s.tolist(),
                    "shape": list(m.shape),
                }
                for m, s in zip(self.mu_, self.log_std_)
            ],
        }

    @classmethod
    def from_json(cls, d: dict) -> "VariationalMLPClassifier":
        config = dict(d["config"])
        classes = config.pop("classes")
        n_features = config.pop("n_features")
        est = cls(**config)
        est.classes_ = np.asarray(classes)
        est.n_features_in_ = n_features
        est.mu_ = [np.asarray(layer["mu"], dtype=float) for layer in d["layers"]]
        est.log_std_ = [np.asarray(layer["log_std"], dtype=float) for layer in d["layers"]]
        for layer, m in zip(d["layers"], est.mu_):
            if list(m.shape) != layer["shape"]:
                raise ValueError(f"checkpoint layer shape mismatch: {layer['shape']}")
        ss = np.random.SeedSequence(est.random_state)
        est._predict_seed = ss.spawn(est.n_init * (est.max_restarts + 1) + 1)[-1]
        est.history_ = []
        return est

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)

    @classmethod
    def load(cls, path) -> "VariationalMLPClassifier":
        with open(path) as fh:
            return cls.from_json(json.load(fh))
