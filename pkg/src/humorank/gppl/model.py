"""Sparse variational GP preference learning.

The latent utility function has a zero-mean GP prior. It is summarised by
utilities ``u`` at M inducing inputs ``Z`` with a Gaussian posterior
approximation ``q(u) = N(m, S)``. Each pair contributes the expected log
likelihood of the utility difference under ``q``; ``q`` is updated with
natural-gradient steps on minibatches of pairs using a Robbins-Monro step
size. A step is halved until the minibatch objective does not decrease, so
full-batch fitting produces a monotone ELBO trace.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from sklearn.cluster import KMeans

from ..pairgen import PreferencePair
from .kernels import KernelParams, NumericalError, jittered_cholesky, kernel_matrix, kernel_rows
from .likelihoods import LIKELIHOODS, GaussHermite

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
MIN_VARIANCE = 1e-10
_WINDOW = 10


@dataclass(frozen=True)
class SviConfig:
    batch_size: int = 200
    num_inducing: int = 500
    max_iterations: int = 2000
    convergence_tol: float = 1e-5
    learning_delay: float = 1.0
    forgetting_rate: float = 0.9
    seed: int = 0
    max_halvings: int = 20

    def __post_init__(self):
        if self.batch_size < 1 or self.num_inducing < 1 or self.max_iterations < 1:
            raise ValueError("batch_size, num_inducing and max_iterations must be >= 1")
        if self.convergence_tol <= 0 or self.learning_delay <= 0:
            raise ValueError("convergence_tol and learning_delay must be positive")
        if not 0.5 < self.forgetting_rate <= 1.0:
            raise ValueError("forgetting_rate must lie in (0.5, 1]")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def step_size(self, t: int) -> float:
        return (t + self.learning_delay) ** (-self.forgetting_rate)


@dataclass(frozen=True)
class UtilityPosterior:
    mean: np.ndarray
    variance: np.ndarray


@dataclass
class GpplModel:
    kernel: KernelParams
    inducing_inputs: np.ndarray
    variational_mean: np.ndarray
    variational_cov: np.ndarray
    likelihood: str = "thurstone_mosteller"
    feature_standardization: dict | None = None
    training_metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.inducing_inputs = np.atleast_2d(np.asarray(self.inducing_inputs, dtype=float))
        self.variational_mean = np.asarray(self.variational_mean, dtype=float)
        self.variational_cov = np.asarray(self.variational_cov, dtype=float)
        M, D = self.inducing_inputs.shape
        if D != self.kernel.dim:
            raise ValueError("inducing inputs and kernel lengthscales disagree on dimension")
        if self.variational_mean.shape != (M,) or self.variational_cov.shape != (M, M):
            raise ValueError("variational parameters do not match the number of inducing inputs")
        if self.likelihood not in LIKELIHOODS:
            raise ValueError(f"unknown likelihood {self.likelihood!r}")
        self._chol_zz = jittered_cholesky(
            kernel_matrix(self.inducing_inputs, self.inducing_inputs, self.kernel), _jitter(self.kernel)
        )

    @property
    def num_inducing(self) -> int:
        return self.inducing_inputs.shape[0]

    @property
    def dim(self) -> int:
        return self.inducing_inputs.shape[1]

    def projection(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(K_xZ K_ZZ^-1, K_xZ) for the rows of ``X``."""
        Kxz = kernel_matrix(X, self.inducing_inputs, self.kernel)
        return cho_solve((self._chol_zz, True), Kxz.T).T, Kxz

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "kind": "gppl_model",
            "kernel": self.kernel.to_dict(),
            "likelihood": self.likelihood,
            "inducing_inputs": self.inducing_inputs.tolist(),
            "variational_mean": self.variational_mean.tolist(),
            "variational_cov": self.variational_cov.tolist(),
            "feature_standardization": self.feature_standardization,
            "training_metadata": self.training_metadata,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "GpplModel":
        if d.get("kind") != "gppl_model":
            raise ValueError("not a serialized GPPL model")
        if d.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"model format version {d.get('format_version')} is not supported (expected {FORMAT_VERSION})")
        return cls(
            kernel=KernelParams.from_dict(d["kernel"]),
            inducing_inputs=np.asarray(d["inducing_inputs"], dtype=float),
            variational_mean=np.asarray(d["variational_mean"], dtype=float),
            variational_cov=np.asarray(d["variational_cov"], dtype=float),
            likelihood=d["likelihood"],
            feature_standardization=d.get("feature_standardization"),
            training_metadata=d.get("training_metadata", {}),
        )

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "GpplModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _jitter(kernel: KernelParams) -> float:
    return 1e-6 * kernel.output_scale


def predict(model: GpplModel, features: np.ndarray) -> UtilityPosterior:
    X = np.atleast_2d(np.asarray(features, dtype=float))
    if X.shape[0] == 0:
        return UtilityPosterior(np.zeros(0), np.zeros(0))
    if X.shape[1] != model.dim:
        raise ValueError(f"features have {X.shape[1]} columns, the model expects {model.dim}")
    B, Kxz = model.projection(X)
    mean = B @ model.variational_mean
    prior_var = np.full(X.shape[0], model.kernel.output_scale)
    var = prior_var - np.sum(B * Kxz, axis=1) + np.sum((B @ model.variational_cov) * B, axis=1)
    return UtilityPosterior(mean, np.maximum(var, MIN_VARIANCE))


class _PairData:
    """Per-pair projection rows and conditional variances, built once per fit."""

    def __init__(self, model: GpplModel, X: np.ndarray, worse: np.ndarray, better: np.ndarray):
        self.B, Kxz = model.projection(X)
        self.worse, self.better = worse, better
        qdiag = np.sum(self.B * Kxz, axis=1)
        q_cross = np.sum(self.B[better] * Kxz[worse], axis=1)
        k_cross = kernel_rows(X[better], X[worse], model.kernel)
        kdiag = model.kernel.output_scale
        cond = 2 * kdiag - 2 * k_cross - (qdiag[better] + qdiag[worse] - 2 * q_cross)
        self.cond_var = np.maximum(cond, 0.0)

    def __len__(self) -> int:
        return len(self.worse)

    def rows(self, idx) -> tuple[np.ndarray, np.ndarray]:
        return self.B[self.better[idx]] - self.B[self.worse[idx]], self.cond_var[idx]


def _index_pairs(pairs: Sequence[PreferencePair], features: Mapping[str, np.ndarray]):
    if not pairs:
        raise ValueError("at least one preference pair is required")
    missing = sorted({i for p in pairs for i in p if i not in features})
    if missing:
        raise KeyError(f"no feature vector for ids: {missing[:10]}{' ...' if len(missing) > 10 else ''}")
    order: dict[str, int] = {}
    for p in pairs:
        for i in (p.worse_id, p.better_id):
            order.setdefault(i, len(order))
    X = np.vstack([np.asarray(features[i], dtype=float) for i in order])
    worse = np.array([order[p.worse_id] for p in pairs])
    better = np.array([order[p.better_id] for p in pairs])
    return list(order), X, worse, better


def select_inducing(X: np.ndarray, num_inducing: int, seed: int) -> np.ndarray:
    """k-means++ initialised k-means centres, or the distinct inputs when there are few."""
    uniq, first = np.unique(X, axis=0, return_index=True)
    if num_inducing >= uniq.shape[0]:
        return X[np.sort(first)]
    state = int(np.random.SeedSequence(seed).generate_state(1)[0])
    km = KMeans(n_clusters=num_inducing, init="k-means++", n_init=1, random_state=state)
    km.fit(X)
    return km.cluster_centers_


def _kl(m: np.ndarray, S: np.ndarray, L_zz: np.ndarray, L_s: np.ndarray) -> float:
    """KL(N(m, S) || N(0, K)) with K = L_zz L_zz^T and S = L_s L_s^T."""
    M = m.shape[0]
    A = solve_triangular(L_zz, L_s, lower=True)
    alpha = solve_triangular(L_zz, m, lower=True)
    logdet_k = 2 * np.sum(np.log(np.diag(L_zz)))
    logdet_s = 2 * np.sum(np.log(np.diag(L_s)))
    return 0.5 * (np.sum(A**2) + alpha @ alpha - M + logdet_k - logdet_s)


def _difference_moments(rows: np.ndarray, cond: np.ndarray, m: np.ndarray, S: np.ndarray):
    mu = rows @ m
    var = np.sum((rows @ S) * rows, axis=1) + cond
    return mu, var


class _Objective:
    def __init__(self, model: GpplModel, data: _PairData):
        self.model = model
        self.data = data
        self.quad = GaussHermite(model.likelihood)
        self.L_zz = model._chol_zz
        self.K_inv = cho_solve((self.L_zz, True), np.eye(model.num_inducing))
        self.K_inv = 0.5 * (self.K_inv + self.K_inv.T)

    def value(self, m, S, L_s, idx=None, scale=1.0) -> float:
        rows, cond = self.data.rows(slice(None) if idx is None else idx)
        mu, var = _difference_moments(rows, cond, m, S)
        return scale * float(np.sum(self.quad.expected(mu, var))) - _kl(m, S, self.L_zz, L_s)

    def likelihood_grads(self, m, S, idx=None, scale=1.0):
        """Gradients of the (scaled) expected log likelihood w.r.t. m and S."""
        rows, cond = self.data.rows(slice(None) if idx is None else idx)
        mu, var = _difference_moments(rows, cond, m, S)
        _, d_mu, d_var = self.quad.expected_with_grads(mu, var)
        g_m = scale * (rows.T @ d_mu)
        G_S = scale * ((rows * d_var[:, None]).T @ rows)
        return g_m, 0.5 * (G_S + G_S.T)


def _from_natural(theta1: np.ndarray, prec: np.ndarray):
    L_prec = jittered_cholesky(prec, 0.0)
    S = cho_solve((L_prec, True), np.eye(prec.shape[0]))
    S = 0.5 * (S + S.T)
    m = S @ theta1
    return m, S, jittered_cholesky(S, 0.0)


def elbo(model: GpplModel, pairs: Sequence[PreferencePair], features: Mapping[str, np.ndarray]) -> float:
    """Expected log pair likelihood under q(u) minus KL(q(u) || p(u))."""
    _, X, worse, better = _index_pairs(pairs, features)
    obj = _Objective(model, _PairData(model, X, worse, better))
    S = model.variational_cov
    return obj.value(model.variational_mean, S, jittered_cholesky(S, 0.0))


def elbo_grad_mean(model: GpplModel, pairs: Sequence[PreferencePair], features: Mapping[str, np.ndarray]) -> np.ndarray:
    """Gradient of :func:`elbo` with respect to the variational mean."""
    _, X, worse, better = _index_pairs(pairs, features)
    obj = _Objective(model, _PairData(model, X, worse, better))
    g_m, _ = obj.likelihood_grads(model.variational_mean, model.variational_cov)
    return g_m - obj.K_inv @ model.variational_mean


def fit_svi(
    pairs: Sequence[PreferencePair],
    features: Mapping[str, np.ndarray],
    config: SviConfig = SviConfig(),
    kernel: KernelParams | None = None,
    likelihood: str = "thurstone_mosteller",
    inducing_inputs: np.ndarray | None = None,
) -> GpplModel:
    """Fit q(u) to the preference pairs.

    ``kernel`` defaults to a Matern-3/2 with median-heuristic lengthscales.
    ``inducing_inputs`` overrides the k-means selection.
    """
    from .kernels import median_lengthscales

    _, X, worse, better = _index_pairs(pairs, features)
    if kernel is None:
        kernel = KernelParams(median_lengthscales(X, seed=config.seed))
    if X.shape[1] != kernel.dim:
        raise ValueError(f"features have {X.shape[1]} columns, kernel has {kernel.dim} lengthscales")
    Z = select_inducing(X, config.num_inducing, config.seed) if inducing_inputs is None else inducing_inputs
    M = Z.shape[0]
    model = GpplModel(kernel, Z, np.zeros(M), kernel_matrix(Z, Z, kernel), likelihood)
    data = _PairData(model, X, worse, better)
    obj = _Objective(model, data)

    n_pairs = len(data)
    full_batch = config.batch_size >= n_pairs
    scale = 1.0 if full_batch else n_pairs / config.batch_size
    rng = np.random.Generator(np.random.PCG64(config.seed))

    m = np.zeros(M)
    L_s = model._chol_zz.copy()
    S = L_s @ L_s.T
    prec = obj.K_inv.copy()
    theta1 = np.zeros(M)

    trace: list[float] = []
    converged = False
    it = 0
    for it in range(1, config.max_iterations + 1):
        idx = None if full_batch else rng.integers(0, n_pairs, size=config.batch_size)
        current = obj.value(m, S, L_s, idx, scale)
        g_m, G_S = obj.likelihood_grads(m, S, idx, scale)
        target_prec = obj.K_inv - 2.0 * G_S
        target_theta1 = g_m - 2.0 * G_S @ m
        rho = config.step_size(it - 1)
        accepted = current
        for _ in range(config.max_halvings):
            new_prec = (1 - rho) * prec + rho * target_prec
            new_theta1 = (1 - rho) * theta1 + rho * target_theta1
            try:
                m_new, S_new, L_new = _from_natural(new_theta1, 0.5 * (new_prec + new_prec.T))
            except NumericalError:
                rho *= 0.5
                continue
            value = obj.value(m_new, S_new, L_new, idx, scale)
            if np.isfinite(value) and value >= current:
                m, S, L_s, prec, theta1 = m_new, S_new, L_new, new_prec, new_theta1
                accepted = value
                break
            rho *= 0.5
        if not np.isfinite(accepted):
            raise NumericalError(f"ELBO became non-finite at iteration {it}")
        trace.append(accepted)
        if len(trace) >= 2 * _WINDOW:
            recent = np.mean(trace[-_WINDOW:])
            before = np.mean(trace[-2 * _WINDOW:-_WINDOW])
            if abs(recent - before) < config.convergence_tol * max(1.0, abs(recent)):
                converged = True
                break

    final = obj.value(m, S, L_s)
    logger.info("fit_svi: %d iterations, converged=%s, ELBO=%.6g", it, converged, final)
    model.variational_mean = m
    model.variational_cov = S
    model.training_metadata = {
        "iterations": it,
        "converged": converged,
        "final_elbo": final,
        "seed": config.seed,
        "num_pairs": n_pairs,
        "batch_size": min(config.batch_size, n_pairs),
        "elbo_trace": trace,
    }
    return model
