"""Pairwise choice likelihoods on the utility difference ``d = f_better - f_worse``."""
from __future__ import annotations

import numpy as np
from scipy.special import expit, log_expit, log_ndtr, ndtr

LIKELIHOODS = ("thurstone_mosteller", "bradley_terry")

_SQRT2 = np.sqrt(2.0)
_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


def _check(name: str) -> None:
    if name not in LIKELIHOODS:
        raise ValueError(f"unknown likelihood {name!r}; expected one of {LIKELIHOODS}")


def pair_likelihood(f_better, f_worse, likelihood: str = "thurstone_mosteller"):
    """Probability that the ``better`` item is preferred.

    Thurstone-Mosteller uses unit Gaussian noise per item, so the difference
    has noise variance 2.
    """
    _check(likelihood)
    d = np.asarray(f_better, dtype=float) - np.asarray(f_worse, dtype=float)
    if likelihood == "thurstone_mosteller":
        p = ndtr(d / _SQRT2)
    else:
        p = expit(d)
    return p if np.ndim(p) else float(p)


def log_lik(d: np.ndarray, likelihood: str) -> np.ndarray:
    if likelihood == "thurstone_mosteller":
        return log_ndtr(d / _SQRT2)
    return log_expit(d)


def _inverse_mills(z: np.ndarray) -> np.ndarray:
    # phi(z) / Phi(z), stable for very negative z
    return np.exp(-0.5 * z**2 - _LOG_SQRT_2PI - log_ndtr(z))


def log_lik_d1(d: np.ndarray, likelihood: str) -> np.ndarray:
    if likelihood == "thurstone_mosteller":
        return _inverse_mills(d / _SQRT2) / _SQRT2
    return expit(-d)


def log_lik_d2(d: np.ndarray, likelihood: str) -> np.ndarray:
    if likelihood == "thurstone_mosteller":
        z = d / _SQRT2
        lam = _inverse_mills(z)
        return -0.5 * lam * (z + lam)
    s = expit(d)
    return -s * (1.0 - s)


class GaussHermite:
    """Expectations of a pair log likelihood under ``d ~ N(mu, var)``.

    Derivatives are exact derivatives of the quadrature sum, so the values
    and gradients stay mutually consistent.
    """

    def __init__(self, likelihood: str = "thurstone_mosteller", n_points: int = 40):
        _check(likelihood)
        self.likelihood = likelihood
        x, w = np.polynomial.hermite.hermgauss(n_points)
        self.nodes = x * _SQRT2  # standard-normal nodes
        self.weights = w / np.sqrt(np.pi)

    def expected(self, mu: np.ndarray, var: np.ndarray) -> np.ndarray:
        sd = np.sqrt(np.maximum(var, 0.0))
        d = mu[:, None] + sd[:, None] * self.nodes[None, :]
        return log_lik(d, self.likelihood) @ self.weights

    def expected_with_grads(self, mu: np.ndarray, var: np.ndarray):
        """Return E[log p], dE/dmu and dE/dvar."""
        sd = np.sqrt(np.maximum(var, 0.0))
        d = mu[:, None] + sd[:, None] * self.nodes[None, :]
        ll = log_lik(d, self.likelihood) @ self.weights
        g1 = log_lik_d1(d, self.likelihood)
        d_mu = g1 @ self.weights
        d_sd = (g1 * self.nodes[None, :]) @ self.weights
        tiny = sd < 1e-8
        d_var = np.empty_like(mu)
        d_var[~tiny] = d_sd[~tiny] / (2.0 * sd[~tiny])
        if np.any(tiny):
            d_var[tiny] = 0.5 * log_lik_d2(mu[tiny], self.likelihood)
        return ll, d_mu, d_var
