"""Stationary covariance functions and a jittered Cholesky."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky
from scipy.spatial.distance import cdist

FAMILIES = ("matern32", "squared_exponential")


class NumericalError(RuntimeError):
    """Linear algebra failed even after jitter was added."""


@dataclass(frozen=True)
class KernelParams:
    """Kernel family, per-dimension lengthscales and the Gamma(shape, rate) scale prior.

    The output variance is fixed at the prior mean ``scale_rate / scale_shape``.
    """

    lengthscales: np.ndarray
    family: str = "matern32"
    scale_shape: float = 2.0
    scale_rate: float = 200.0

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        object.__setattr__(self, "lengthscales", ls)
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if ls.ndim != 1 or np.any(ls <= 0) or not np.all(np.isfinite(ls)):
            raise ValueError("lengthscales must be a vector of positive finite values")
        if self.scale_shape <= 0 or self.scale_rate <= 0:
            raise ValueError("scale_shape and scale_rate must be positive")

    @property
    def output_scale(self) -> float:
        return self.scale_rate / self.scale_shape

    @property
    def dim(self) -> int:
        return self.lengthscales.shape[0]

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "lengthscales": self.lengthscales.tolist(),
            "scale_shape": self.scale_shape,
            "scale_rate": self.scale_rate,
        }

    @classmethod
    def from_dict(cls, d) -> "KernelParams":
        return cls(np.asarray(d["lengthscales"], dtype=float), d["family"], float(d["scale_shape"]), float(d["scale_rate"]))


def _profile(r: np.ndarray, family: str) -> np.ndarray:
    if family == "matern32":
        s = np.sqrt(3.0) * r
        return (1.0 + s) * np.exp(-s)
    return np.exp(-0.5 * r**2)


def _check(X: np.ndarray, params: KernelParams) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != params.dim:
        raise ValueError(f"inputs have {X.shape[1]} columns but the kernel has {params.dim} lengthscales")
    return X


def kernel_matrix(X1: np.ndarray, X2: np.ndarray, params: KernelParams) -> np.ndarray:
    X1, X2 = _check(X1, params), _check(X2, params)
    r = cdist(X1 / params.lengthscales, X2 / params.lengthscales)
    return params.output_scale * _profile(r, params.family)


def kernel_rows(X1: np.ndarray, X2: np.ndarray, params: KernelParams) -> np.ndarray:
    """k(X1[i], X2[i]) for each row i."""
    X1, X2 = _check(X1, params), _check(X2, params)
    r = np.sqrt(np.sum(((X1 - X2) / params.lengthscales) ** 2, axis=1))
    return params.output_scale * _profile(r, params.family)


def median_lengthscales(
    X: np.ndarray, max_samples: int = 1000, seed: int = 0, scale_by_dim: bool = True, floor: float = 1e-6
) -> np.ndarray:
    """Per-dimension median absolute pairwise difference.

    Columns whose median difference is zero fall back to the mean difference,
    or 1 when the column is constant.

    With ``scale_by_dim`` the medians are multiplied by sqrt(D) so that the
    typical scaled distance between two points stays near one regardless of
    the number of features.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, d = X.shape
    if n > max_samples:
        rng = np.random.Generator(np.random.PCG64(seed))
        X = X[np.sort(rng.choice(n, size=max_samples, replace=False))]
        n = max_samples
    if n < 2:
        return np.ones(d)
    iu, ju = np.triu_indices(n, k=1)
    med = np.empty(d)
    for j in range(d):
        diffs = np.abs(X[iu, j] - X[ju, j])
        med[j] = np.median(diffs)
        if med[j] <= 0:
            # mostly-constant column: a floored median would swamp the distance
            med[j] = diffs.mean() if diffs.mean() > 0 else 1.0
    if scale_by_dim:
        med = med * np.sqrt(d)
    return np.maximum(med, floor)


def jittered_cholesky(K: np.ndarray, jitter: float = 1e-6, max_doublings: int = 10) -> np.ndarray:
    """Lower Cholesky factor of ``K + jitter*I``, doubling the jitter on failure.

    A zero starting jitter first retries with 1e-10 times the mean diagonal.
    """
    K = 0.5 * (K + K.T)
    eye = np.eye(K.shape[0])
    j = jitter
    for _ in range(max_doublings + 1):
        try:
            return cholesky(K + j * eye, lower=True, check_finite=True)
        except (np.linalg.LinAlgError, ValueError):
            j = 2.0 * j if j > 0 else 1e-10 * max(float(np.mean(np.abs(np.diag(K)))), 1e-300)
    raise NumericalError(f"Cholesky failed with jitter up to {j / 2:.3g}")
