"""Map raw preference utilities onto the 0-5 funniness scale.

A one-dimensional GP regressor (squared-exponential kernel, constant mean)
is fitted from raw utilities to gold ratings on a development set. Its
posterior mean is clamped to the rating range, and a decision threshold on
the calibrated score is tuned for F1.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .metrics import f1_from_pr

FORMAT_VERSION = 1
NOISE_GRID = tuple(2.0**k for k in range(-10, 3))
RANGE_MIN, RANGE_MAX = 0.0, 5.0


class DegenerateInputError(ValueError):
    pass


def _se(a: np.ndarray, b: np.ndarray, lengthscale: float, variance: float) -> np.ndarray:
    return variance * np.exp(-0.5 * ((a[:, None] - b[None, :]) / lengthscale) ** 2)


def _median_gap(x: np.ndarray, max_samples: int = 1000) -> float:
    if len(x) > max_samples:
        # evenly spaced order statistics keep this deterministic
        x = np.sort(x)[np.linspace(0, len(x) - 1, max_samples).astype(int)]
    iu, ju = np.triu_indices(len(x), k=1)
    gaps = np.abs(x[iu] - x[ju])
    med = float(np.median(gaps))
    return med if med > 0 else float(gaps[gaps > 0].mean())


@dataclass(frozen=True)
class CalibrationMap:
    inputs: np.ndarray
    weights: np.ndarray  # (K + noise I)^-1 (y - mean)
    mean: float
    lengthscale: float
    variance: float
    noise_variance: float
    range_min: float = RANGE_MIN
    range_max: float = RANGE_MAX
    binary_threshold: float | None = None

    def __post_init__(self):
        if not self.range_min < self.range_max:
            raise ValueError("range_min must be below range_max")
        if self.noise_variance <= 0:
            raise ValueError("observation noise variance must be positive")

    def posterior_mean(self, raw) -> np.ndarray:
        r = np.atleast_1d(np.asarray(raw, dtype=float)).ravel()
        out = np.empty_like(r)
        step = 1 << 16
        for start in range(0, len(r), step):
            chunk = r[start:start + step]
            out[start:start + step] = self.mean + _se(chunk, self.inputs, self.lengthscale, self.variance) @ self.weights
        return out

    def with_threshold(self, threshold: float) -> "CalibrationMap":
        return CalibrationMap(
            self.inputs, self.weights, self.mean, self.lengthscale, self.variance,
            self.noise_variance, self.range_min, self.range_max, float(threshold),
        )

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "kind": "calibration_map",
            "inputs": self.inputs.tolist(),
            "weights": self.weights.tolist(),
            "mean": self.mean,
            "lengthscale": self.lengthscale,
            "variance": self.variance,
            "noise_variance": self.noise_variance,
            "range_min": self.range_min,
            "range_max": self.range_max,
            "binary_threshold": self.binary_threshold,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "CalibrationMap":
        if d.get("kind") != "calibration_map":
            raise ValueError("not a serialized calibration map")
        if d.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"calibration format version {d.get('format_version')} is not supported")
        return cls(
            np.asarray(d["inputs"], dtype=float), np.asarray(d["weights"], dtype=float),
            float(d["mean"]), float(d["lengthscale"]), float(d["variance"]), float(d["noise_variance"]),
            float(d["range_min"]), float(d["range_max"]),
            None if d["binary_threshold"] is None else float(d["binary_threshold"]),
        )

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "CalibrationMap":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _log_marginal(K: np.ndarray, y: np.ndarray, noise: float):
    c = cho_factor(K + noise * np.eye(len(y)), lower=True)
    alpha = cho_solve(c, y)
    logdet = 2.0 * np.sum(np.log(np.diag(c[0])))
    return -0.5 * (y @ alpha) - 0.5 * logdet - 0.5 * len(y) * np.log(2 * np.pi), alpha


def fit_calibration(
    raw: Sequence[float], gold: Sequence[float], noise_grid: Sequence[float] = NOISE_GRID
) -> CalibrationMap:
    """GP regression of gold ratings on raw utilities with the noise level chosen by evidence."""
    x = np.asarray(raw, dtype=float)
    y = np.asarray(gold, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("raw and gold must be equal-length vectors")
    if len(x) < 2:
        raise DegenerateInputError("calibration needs at least two points")
    if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
        raise ValueError("calibration inputs must be finite")
    if np.ptp(x) == 0:
        raise DegenerateInputError("raw scores have zero variance")
    mean = float(y.mean())
    resid = y - mean
    variance = max(float(resid.var()), 1e-6)
    lengthscale = _median_gap(x)
    K = _se(x, x, lengthscale, variance)
    best = None
    for noise in noise_grid:
        try:
            lml, alpha = _log_marginal(K, resid, noise)
        except np.linalg.LinAlgError:
            continue
        if best is None or lml > best[0]:
            best = (lml, noise, alpha)
    if best is None:
        raise DegenerateInputError("no noise level on the grid gave a valid GP fit")
    _, noise, alpha = best
    return CalibrationMap(x.copy(), alpha, mean, lengthscale, variance, noise)


def apply_calibration(cmap: CalibrationMap, raw):
    """Clamped GP posterior mean; a scalar in gives a float out."""
    out = np.clip(cmap.posterior_mean(raw), cmap.range_min, cmap.range_max)
    return float(out[0]) if np.ndim(raw) == 0 else out


def _f1_at(scores: np.ndarray, labels: np.ndarray, threshold: float) -> float:
    pred = scores >= threshold
    tp = np.sum(pred & labels)
    fp = np.sum(pred & ~labels)
    fn = np.sum(~pred & labels)
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    return f1_from_pr(p, r)


def tune_threshold(calibrated: Sequence[float], gold_labels: Sequence[bool]) -> float:
    """F1-optimal threshold among midpoints of consecutive distinct scores (smallest wins ties)."""
    s = np.asarray(calibrated, dtype=float)
    labels = np.asarray(gold_labels, dtype=bool)
    if s.shape != labels.shape or len(s) == 0:
        raise ValueError("scores and labels must be non-empty and equal length")
    if labels.all() or not labels.any():
        raise DegenerateInputError("threshold tuning needs both positive and negative labels")
    distinct = np.unique(s)
    if len(distinct) < 2:
        raise DegenerateInputError("all calibrated scores are identical; no threshold separates them")
    candidates = 0.5 * (distinct[:-1] + distinct[1:])
    best_t, best_f1 = candidates[0], -1.0
    for t in candidates:
        f1 = _f1_at(s, labels, t)
        if f1 > best_f1:
            best_t, best_f1 = t, f1
    return float(best_t)


def classify(cmap: CalibrationMap, raw) -> bool | np.ndarray:
    if cmap.binary_threshold is None:
        raise ValueError("calibration map has no binary threshold")
    out = apply_calibration(cmap, raw) >= cmap.binary_threshold
    return bool(out) if np.ndim(raw) == 0 else out
