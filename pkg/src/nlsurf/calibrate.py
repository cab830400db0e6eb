"""Platt recalibration of the classifier's probabilities.

A two-parameter logistic regression sigma(beta0 + beta1 * logit(p)) is fit
by iteratively reweighted least squares on held-out pairs. With beta1 > 0
the map is strictly increasing in p, so recalibration never changes the
argmax of a likelihood surface, only its calibration.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import FormatError, InvalidArgumentError, NumericError
from .tensorio import read_json, write_json

PROB_EPS = 1e-7


def clamp_probs(p) -> np.ndarray:
    return np.clip(np.asarray(p, dtype=np.float64), PROB_EPS, 1.0 - PROB_EPS)


def logit(p) -> np.ndarray:
    p = clamp_probs(p)
    return np.log(p) - np.log1p(-p)


def _sigmoid(x) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass
class PlattModel:
    beta0: float
    beta1: float
    diagnostics: dict = dc_field(default_factory=dict)


def fit_platt(probs, labels, tol: float = 1e-8, max_iter: int = 100) -> PlattModel:
    """Fit the recalibration map on (predicted prob of class 1, true label).

    labels are 1/2 as produced by the two-class construction. IRLS stops
    when the score norm drops below tol; diagnostics report iterations,
    convergence and the final deviance.
    """
    p = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels)
    if p.shape != labels.shape or p.ndim != 1:
        raise InvalidArgumentError("probs and labels must be equal-length vectors")
    if not np.all(np.isin(labels, (1, 2))):
        raise InvalidArgumentError("labels must be 1 or 2")
    z = (labels == 1).astype(np.float64)
    if z.min() == z.max():
        raise InvalidArgumentError("both classes must be present to calibrate")
    x = logit(p)
    design = np.column_stack([np.ones_like(x), x])
    beta = np.zeros(2)
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        eta = design @ beta
        mu = _sigmoid(eta)
        score = design.T @ (z - mu)
        if np.linalg.norm(score) < tol:
            converged = True
            break
        weight = np.maximum(mu * (1.0 - mu), 1e-12)
        hessian = design.T @ (design * weight[:, None])
        try:
            beta = beta + np.linalg.solve(hessian, score)
        except np.linalg.LinAlgError as exc:
            raise NumericError("IRLS normal equations are singular") from exc
    mu = _sigmoid(design @ beta)
    mu = np.clip(mu, 1e-12, 1.0 - 1e-12)
    deviance = -2.0 * float(np.sum(z * np.log(mu) + (1.0 - z) * np.log1p(-mu)))
    return PlattModel(
        beta0=float(beta[0]),
        beta1=float(beta[1]),
        diagnostics={
            "converged": converged,
            "iterations": iterations,
            "deviance": deviance,
            "n": int(z.size),
        },
    )


def apply_platt(model: PlattModel, probs) -> np.ndarray:
    """Recalibrated probabilities, elementwise."""
    x = logit(probs)
    return _sigmoid(model.beta0 + model.beta1 * np.asarray(x))


def reliability_curve(probs, labels, n_bins: int = 10):
    """Observed class-1 frequency per predicted-probability bin.

    Bins are [i/n, (i+1)/n), the last closed at 1. Returns a list of dicts
    with bin edges, mean predicted probability, observed frequency and
    count; empty bins carry NaN summaries and count 0.
    """
    if n_bins < 1:
        raise InvalidArgumentError("n_bins must be positive")
    p = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels)
    if not np.all(np.isin(labels, (1, 2))):
        raise InvalidArgumentError("labels must be 1 or 2")
    z = (labels == 1).astype(np.float64)
    idx = np.minimum((p * n_bins).astype(int), n_bins - 1)
    rows = []
    for b in range(n_bins):
        mask = idx == b
        count = int(mask.sum())
        rows.append(
            {
                "bin_lo": b / n_bins,
                "bin_hi": (b + 1) / n_bins,
                "mean_predicted": float(p[mask].mean()) if count else float("nan"),
                "observed_frequency": float(z[mask].mean()) if count else float("nan"),
                "count": count,
            }
        )
    return rows


def save_platt(model: PlattModel, path) -> None:
    write_json(
        path,
        {
            "format": "nlsurf-platt-v1",
            "beta0": model.beta0,
            "beta1": model.beta1,
            "diagnostics": model.diagnostics,
        },
    )


def load_platt(path) -> PlattModel:
    doc = read_json(path)
    if doc.get("format") != "nlsurf-platt-v1":
        raise FormatError(f"{path}: not a calibration file")
    return PlattModel(
        beta0=float(doc["beta0"]),
        beta1=float(doc["beta1"]),
        diagnostics=dict(doc.get("diagnostics", {})),
    )
