"""From classifier output to surfaces, point estimates and confidence regions.

The classifier's class-1 probability h estimates P(dependent | field, theta);
the log odds log(h / (1 - h)) equals the field's log-likelihood at theta up
to an additive constant, so grid argmaxes and likelihood-ratio regions built
from the log-odds surface are the classifier's approximate MLE and
confidence sets. Independent realizations simply add their surfaces.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.special import gammainc

from .calibrate import PROB_EPS, PlattModel, apply_platt
from .errors import FormatError, InvalidArgumentError, NoValidPointError
from .grids import (
    KIND_NEURAL,
    KIND_NEURAL_UNCAL,
    Parameter,
    ParameterGrid,
    Surface,
)
from .neural import CnnModel, head_probs, trunk_features
from .tensorio import read_json, read_tensor, write_json, write_tensor


def log_psi(probs) -> np.ndarray:
    """Log odds of the class-1 probability, clamped away from 0 and 1.

    Clamping at 1e-7 bounds the output by ~±16.1; saturated classifier
    outputs therefore flatten instead of producing infinities.
    """
    p = np.clip(np.asarray(probs, dtype=np.float64), PROB_EPS, 1.0 - PROB_EPS)
    return np.log(p) - np.log1p(-p)


def neural_surface(
    model: CnnModel,
    y,
    param_grid: ParameterGrid,
    platt: PlattModel | None = None,
) -> Surface:
    """Log-odds surface of one field over a parameter grid.

    The conv trunk runs once (it does not see theta); the dense head runs
    batched over all grid points. This is the vectorized evaluation path.
    """
    if param_grid.ndim != model.theta_dim:
        raise InvalidArgumentError("parameter grid dimension does not match the model")
    flat = trunk_features(model, y)
    probs = head_probs(model, flat, param_grid.points())[:, 0]
    calibrated = platt is not None
    if calibrated:
        probs = apply_platt(platt, probs)
    clamped = int(np.sum((probs < PROB_EPS) | (probs > 1.0 - PROB_EPS)))
    return Surface(
        grid=param_grid,
        values=log_psi(probs),
        kind=KIND_NEURAL if calibrated else KIND_NEURAL_UNCAL,
        metadata={"calibrated": calibrated, "clamped_points": clamped},
    )


def multi_surface(surfaces) -> Surface:
    """Joint surface of independent realizations: the pointwise sum.

    All inputs must share one grid and one kind; -inf at any realization
    propagates to the sum.
    """
    surfaces = list(surfaces)
    if not surfaces:
        raise InvalidArgumentError("multi_surface needs at least one surface")
    first = surfaces[0]
    for s in surfaces[1:]:
        if s.grid != first.grid:
            raise InvalidArgumentError("surfaces must share the same parameter grid")
        if s.kind != first.kind:
            raise InvalidArgumentError(
                f"surfaces must share one kind, got {s.kind!r} and {first.kind!r}"
            )
    total = np.zeros(first.grid.n_points)
    for s in surfaces:
        total = total + s.values
    return Surface(
        grid=first.grid,
        values=total,
        kind=first.kind,
        metadata={"n_realizations": len(surfaces)},
    )


def grid_mle(surface: Surface) -> tuple[Parameter, float]:
    """Grid point with the largest surface value (ties: lowest linear index)."""
    values = surface.values
    idx = int(np.argmax(values))
    if values[idx] == -np.inf:
        raise NoValidPointError("all surface values are -inf", kind=surface.kind)
    return surface.grid.point(idx), float(values[idx])


def chi2_quantile(alpha: float, df: int, method: str = "auto") -> float:
    """Upper-alpha quantile of the chi-squared distribution with df degrees.

    df = 2 has the closed form -2 log(alpha); other degrees of freedom (or
    method='bisect') bracket-and-bisect the regularized incomplete gamma
    CDF. Both routes agree to ~1e-10.
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidArgumentError(f"alpha must lie in (0, 1), got {alpha}")
    if int(df) != df or df < 1:
        raise InvalidArgumentError(f"df must be a positive integer, got {df}")
    if method not in ("auto", "closed", "bisect"):
        raise InvalidArgumentError(f"unknown method {method!r}")
    if method == "closed" or (method == "auto" and df == 2):
        if df != 2:
            raise InvalidArgumentError("closed form only exists for df = 2")
        return -2.0 * float(np.log(alpha))
    target = 1.0 - alpha

    def cdf(x: float) -> float:
        return float(gammainc(df / 2.0, x / 2.0))

    hi = 1.0
    while cdf(hi) < target:
        hi *= 2.0
        if hi > 1e12:
            raise InvalidArgumentError("quantile bracket exceeded sane bounds")
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if cdf(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


@dataclass
class ConfidenceRegion:
    """Likelihood-ratio region on a parameter grid."""

    grid: ParameterGrid
    member: np.ndarray
    alpha: float
    cutoff: float
    source_kind: str
    metadata: dict = dc_field(default_factory=dict)

    @property
    def n_members(self) -> int:
        return int(self.member.sum())


def confidence_region(surface: Surface, alpha: float) -> ConfidenceRegion:
    """Grid points whose likelihood-ratio statistic clears the chi2 cutoff.

    A point belongs iff 2 * (max - value) <= chi2_quantile(alpha, ndim).
    -inf points never belong; the maximizing point always does.
    """
    mle_param, mle_value = grid_mle(surface)
    cutoff = chi2_quantile(alpha, surface.grid.ndim)
    with np.errstate(invalid="ignore"):
        stat = 2.0 * (mle_value - surface.values)
    member = stat <= cutoff
    return ConfidenceRegion(
        grid=surface.grid,
        member=member,
        alpha=float(alpha),
        cutoff=float(cutoff),
        source_kind=surface.kind,
        metadata={
            "mle": [float(v) for v in mle_param.values],
            "mle_value": mle_value,
        },
    )


def region_area(region: ConfidenceRegion) -> float:
    """Member count times the grid cell volume."""
    return region.n_members * region.grid.cell_volume()


# ---------------------------------------------------------------------------
# Persistence. A surface directory holds manifest.json + surface.nlt; a
# region directory holds manifest.json + member.nlt (0/1).


def _grid_doc(grid: ParameterGrid) -> dict:
    return {
        "bounds": [list(b) for b in grid.bounds],
        "counts": list(grid.counts),
        "names": list(grid.names),
    }


def _grid_from_doc(doc) -> ParameterGrid:
    return ParameterGrid(
        tuple(tuple(b) for b in doc["bounds"]),
        tuple(doc["counts"]),
        tuple(doc["names"]),
    )


def save_surface(surface: Surface, out_dir) -> None:
    os.makedirs(out_dir, exist_ok=True)
    write_json(
        os.path.join(out_dir, "manifest.json"),
        {
            "format": "nlsurf-surface-v1",
            "kind": surface.kind,
            "grid": _grid_doc(surface.grid),
            "metadata": surface.metadata,
        },
    )
    write_tensor(os.path.join(out_dir, "surface.nlt"), surface.values)


def load_surface(in_dir) -> Surface:
    manifest = read_json(os.path.join(in_dir, "manifest.json"))
    if manifest.get("format") != "nlsurf-surface-v1":
        raise FormatError(f"{in_dir}: not a surface directory")
    values = read_tensor(os.path.join(in_dir, "surface.nlt")).astype(np.float64)
    return Surface(
        grid=_grid_from_doc(manifest["grid"]),
        values=values,
        kind=manifest["kind"],
        metadata=dict(manifest.get("metadata", {})),
    )


def save_region(region: ConfidenceRegion, out_dir) -> None:
    os.makedirs(out_dir, exist_ok=True)
    write_json(
        os.path.join(out_dir, "manifest.json"),
        {
            "format": "nlsurf-region-v1",
            "alpha": region.alpha,
            "cutoff": region.cutoff,
            "source_kind": region.source_kind,
            "grid": _grid_doc(region.grid),
            "n_members": region.n_members,
            "area": region_area(region),
            "metadata": region.metadata,
        },
    )
    write_tensor(os.path.join(out_dir, "member.nlt"), region.member.astype(np.float32))


def load_region(in_dir) -> ConfidenceRegion:
    manifest = read_json(os.path.join(in_dir, "manifest.json"))
    if manifest.get("format") != "nlsurf-region-v1":
        raise FormatError(f"{in_dir}: not a region directory")
    member = read_tensor(os.path.join(in_dir, "member.nlt")) != 0.0
    return ConfidenceRegion(
        grid=_grid_from_doc(manifest["grid"]),
        member=member,
        alpha=manifest["alpha"],
        cutoff=manifest["cutoff"],
        source_kind=manifest["source_kind"],
        metadata=dict(manifest.get("metadata", {})),
    )
