"""Estimation, coverage and timing studies over simulated truth grids.

A study fixes a lattice of true parameters (snapped to the surface grid so
region membership is an exact lookup), simulates replicate fields at each,
and evaluates one likelihood surface per (field, method). Point estimates
are grid MLEs; regions are likelihood-ratio sets at a fixed level.

Error conventions: an estimate's error is the Euclidean distance to the
truth. rmse is the root mean squared distance, mae the mean distance, and
mmae the median over truth points of the per-truth median distance.
"""

from __future__ import annotations

import csv
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import InvalidArgumentError
from .grids import GridSpec, ParameterGrid, Surface
from .inference import confidence_region, grid_mle, region_area
from .simulate import (
    PROCESS_BR,
    PROCESS_GP,
    STREAM_EVAL,
    simulate_brown_resnick,
    simulate_gp,
    stream,
)

logger = logging.getLogger("nlsurf.eval")


@dataclass(frozen=True)
class SurfaceMethod:
    """A named way of turning one field into a Surface."""

    name: str
    fn: Callable[[np.ndarray], Surface]


@dataclass(frozen=True)
class EvalConfig:
    process: str
    grid: GridSpec
    surface_grid: ParameterGrid
    eval_counts: tuple[int, ...] = (9, 9)
    eval_values: Optional[tuple[tuple[float, ...], ...]] = None
    replicates: int = 200
    alpha: float = 0.05
    seed: int = 0
    n_spectral: int = 500

    def __post_init__(self):
        if self.process not in (PROCESS_GP, PROCESS_BR):
            raise InvalidArgumentError(f"unknown process {self.process!r}")
        if self.replicates < 1:
            raise InvalidArgumentError("replicates must be positive")
        if not 0.0 < self.alpha < 1.0:
            raise InvalidArgumentError("alpha must lie in (0, 1)")


def snap_to_grid(values, grid: ParameterGrid) -> np.ndarray:
    """Nearest lattice point of the parameter grid, componentwise."""
    vals = np.asarray(values, dtype=np.float64)
    out = np.empty_like(vals)
    for j in range(grid.ndim):
        lo, hi = grid.bounds[j]
        alpha = (hi - lo) / grid.counts[j]
        i = int(np.clip(round((vals[j] - lo) / alpha), 1, grid.counts[j]))
        out[j] = lo + alpha * i
    return out


def truth_points(config: EvalConfig) -> np.ndarray:
    """The study's true parameters: an eval lattice snapped to the surface grid."""
    if config.eval_values is not None:
        axes = [np.asarray(v, dtype=np.float64) for v in config.eval_values]
    else:
        eval_grid = ParameterGrid(
            config.surface_grid.bounds, config.eval_counts, config.surface_grid.names
        )
        axes = [eval_grid.axis_values(j) for j in range(eval_grid.ndim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    raw = np.column_stack([m.ravel() for m in mesh])
    snapped = np.array([snap_to_grid(p, config.surface_grid) for p in raw])
    return snapped


def _simulate(config: EvalConfig, theta, seed_seq) -> np.ndarray:
    if config.process == PROCESS_GP:
        return simulate_gp(theta, config.grid, seed_seq)
    return simulate_brown_resnick(theta, config.grid, seed_seq, n_spectral=config.n_spectral)


@dataclass
class StudyResult:
    """Flat per-(truth, replicate, method) records plus the truth lattice."""

    truths: np.ndarray
    methods: tuple[str, ...]
    alpha: float
    records: list = dc_field(default_factory=list)

    def for_method(self, name: str) -> list:
        return [r for r in self.records if r["method"] == name]


def run_study(config: EvalConfig, methods: Sequence[SurfaceMethod]) -> StudyResult:
    """Simulate replicates at every truth and evaluate every method on them.

    Field (l, r) uses seed stream (STREAM_EVAL, l, r); methods see identical
    fields. Records hold the estimate, the truth's region membership and
    the region area for each surface.
    """
    if not methods:
        raise InvalidArgumentError("at least one method is required")
    truths = truth_points(config)
    result = StudyResult(
        truths=truths, methods=tuple(m.name for m in methods), alpha=config.alpha
    )
    sgrid = config.surface_grid
    for l, theta_true in enumerate(truths):
        truth_idx = sgrid.index_of(theta_true)
        for r in range(config.replicates):
            y = _simulate(config, theta_true, stream(config.seed, STREAM_EVAL, l, r))
            for method in methods:
                surface = method.fn(y)
                est, value = grid_mle(surface)
                region = confidence_region(surface, config.alpha)
                result.records.append(
                    {
                        "method": method.name,
                        "truth_index": l,
                        "replicate": r,
                        "theta_true": tuple(float(v) for v in theta_true),
                        "estimate": tuple(float(v) for v in est.values),
                        "mle_value": value,
                        "covered": bool(region.member[truth_idx]),
                        "area": region_area(region),
                    }
                )
        logger.info(
            "truth %d/%d done: theta=%s", l + 1, len(truths), tuple(np.round(theta_true, 4))
        )
    return result


def _euclidean_errors(records) -> np.ndarray:
    return np.array(
        [
            float(np.linalg.norm(np.subtract(r["estimate"], r["theta_true"])))
            for r in records
        ]
    )


def estimation_metrics(records) -> dict:
    """rmse / mae / mmae of grid MLEs against their truths."""
    if not records:
        raise InvalidArgumentError("no records to summarize")
    err = _euclidean_errors(records)
    by_truth: dict[int, list[float]] = {}
    for r, e in zip(records, err):
        by_truth.setdefault(r["truth_index"], []).append(float(e))
    medians = [float(np.median(v)) for _, v in sorted(by_truth.items())]
    return {
        "rmse": float(np.sqrt(np.mean(err**2))),
        "mae": float(np.mean(err)),
        "mmae": float(np.median(medians)),
        "n": len(records),
    }


def run_estimation_study(
    config: EvalConfig,
    methods: Sequence[SurfaceMethod],
    result: Optional[StudyResult] = None,
) -> dict:
    """Per-method estimation metrics (reuses a StudyResult when given)."""
    if result is None:
        result = run_study(config, methods)
    out = {}
    for name in result.methods:
        records = result.for_method(name)
        summary = estimation_metrics(records)
        per_truth = []
        for l, theta in enumerate(result.truths):
            sub = [r for r in records if r["truth_index"] == l]
            err = _euclidean_errors(sub)
            per_truth.append(
                {
                    "theta_true": tuple(float(v) for v in theta),
                    "median_abs_error": float(np.median(err)),
                    "mean_estimate": tuple(
                        float(v) for v in np.mean([r["estimate"] for r in sub], axis=0)
                    ),
                }
            )
        summary["per_truth"] = per_truth
        out[name] = summary
    return out


def run_coverage_study(
    config: EvalConfig,
    methods: Sequence[SurfaceMethod],
    result: Optional[StudyResult] = None,
) -> dict:
    """Per-method empirical coverage and mean region area at the config level."""
    if result is None:
        result = run_study(config, methods)
    out = {}
    for name in result.methods:
        records = result.for_method(name)
        covered = np.array([r["covered"] for r in records], dtype=float)
        areas = np.array([r["area"] for r in records], dtype=float)
        per_truth = []
        for l, theta in enumerate(result.truths):
            sub_cov = [r["covered"] for r in records if r["truth_index"] == l]
            sub_area = [r["area"] for r in records if r["truth_index"] == l]
            per_truth.append(
                {
                    "theta_true": tuple(float(v) for v in theta),
                    "coverage": float(np.mean(sub_cov)),
                    "mean_area": float(np.mean(sub_area)),
                }
            )
        out[name] = {
            "nominal": 1.0 - config.alpha,
            "coverage": float(covered.mean()),
            "mean_area": float(areas.mean()),
            "n": len(records),
            "per_truth": per_truth,
        }
    return out


@contextmanager
def thread_limit(threads: Optional[int]):
    """Cap BLAS threads when threadpoolctl is available; otherwise no-op."""
    if threads is None:
        yield
        return
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        yield
        return
    with threadpool_limits(limits=int(threads)):
        yield


def run_timing_study(
    config: EvalConfig,
    methods: Sequence[SurfaceMethod],
    theta=None,
    n_fields: int = 10,
    threads: Optional[int] = None,
) -> dict:
    """Wall-clock seconds per surface for each method on shared fields.

    One warm-up evaluation per method is excluded; each of n_fields fields
    is then timed with perf_counter. Fields are simulated at ``theta``
    (default: the snapped center of the surface box).
    """
    if n_fields < 1:
        raise InvalidArgumentError("n_fields must be positive")
    if theta is None:
        center = [0.5 * (lo + hi) for lo, hi in config.surface_grid.bounds]
        theta = snap_to_grid(center, config.surface_grid)
    theta = np.asarray(theta, dtype=np.float64)
    fields = [
        _simulate(config, theta, stream(config.seed, STREAM_EVAL, 0, r))
        for r in range(n_fields)
    ]
    out = {}
    with thread_limit(threads):
        for method in methods:
            method.fn(fields[0])  # warm-up, excluded from timing
            seconds = []
            for y in fields:
                t0 = time.perf_counter()
                method.fn(y)
                seconds.append(time.perf_counter() - t0)
            arr = np.array(seconds)
            out[method.name] = {
                "mean_seconds": float(arr.mean()),
                "std_seconds": float(arr.std()),
                "total_seconds": float(arr.sum()),
                "n_fields": n_fields,
            }
            logger.info("timing %s: %.4f s/surface", method.name, arr.mean())
    return out


# ---------------------------------------------------------------------------
# CSV output.


def write_records_csv(result: StudyResult, path) -> None:
    """One row per (truth, replicate, method) with estimates and coverage."""
    k = result.truths.shape[1]
    header = (
        ["method", "truth_index", "replicate"]
        + [f"theta_true_{i}" for i in range(k)]
        + [f"estimate_{i}" for i in range(k)]
        + ["mle_value", "covered", "area"]
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for r in result.records:
            writer.writerow(
                [r["method"], r["truth_index"], r["replicate"]]
                + [f"{v:.10g}" for v in r["theta_true"]]
                + [f"{v:.10g}" for v in r["estimate"]]
                + [f"{r['mle_value']:.10g}", int(r["covered"]), f"{r['area']:.10g}"]
            )


def write_summary_csv(summaries: dict, path, kind: str) -> None:
    """Flatten per-method summaries ('estimation' or 'coverage') to CSV."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if kind == "estimation":
            writer.writerow(["method", "rmse", "mae", "mmae", "n"])
            for name, s in summaries.items():
                writer.writerow([name, s["rmse"], s["mae"], s["mmae"], s["n"]])
        elif kind == "coverage":
            writer.writerow(["method", "nominal", "coverage", "mean_area", "n"])
            for name, s in summaries.items():
                writer.writerow([name, s["nominal"], s["coverage"], s["mean_area"], s["n"]])
        elif kind == "timing":
            writer.writerow(["method", "mean_seconds", "std_seconds", "total_seconds", "n_fields"])
            for name, s in summaries.items():
                writer.writerow(
                    [name, s["mean_seconds"], s["std_seconds"], s["total_seconds"], s["n_fields"]]
                )
        else:
            raise InvalidArgumentError(f"unknown summary kind {kind!r}")
