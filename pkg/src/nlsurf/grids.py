"""Core value types: spatial grids, parameters, fields, surfaces, datasets.

Conventions used throughout the package:

* Spatial fields live on a square side x side lattice over
  [domain_min, domain_max]^2. Locations are enumerated row-major, so the
  linear index of lattice cell (i, j) is i * side + j and index 0 is the
  lower-left corner (domain_min, domain_min).
* Parameter grids exclude the low endpoint and include the high one: axis
  values are lo + alpha * i for i = 1..count with alpha = (hi - lo) / count.
  Grid points are enumerated row-major (first axis slowest).
* Surfaces hold one float64 value per grid point; -inf marks points where
  evaluation was impossible (invalid domain, failed factorization). NaN is
  never a legal surface value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class GridSpec:
    """Square spatial lattice: side points per axis over [domain_min, domain_max]."""

    side: int
    domain_min: float = -10.0
    domain_max: float = 10.0

    def __post_init__(self):
        if int(self.side) != self.side or self.side < 1:
            raise InvalidArgumentError(f"side must be a positive integer, got {self.side}")
        if not (self.domain_min < self.domain_max):
            raise InvalidArgumentError(
                f"domain_min must be < domain_max, got [{self.domain_min}, {self.domain_max}]"
            )

    @property
    def n_sites(self) -> int:
        return self.side * self.side

    def coords(self) -> np.ndarray:
        """Per-axis coordinates (length ``side``)."""
        if self.side == 1:
            return np.array([self.domain_min])
        return np.linspace(self.domain_min, self.domain_max, self.side)

    def locations(self) -> np.ndarray:
        """All lattice locations, shape (side^2, 2), row-major."""
        c = self.coords()
        xi, xj = np.meshgrid(c, c, indexing="ij")
        return np.column_stack([xi.ravel(), xj.ravel()])

    def pairwise_distances(self) -> np.ndarray:
        """Euclidean distance matrix between all lattice locations."""
        loc = self.locations()
        diff = loc[:, None, :] - loc[None, :, :]
        return np.sqrt((diff * diff).sum(axis=2))


@dataclass(frozen=True)
class Parameter:
    """A point in parameter space with component names."""

    values: np.ndarray
    names: tuple[str, ...]

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 1 or vals.size == 0:
            raise InvalidArgumentError("parameter values must be a non-empty 1-d array")
        if not np.all(np.isfinite(vals)):
            raise InvalidArgumentError(f"parameter values must be finite, got {vals}")
        if len(self.names) != vals.size:
            raise InvalidArgumentError(
                f"{len(self.names)} names for {vals.size} components"
            )

    @property
    def k(self) -> int:
        return self.values.size

    def as_dict(self) -> dict:
        return {name: float(v) for name, v in zip(self.names, self.values)}


def check_inside(values, bounds, what="parameter") -> None:
    """Require each component to lie strictly inside its (lo, hi) interval."""
    vals = np.asarray(values, dtype=np.float64)
    for i, (lo, hi) in enumerate(bounds):
        comp = vals[..., i]
        if np.any(comp <= lo) or np.any(comp >= hi):
            raise InvalidArgumentError(
                f"{what} component {i} must lie strictly inside ({lo}, {hi})"
            )


@dataclass(frozen=True)
class SpatialField:
    """One realization of a process on a spatial lattice."""

    values: np.ndarray
    grid: GridSpec

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", vals)
        if vals.shape != (self.grid.side, self.grid.side):
            raise InvalidArgumentError(
                f"field shape {vals.shape} does not match grid side {self.grid.side}"
            )
        if not np.all(np.isfinite(vals)):
            raise InvalidArgumentError("field values must be finite")

    def flat(self) -> np.ndarray:
        """Row-major vector of site values (matches GridSpec.locations order)."""
        return self.values.ravel()


@dataclass(frozen=True)
class ParameterGrid:
    """Regular lattice over a parameter box, low endpoint excluded.

    Axis j has ``counts[j]`` values lo_j + alpha_j * i, i = 1..counts[j],
    with spacing alpha_j = (hi_j - lo_j) / counts[j]. Points are enumerated
    row-major: the first axis varies slowest.
    """

    bounds: tuple[tuple[float, float], ...]
    counts: tuple[int, ...]
    names: tuple[str, ...]

    def __post_init__(self):
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "counts", counts)
        if not (len(bounds) == len(counts) == len(self.names)):
            raise InvalidArgumentError("bounds, counts and names must have equal length")
        if len(bounds) == 0:
            raise InvalidArgumentError("parameter grid needs at least one axis")
        for (lo, hi), c in zip(bounds, counts):
            if not (lo < hi):
                raise InvalidArgumentError(f"axis bounds ({lo}, {hi}) must satisfy lo < hi")
            if c < 1:
                raise InvalidArgumentError(f"axis count must be >= 1, got {c}")

    @property
    def ndim(self) -> int:
        return len(self.counts)

    @property
    def n_points(self) -> int:
        return int(np.prod(self.counts))

    @property
    def spacings(self) -> tuple[float, ...]:
        return tuple((hi - lo) / c for (lo, hi), c in zip(self.bounds, self.counts))

    def axis_values(self, j: int) -> np.ndarray:
        lo, hi = self.bounds[j]
        alpha = (hi - lo) / self.counts[j]
        return lo + alpha * np.arange(1, self.counts[j] + 1)

    def points(self) -> np.ndarray:
        """All grid points, shape (n_points, ndim), row-major."""
        axes = [self.axis_values(j) for j in range(self.ndim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])

    def point(self, linear_index: int) -> Parameter:
        multi = np.unravel_index(linear_index, self.counts)
        vals = np.array([self.axis_values(j)[i] for j, i in enumerate(multi)])
        return Parameter(vals, self.names)

    def index_of(self, values) -> int:
        """Linear index of a point that lies on the lattice (else raises)."""
        vals = np.asarray(values, dtype=np.float64)
        multi = []
        for j in range(self.ndim):
            lo, hi = self.bounds[j]
            alpha = (hi - lo) / self.counts[j]
            i = int(round((vals[j] - lo) / alpha)) - 1
            if i < 0 or i >= self.counts[j] or abs(self.axis_values(j)[i] - vals[j]) > 1e-9:
                raise InvalidArgumentError(f"{vals} is not a lattice point of this grid")
            multi.append(i)
        return int(np.ravel_multi_index(tuple(multi), self.counts))

    def cell_volume(self) -> float:
        vol = 1.0
        for a in self.spacings:
            vol *= a
        return vol


def make_parameter_grid(bounds, counts, names) -> ParameterGrid:
    return ParameterGrid(tuple(tuple(b) for b in bounds), tuple(counts), tuple(names))


# Surface kinds. Multi-realization sums keep the kind of their inputs.
KIND_EXACT_GP = "exact-gp"
KIND_PAIRWISE = "pairwise"
KIND_PAIRWISE_ADJUSTED = "pairwise-adjusted"
KIND_NEURAL = "neural-calibrated"
KIND_NEURAL_UNCAL = "neural-uncalibrated"

SURFACE_KINDS = (
    KIND_EXACT_GP,
    KIND_PAIRWISE,
    KIND_PAIRWISE_ADJUSTED,
    KIND_NEURAL,
    KIND_NEURAL_UNCAL,
)


@dataclass
class Surface:
    """Log-likelihood (or log-likelihood-proportional) values over a ParameterGrid."""

    grid: ParameterGrid
    values: np.ndarray
    kind: str
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != (self.grid.n_points,):
            raise InvalidArgumentError(
                f"surface needs {self.grid.n_points} values, got shape {vals.shape}"
            )
        if np.any(np.isnan(vals)) or np.any(vals == np.inf):
            raise InvalidArgumentError("surface values must be finite or -inf")
        self.values = vals
        if self.kind not in SURFACE_KINDS:
            raise InvalidArgumentError(f"unknown surface kind {self.kind!r}")


@dataclass(frozen=True)
class LabeledPair:
    """A (field, parameter) pair with its class label (1 dependent, 2 shuffled)."""

    field: SpatialField
    theta: Parameter
    label: int

    def __post_init__(self):
        if self.label not in (1, 2):
            raise InvalidArgumentError(f"label must be 1 or 2, got {self.label}")


@dataclass
class PairDataset:
    """Two-class training corpus for the dependence classifier.

    ``fields[i * n + j]`` was simulated under ``params[i]``; the first class
    pairs it with ``params[i]`` (label 1), the second class with
    ``perm_params[i * n + j]`` (label 2), a per-replicate-column permutation
    of the same parameter set. ``perm_params`` is None until the second
    class is built.
    """

    grid: GridSpec
    process: str
    names: tuple[str, ...]
    bounds: tuple[tuple[float, float], ...]
    m: int
    n: int
    params: np.ndarray
    fields: np.ndarray
    seed: int
    perm_params: Optional[np.ndarray] = None
    perm_seed: Optional[int] = None

    def __post_init__(self):
        if self.params.shape != (self.m, len(self.names)):
            raise InvalidArgumentError(
                f"params shape {self.params.shape} != ({self.m}, {len(self.names)})"
            )
        expect = (self.m * self.n, self.grid.side, self.grid.side)
        if self.fields.shape != expect:
            raise InvalidArgumentError(f"fields shape {self.fields.shape} != {expect}")
        if self.perm_params is not None and self.perm_params.shape != (
            self.m * self.n,
            len(self.names),
        ):
            raise InvalidArgumentError("perm_params shape mismatch")

    @property
    def k(self) -> int:
        return len(self.names)

    @property
    def n_pairs(self) -> int:
        return self.m * self.n * (2 if self.perm_params is not None else 1)

    def expanded_params(self) -> np.ndarray:
        """First-class parameters aligned with fields: row i*n+j holds params[i]."""
        return np.repeat(self.params, self.n, axis=0)

    def training_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(fields, thetas, labels) with both classes stacked, labels in {1, 2}."""
        if self.perm_params is None:
            raise InvalidArgumentError("second class not built yet")
        fields = np.concatenate([self.fields, self.fields], axis=0)
        thetas = np.concatenate([self.expanded_params(), self.perm_params], axis=0)
        labels = np.concatenate(
            [np.ones(self.m * self.n, dtype=np.int64), np.full(self.m * self.n, 2, dtype=np.int64)]
        )
        return fields, thetas, labels

    def iter_pairs(self) -> Iterator[LabeledPair]:
        expanded = self.expanded_params()
        for idx in range(self.m * self.n):
            yield LabeledPair(
                SpatialField(self.fields[idx], self.grid),
                Parameter(expanded[idx], self.names),
                1,
            )
        if self.perm_params is not None:
            for idx in range(self.m * self.n):
                yield LabeledPair(
                    SpatialField(self.fields[idx], self.grid),
                    Parameter(self.perm_params[idx], self.names),
                    2,
                )
