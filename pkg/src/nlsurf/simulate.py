"""Process simulators and the two-class training corpus.

Reproducibility contract: every random object is derived from a root seed
through named SeedSequence spawn keys, so any single field (or permutation,
or study replicate) can be regenerated in isolation:

  (STREAM_FIELD, i, j)   field j of parameter i in a training corpus
  (STREAM_PERM, j)       the label-2 permutation for replicate column j
  (STREAM_ADJ, i)        field i of a curvature-estimation run
  (STREAM_EVAL, l, r)    replicate r at true-parameter index l of a study
  (STREAM_INIT, a)       network weight initialization, attempt a
  (STREAM_SHUFFLE,)      minibatch shuffling
  (STREAM_LHS,)          Latin hypercube draw of training parameters
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import FormatError, InvalidArgumentError, NotPositiveDefiniteError
from .grids import GridSpec, PairDataset, check_inside
from .tensorio import read_json, read_tensor, write_json, write_tensor

PROCESS_GP = "gp"
PROCESS_BR = "brown-resnick"

STREAM_FIELD = 0
STREAM_PERM = 1
STREAM_ADJ = 2
STREAM_EVAL = 3
STREAM_INIT = 4
STREAM_SHUFFLE = 5
STREAM_LHS = 6


def param_names(process: str) -> tuple[str, str]:
    if process == PROCESS_GP:
        return ("variance", "length_scale")
    if process == PROCESS_BR:
        return ("range", "smoothness")
    raise InvalidArgumentError(f"unknown process {process!r}")


def default_bounds(process: str) -> tuple[tuple[float, float], ...]:
    """Training parameter box: widened for the GP, native for Brown-Resnick."""
    if process == PROCESS_GP:
        return ((0.0, 2.5), (0.0, 2.5))
    if process == PROCESS_BR:
        return ((0.0, 2.0), (0.0, 2.0))
    raise InvalidArgumentError(f"unknown process {process!r}")


def stream(root_seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(root_seed, spawn_key=tuple(int(k) for k in key))


def field_seed(root_seed: int, i: int, j: int) -> np.random.SeedSequence:
    """Seed stream of training field (i, j); independent of generation order."""
    return stream(root_seed, STREAM_FIELD, i, j)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class SimConfig:
    """Corpus-level simulation settings."""

    process: str
    grid: GridSpec
    m: int
    n: int
    seed: int
    bounds: tuple[tuple[float, float], ...] = dc_field(default=None)  # type: ignore[assignment]
    n_spectral: int = 500

    def __post_init__(self):
        if self.process not in (PROCESS_GP, PROCESS_BR):
            raise InvalidArgumentError(f"unknown process {self.process!r}")
        if self.m < 1 or self.n < 1:
            raise InvalidArgumentError("m and n must be positive")
        if self.n_spectral < 1:
            raise InvalidArgumentError("n_spectral must be positive")
        bounds = self.bounds if self.bounds is not None else default_bounds(self.process)
        object.__setattr__(self, "bounds", tuple(tuple(map(float, b)) for b in bounds))
        if len(self.bounds) != 2:
            raise InvalidArgumentError("both processes have two parameters")

    @property
    def names(self) -> tuple[str, str]:
        return param_names(self.process)


def lhs_sample(m: int, bounds, rng) -> np.ndarray:
    """Latin hypercube draw: m points, one per stratum per axis, strictly inside.

    Each axis is cut into m equal strata; a random permutation assigns one
    stratum per point and the point is placed uniformly within it.
    """
    rng = _rng(rng)
    bounds = tuple(tuple(map(float, b)) for b in bounds)
    if m < 1:
        raise InvalidArgumentError("m must be positive")
    k = len(bounds)
    out = np.empty((m, k))
    for j, (lo, hi) in enumerate(bounds):
        if not lo < hi:
            raise InvalidArgumentError(f"bounds ({lo}, {hi}) must satisfy lo < hi")
        perm = rng.permutation(m)
        u = np.maximum(rng.random(m), 1e-12)  # keep the low edge open
        out[:, j] = lo + (hi - lo) * (perm + u) / m
    check_inside(out, bounds, "sampled parameter")
    return out


def exp_covariance(theta, grid: GridSpec) -> np.ndarray:
    """Exponential covariance nu * exp(-d / l) over the lattice sites."""
    nu, length = float(theta[0]), float(theta[1])
    if nu <= 0 or length <= 0:
        raise InvalidArgumentError(f"variance and length scale must be > 0, got {theta}")
    return nu * np.exp(-grid.pairwise_distances() / length)


def _chol_or_raise(mat: np.ndarray, theta) -> np.ndarray:
    try:
        return np.linalg.cholesky(mat)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(
            "covariance matrix is not positive definite", theta=tuple(np.asarray(theta))
        ) from exc


def simulate_gp(theta, grid: GridSpec, seed) -> np.ndarray:
    """One zero-mean Gaussian field with exponential covariance, shape (side, side)."""
    L = _chol_or_raise(exp_covariance(theta, grid), theta)
    return _gp_field(L, _rng(seed), grid.side)


def _gp_field(L: np.ndarray, rng: np.random.Generator, side: int) -> np.ndarray:
    z = rng.standard_normal(L.shape[0])
    return (L @ z).reshape(side, side)


def _br_increment_factor(theta, grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Factor F with F F^T = Cov of the anchored log-process increments.

    The anchor is the lattice's lower-left corner (linear index 0); its
    increment is identically zero, so the factor covers indices 1.. only.
    Returns (gamma_to_anchor over all sites, F).
    """
    from .br_pairwise import semivariogram

    dist = grid.pairwise_distances()
    gamma = semivariogram(dist, theta)
    gamma0 = gamma[0]
    cov = gamma0[:, None] + gamma0[None, :] - gamma
    sub = cov[1:, 1:]
    if sub.shape[0] == 0:
        return gamma0, np.zeros((0, 0))
    sub = 0.5 * (sub + sub.T)
    try:
        return gamma0, np.linalg.cholesky(sub)
    except np.linalg.LinAlgError:
        pass
    jitter = 1e-10 * float(np.mean(np.diag(sub)))
    try:
        return gamma0, np.linalg.cholesky(sub + jitter * np.eye(sub.shape[0]))
    except np.linalg.LinAlgError:
        pass
    # Smoothness 2 makes the increment covariance an exact rank-2 Gram matrix;
    # fall back to an eigendecomposition with negative eigenvalues clipped.
    w, v = np.linalg.eigh(sub)
    keep = w > max(w.max(), 0.0) * 1e-12
    if not np.any(keep):
        raise NotPositiveDefiniteError(
            "increment covariance has no positive eigenvalues", theta=tuple(np.asarray(theta))
        )
    return gamma0, v[:, keep] * np.sqrt(w[keep])


def _br_field(
    gamma0: np.ndarray, factor: np.ndarray, rng: np.random.Generator, side: int, n_spectral: int
) -> np.ndarray:
    # Poisson points via cumulative sums of unit exponentials; the running
    # maximum over n_spectral spectral functions approximates the max-stable
    # field. The anchor site is exact (its spectral weight is 1); sites with a
    # large semivariogram to the anchor carry truncation bias that shrinks as
    # n_spectral grows.
    eta = 1.0 / np.cumsum(rng.exponential(size=n_spectral))
    n_sites = gamma0.size
    if factor.shape[0] == 0:
        z = np.full(n_sites, eta[0])
        return z.reshape(side, side)
    zmat = rng.standard_normal((n_spectral, factor.shape[1]))
    eps = zmat @ factor.T
    spectral = np.exp(eps - gamma0[1:][None, :]) * eta[:, None]
    z = np.empty(n_sites)
    z[0] = eta[0]
    z[1:] = spectral.max(axis=0)
    return z.reshape(side, side)


def simulate_brown_resnick(theta, grid: GridSpec, seed, n_spectral: int = 500) -> np.ndarray:
    """One Brown-Resnick field with unit Frechet margins, shape (side, side).

    theta = (range, smoothness) with range > 0 and 0 < smoothness <= 2.
    Uses the spectral construction anchored at the lower-left corner,
    truncated at n_spectral terms (the anchor margin is exact; remote sites
    are biased low when the semivariogram there is large).
    """
    gamma0, factor = _br_increment_factor(theta, grid)
    return _br_field(gamma0, factor, _rng(seed), grid.side, int(n_spectral))


def build_first_class(config: SimConfig) -> PairDataset:
    """Simulate the dependent class: m LHS parameters, n fields each, label 1.

    Field (i, j) is drawn under seed stream (STREAM_FIELD, i, j), so corpora
    are reproducible field-by-field and independent of loop order.
    """
    grid = config.grid
    params = lhs_sample(config.m, config.bounds, _rng(stream(config.seed, STREAM_LHS)))
    fields = np.empty((config.m * config.n, grid.side, grid.side))
    for i in range(config.m):
        theta = params[i]
        if config.process == PROCESS_GP:
            L = _chol_or_raise(exp_covariance(theta, grid), theta)
            for j in range(config.n):
                rng = _rng(field_seed(config.seed, i, j))
                fields[i * config.n + j] = _gp_field(L, rng, grid.side)
        else:
            gamma0, factor = _br_increment_factor(theta, grid)
            for j in range(config.n):
                rng = _rng(field_seed(config.seed, i, j))
                fields[i * config.n + j] = _br_field(
                    gamma0, factor, rng, grid.side, config.n_spectral
                )
    return PairDataset(
        grid=grid,
        process=config.process,
        names=config.names,
        bounds=config.bounds,
        m=config.m,
        n=config.n,
        params=params,
        fields=fields,
        seed=config.seed,
    )


def column_permutations(m: int, n: int, seed: int) -> np.ndarray:
    """One uniform permutation of 0..m-1 per replicate column, shape (n, m)."""
    perms = np.empty((n, m), dtype=np.int64)
    for j in range(n):
        perms[j] = _rng(stream(seed, STREAM_PERM, j)).permutation(m)
    return perms


def apply_permutations(params: np.ndarray, perms: np.ndarray) -> np.ndarray:
    """Reassign parameters column-wise: output row i*n+j is params[perms[j, i]].

    Each column's permutation is a bijection on the m parameters, so every
    parameter appears exactly n times in the output, and fixed points (rows
    where the permutation maps i to itself) are kept as-is.
    """
    n, m = perms.shape
    k = params.shape[1]
    out = np.empty((m * n, k))
    for j in range(n):
        out[j::n] = params[perms[j]]
    return out


def build_second_class(dataset: PairDataset, seed: int) -> PairDataset:
    """Attach the shuffled class: per-column permutations of the parameters.

    Returns a new PairDataset whose perm_params pair field (i, j) with
    params[pi_j(i)] under label 2. Fields are shared, marginals preserved.
    """
    if dataset.perm_params is not None:
        raise InvalidArgumentError("second class already built")
    perms = column_permutations(dataset.m, dataset.n, seed)
    perm_params = apply_permutations(dataset.params, perms)
    return PairDataset(
        grid=dataset.grid,
        process=dataset.process,
        names=dataset.names,
        bounds=dataset.bounds,
        m=dataset.m,
        n=dataset.n,
        params=dataset.params,
        fields=dataset.fields,
        seed=dataset.seed,
        perm_params=perm_params,
        perm_seed=seed,
    )


def build_pair_dataset(config: SimConfig, perm_seed: int | None = None) -> PairDataset:
    """Both classes in one call; the permutation seed defaults to the root seed."""
    first = build_first_class(config)
    return build_second_class(first, config.seed if perm_seed is None else perm_seed)


_MANIFEST = "manifest.json"


def save_dataset(dataset: PairDataset, out_dir) -> None:
    """Persist a corpus as manifest.json plus f32 tensors (NLT containers)."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    manifest = {
        "format": "nlsurf-dataset-v1",
        "process": dataset.process,
        "names": list(dataset.names),
        "bounds": [list(b) for b in dataset.bounds],
        "m": dataset.m,
        "n": dataset.n,
        "seed": dataset.seed,
        "perm_seed": dataset.perm_seed,
        "grid": {
            "side": dataset.grid.side,
            "domain_min": dataset.grid.domain_min,
            "domain_max": dataset.grid.domain_max,
        },
    }
    write_json(os.path.join(out_dir, _MANIFEST), manifest)
    write_tensor(os.path.join(out_dir, "fields.nlt"), dataset.fields)
    write_tensor(os.path.join(out_dir, "params.nlt"), dataset.expanded_params())
    if dataset.perm_params is not None:
        write_tensor(os.path.join(out_dir, "permuted_params.nlt"), dataset.perm_params)
        labels = np.concatenate(
            [np.ones(dataset.m * dataset.n), np.full(dataset.m * dataset.n, 2.0)]
        )
        write_tensor(os.path.join(out_dir, "labels.nlt"), labels)


def load_dataset(in_dir) -> PairDataset:
    import os

    manifest = read_json(os.path.join(in_dir, _MANIFEST))
    if manifest.get("format") != "nlsurf-dataset-v1":
        raise FormatError(f"{in_dir}: not a dataset directory")
    grid = GridSpec(
        manifest["grid"]["side"], manifest["grid"]["domain_min"], manifest["grid"]["domain_max"]
    )
    m, n = manifest["m"], manifest["n"]
    fields = read_tensor(os.path.join(in_dir, "fields.nlt")).astype(np.float64)
    expanded = read_tensor(os.path.join(in_dir, "params.nlt")).astype(np.float64)
    params = expanded[::n].copy()
    perm_path = os.path.join(in_dir, "permuted_params.nlt")
    perm_params = (
        read_tensor(perm_path).astype(np.float64) if os.path.exists(perm_path) else None
    )
    return PairDataset(
        grid=grid,
        process=manifest["process"],
        names=tuple(manifest["names"]),
        bounds=tuple(tuple(b) for b in manifest["bounds"]),
        m=m,
        n=n,
        params=params,
        fields=fields,
        seed=manifest["seed"],
        perm_params=perm_params,
        perm_seed=manifest.get("perm_seed"),
    )
