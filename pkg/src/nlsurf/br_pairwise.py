"""Pairwise likelihood for Brown-Resnick fields and its curvature adjustment.

The bivariate margin of a Brown-Resnick field with semivariogram
gamma(h) = (|h| / range)^smoothness is the Husler-Reiss distribution with
dependence a(h) = sqrt(2 gamma(h)). Its exponent measure is

    V(z1, z2) = Phi(w) / z1 + Phi(v) / z2,
    w = a/2 + log(z2 / z1) / a,   v = a - w,

and the pair density is exp(-V) * (V1 V2 - V12) built from the partial
derivatives below. The pairwise log-likelihood sums log densities over all
site pairs within distance delta.

Pairwise likelihoods are mis-calibrated; the Chandler-Bate adjustment
rescales the surface through theta -> theta_hat + C (theta - theta_hat)
where C is assembled from matrix square roots of the estimated sensitivity
H and variability J of the pairwise score.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import ndtr

from .errors import (
    AdjustmentUnavailableError,
    FormatError,
    InvalidArgumentError,
    NotPositiveDefiniteError,
)
from .grids import (
    KIND_PAIRWISE,
    KIND_PAIRWISE_ADJUSTED,
    GridSpec,
    ParameterGrid,
    Surface,
)
from .tensorio import read_json, write_json

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)

SMOOTHNESS_MAX = 2.0


def theta_valid(theta) -> bool:
    """Whether (range, smoothness) lies in the model domain (0,inf) x (0, 2]."""
    r, s = float(theta[0]), float(theta[1])
    return r > 0.0 and 0.0 < s <= SMOOTHNESS_MAX


def semivariogram(dist, theta) -> np.ndarray:
    """Power semivariogram (d / range)^smoothness, elementwise over dist >= 0."""
    if not theta_valid(theta):
        raise InvalidArgumentError(
            f"(range, smoothness) must lie in (0,inf) x (0,{SMOOTHNESS_MAX}], got {tuple(theta)}"
        )
    return np.power(np.asarray(dist, dtype=np.float64) / float(theta[0]), float(theta[1]))


def hr_exponent(z1, z2, a):
    """Husler-Reiss exponent V and partials (V, V1, V2, V12), elementwise.

    z1, z2 > 0 are the pair values on the unit Frechet scale and a > 0 the
    dependence parameter. Broadcasts like a numpy ufunc.
    """
    z1 = np.asarray(z1, dtype=np.float64)
    z2 = np.asarray(z2, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    if np.any(z1 <= 0) or np.any(z2 <= 0) or np.any(a <= 0):
        raise InvalidArgumentError("hr_exponent needs z1, z2, a all > 0")
    w = 0.5 * a + np.log(z2 / z1) / a
    v = a - w
    phi_w = ndtr(w)
    phi_v = ndtr(v)
    dens_w = _INV_SQRT_2PI * np.exp(-0.5 * w * w)
    dens_v = _INV_SQRT_2PI * np.exp(-0.5 * v * v)
    V = phi_w / z1 + phi_v / z2
    V1 = -phi_w / z1**2 - dens_w / (a * z1**2) + dens_v / (a * z1 * z2)
    V2 = dens_w / (a * z1 * z2) - phi_v / z2**2 - dens_v / (a * z2**2)
    V12 = (
        -dens_w / (a * z1**2 * z2)
        + w * dens_w / (a**2 * z1**2 * z2)
        + v * dens_v / (a**2 * z1 * z2**2)
        - dens_v / (a * z1 * z2**2)
    )
    return V, V1, V2, V12


@dataclass(frozen=True)
class PairScheme:
    """Site pairs entering the pairwise likelihood: all pairs within delta."""

    grid: GridSpec
    delta: float
    pairs: np.ndarray  # (P, 2) site indices, i < j
    dist: np.ndarray  # (P,) pair distances, all > 0

    @property
    def n_pairs(self) -> int:
        return self.pairs.shape[0]


def build_pair_scheme(grid: GridSpec, delta: float) -> PairScheme:
    """Enumerate site pairs with 0 < distance <= delta (at least one required)."""
    if delta <= 0:
        raise InvalidArgumentError(f"delta must be > 0, got {delta}")
    dmat = grid.pairwise_distances()
    iu, ju = np.triu_indices(grid.n_sites, k=1)
    d = dmat[iu, ju]
    keep = d <= delta
    if not np.any(keep):
        raise InvalidArgumentError(f"delta={delta} captures no site pairs on this grid")
    pairs = np.column_stack([iu[keep], ju[keep]]).astype(np.int64)
    return PairScheme(grid=grid, delta=float(delta), pairs=pairs, dist=d[keep])


@dataclass(frozen=True)
class _FieldPrep:
    """Per-field quantities reused across many theta evaluations."""

    z1: np.ndarray
    z2: np.ndarray
    log_ratio: np.ndarray  # log(z2 / z1)
    ratio: np.ndarray  # z2 / z1
    inv1: np.ndarray
    inv2: np.ndarray
    dist_unique: np.ndarray
    dist_index: np.ndarray


def _prepare_field(y, scheme: PairScheme) -> _FieldPrep:
    if hasattr(y, "flat") and not isinstance(y, np.ndarray):
        yflat = y.flat()
    else:
        arr = np.asarray(y, dtype=np.float64)
        yflat = arr.ravel()
    if yflat.size != scheme.grid.n_sites:
        raise InvalidArgumentError("field does not match the pair scheme's grid")
    if np.any(yflat <= 0):
        raise InvalidArgumentError("pairwise likelihood needs strictly positive field values")
    z1 = yflat[scheme.pairs[:, 0]]
    z2 = yflat[scheme.pairs[:, 1]]
    dist_unique, dist_index = np.unique(scheme.dist, return_inverse=True)
    return _FieldPrep(
        z1=z1,
        z2=z2,
        log_ratio=np.log(z2 / z1),
        ratio=z2 / z1,
        inv1=1.0 / z1,
        inv2=1.0 / z2,
        dist_unique=dist_unique,
        dist_index=dist_index,
    )


def _pairwise_ll(prep: _FieldPrep, theta) -> float:
    # One vectorized sweep over all pairs. phi(v) is recovered from phi(w)
    # through the exact identity phi(w) z2 = phi(v) z1, saving an exp.
    a_unique = np.sqrt(2.0 * semivariogram(prep.dist_unique, theta))
    a = a_unique[prep.dist_index]
    w = 0.5 * a + prep.log_ratio / a
    v = a - w
    phi_w = ndtr(w)
    phi_v = ndtr(v)
    dens_w = _INV_SQRT_2PI * np.exp(-0.5 * w * w)
    dens_v = dens_w * prep.ratio
    inv1, inv2 = prep.inv1, prep.inv2
    inv11 = inv1 * inv1
    inv22 = inv2 * inv2
    inv12 = inv1 * inv2
    aw = dens_w / a
    av = dens_v / a
    V = phi_w * inv1 + phi_v * inv2
    V1 = -(phi_w + aw) * inv11 + av * inv12
    V2 = aw * inv12 - (phi_v + av) * inv22
    V12 = aw * inv11 * inv2 * (w / a - 1.0) + av * inv1 * inv22 * (v / a - 1.0)
    dens = V1 * V2 - V12
    if np.any(dens <= 0) or not np.all(np.isfinite(dens)):
        return -np.inf
    return float(np.sum(np.log(dens) - V))


def pairwise_log_likelihood(y, theta, scheme: PairScheme) -> float:
    """Sum of bivariate Husler-Reiss log densities over the scheme's pairs.

    theta = (range, smoothness) must lie in (0, inf) x (0, 2]; field values
    must be strictly positive (unit Frechet scale). Returns -inf if a pair
    density underflows to a non-positive value.
    """
    return _pairwise_ll(_prepare_field(y, scheme), theta)


def pairwise_surface(y, param_grid: ParameterGrid, scheme: PairScheme) -> Surface:
    """Pairwise log-likelihood at every grid point (axis 0 range, axis 1 smoothness).

    Grid points outside (0, inf) x (0, 2] get the -inf sentinel and are
    counted in metadata, as are points where the density degenerates.
    """
    prep = _prepare_field(y, scheme)
    points = param_grid.points()
    values = np.empty(param_grid.n_points)
    invalid = 0
    for idx, theta in enumerate(points):
        if not theta_valid(theta):
            values[idx] = -np.inf
            invalid += 1
            continue
        values[idx] = _pairwise_ll(prep, theta)
    return Surface(
        grid=param_grid,
        values=values,
        kind=KIND_PAIRWISE,
        metadata={
            "delta": scheme.delta,
            "n_pairs": scheme.n_pairs,
            "invalid_points": invalid,
        },
    )


# ---------------------------------------------------------------------------
# Curvature (Godambe information) estimation and the Chandler-Bate adjustment.


_STENCILS = ((1, 1), (-1, -1), (1, -1), (-1, 1))


def fd_gradient(f: Callable, theta, h: float) -> np.ndarray:
    """Forward-difference gradient (f(theta + h e_i) - f(theta)) / h."""
    theta = np.asarray(theta, dtype=np.float64)
    base = f(theta)
    grad = np.empty(theta.size)
    for i in range(theta.size):
        step = theta.copy()
        step[i] += h
        grad[i] = (f(step) - base) / h
    return grad


def fd_hessian(f: Callable, theta, h: float) -> Optional[np.ndarray]:
    """First negative-definite one-sided FD Hessian over the stencil ladder.

    Stencils are tried in the fixed order upper-right, lower-left,
    lower-right, upper-left (signs of the two axis steps). Returns None when
    no stencil yields a finite, strictly negative-definite matrix.
    """
    theta = np.asarray(theta, dtype=np.float64)
    if theta.size != 2:
        raise InvalidArgumentError("fd_hessian handles two-parameter models")
    cache: dict[tuple[int, int], float] = {}

    def ev(d1: int, d2: int) -> float:
        key = (d1, d2)
        if key not in cache:
            cache[key] = f(theta + h * np.array([d1, d2], dtype=np.float64))
        return cache[key]

    for s1, s2 in _STENCILS:
        d11 = (ev(2 * s1, 0) - 2.0 * ev(s1, 0) + ev(0, 0)) / h**2
        d22 = (ev(0, 2 * s2) - 2.0 * ev(0, s2) + ev(0, 0)) / h**2
        d12 = (ev(s1, s2) - ev(s1, 0) - ev(0, s2) + ev(0, 0)) / (s1 * s2 * h**2)
        hess = np.array([[d11, d12], [d12, d22]])
        if np.all(np.isfinite(hess)) and np.all(np.linalg.eigvalsh(hess) < 0):
            return hess
    return None


def _sqrt_matrix(mat: np.ndarray, method: str) -> np.ndarray:
    """A root M with M^T M = mat; 'cholesky' upper factor or symmetric 'eigen' root."""
    if method == "cholesky":
        try:
            return np.linalg.cholesky(mat).T
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefiniteError("matrix square root failed") from exc
    if method == "eigen":
        w, vecs = np.linalg.eigh(mat)
        if np.any(w <= 0):
            raise NotPositiveDefiniteError("matrix has non-positive eigenvalues")
        return (vecs * np.sqrt(w)) @ vecs.T
    raise InvalidArgumentError(f"unknown sqrt method {method!r}")


def adjustment_matrix(H: np.ndarray, J: np.ndarray, method: str = "cholesky") -> np.ndarray:
    """C = M^{-1} M_adj with M^T M = H and M_adj^T M_adj = H J^{-1} H.

    By construction C^T H C = H J^{-1} H for either square-root convention.
    When H == J the adjusted curvature equals H and C is the identity; that
    case short-circuits so the identity is exact.
    """
    H = np.asarray(H, dtype=np.float64)
    J = np.asarray(J, dtype=np.float64)
    if np.array_equal(H, J):
        return np.eye(H.shape[0])
    try:
        h_adj = H @ np.linalg.solve(J, H)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("variability matrix J is singular") from exc
    h_adj = 0.5 * (h_adj + h_adj.T)
    m = _sqrt_matrix(H, method)
    m_adj = _sqrt_matrix(h_adj, method)
    return np.linalg.solve(m, m_adj)


@dataclass
class AdjustmentModel:
    """Everything needed to apply the curvature adjustment at new fields."""

    theta_star: np.ndarray
    H: np.ndarray
    J: np.ndarray
    C: np.ndarray
    sqrt_method: str
    fd_step: float
    delta: float
    n_fields: int
    n_used: int
    theta_hat_pwl: Optional[np.ndarray] = None


def estimate_godambe(
    theta_star,
    grid: GridSpec,
    delta: float,
    n_fields: int = 1000,
    seed: int = 0,
    fd_step: float = 0.05,
    n_spectral: int = 500,
    sqrt_method: str = "cholesky",
    loglik_factory: Optional[Callable] = None,
) -> AdjustmentModel:
    """Monte Carlo estimate of the pairwise score's variability J and sensitivity H.

    Simulates n_fields Brown-Resnick fields at theta_star (seed streams
    (STREAM_ADJ, i)), differentiates the pairwise log-likelihood by forward
    differences (step fd_step), and averages: J over all fields' score outer
    products, H over the negative of the Hessian stencils that pass the
    negative-definite filter (their count is n_used). loglik_factory, mainly
    for testing, replaces the per-field log-likelihood builder; it maps a
    field index to a callable theta -> loglik.

    Raises AdjustmentUnavailableError when no field yields a usable Hessian.
    """
    from .simulate import STREAM_ADJ, simulate_brown_resnick, stream

    theta_star = np.asarray(theta_star, dtype=np.float64)
    if not theta_valid(theta_star):
        raise InvalidArgumentError(f"theta_star {tuple(theta_star)} outside the model domain")
    for i in range(theta_star.size):
        probe = theta_star.copy()
        probe[i] += fd_step
        if not theta_valid(probe):
            raise InvalidArgumentError(
                "theta_star is within fd_step of the domain boundary; shrink fd_step"
            )
    if n_fields < 1:
        raise InvalidArgumentError("n_fields must be positive")
    scheme = build_pair_scheme(grid, delta)

    def default_factory(i: int) -> Callable:
        y = simulate_brown_resnick(
            theta_star, grid, stream(seed, STREAM_ADJ, i), n_spectral=n_spectral
        )
        prep = _prepare_field(y, scheme)

        def loglik(theta) -> float:
            if not theta_valid(theta):
                return -np.inf
            return _pairwise_ll(prep, theta)

        return loglik

    factory = loglik_factory if loglik_factory is not None else default_factory
    k = theta_star.size
    score_outer = np.zeros((k, k))
    hess_sum = np.zeros((k, k))
    n_used = 0
    for i in range(n_fields):
        f = factory(i)
        cache: dict[tuple, float] = {}

        def memo(theta, _f=f, _c=cache) -> float:
            key = tuple(np.round((theta - theta_star) / fd_step).astype(int))
            if key not in _c:
                _c[key] = _f(theta)
            return _c[key]

        g = fd_gradient(memo, theta_star, fd_step)
        score_outer += np.outer(g, g)
        hess = fd_hessian(memo, theta_star, fd_step)
        if hess is not None:
            hess_sum += hess
            n_used += 1
    J = score_outer / n_fields
    if n_used == 0:
        raise AdjustmentUnavailableError(
            "no negative-definite Hessian stencil in any field",
            theta_star=tuple(theta_star),
            n_fields=n_fields,
        )
    H = -hess_sum / n_used
    C = adjustment_matrix(H, J, sqrt_method)
    return AdjustmentModel(
        theta_star=theta_star,
        H=H,
        J=J,
        C=C,
        sqrt_method=sqrt_method,
        fd_step=fd_step,
        delta=float(delta),
        n_fields=n_fields,
        n_used=n_used,
    )


def adjusted_surface(
    y,
    param_grid: ParameterGrid,
    scheme: PairScheme,
    model: AdjustmentModel,
    unadjusted: Optional[Surface] = None,
) -> Surface:
    """Pairwise surface re-evaluated at theta_hat + C (theta - theta_hat).

    theta_hat is the grid MLE of the unadjusted surface for this field
    (computed here unless supplied). Transformed points falling outside the
    model domain get the -inf sentinel. With C exactly the identity the
    transform is skipped, so the output equals the unadjusted surface.
    """
    from .inference import grid_mle

    prep = _prepare_field(y, scheme)
    if unadjusted is None:
        unadjusted = pairwise_surface(y, param_grid, scheme)
    theta_hat, _ = grid_mle(unadjusted)
    theta_hat = theta_hat.values
    identity = bool(np.array_equal(model.C, np.eye(model.C.shape[0])))
    points = param_grid.points()
    values = np.empty(param_grid.n_points)
    out_of_domain = 0
    for idx, theta in enumerate(points):
        mapped = theta if identity else theta_hat + model.C @ (theta - theta_hat)
        if not theta_valid(mapped):
            values[idx] = -np.inf
            out_of_domain += 1
            continue
        values[idx] = _pairwise_ll(prep, mapped)
    return Surface(
        grid=param_grid,
        values=values,
        kind=KIND_PAIRWISE_ADJUSTED,
        metadata={
            "delta": scheme.delta,
            "sqrt_method": model.sqrt_method,
            "theta_hat": [float(t) for t in theta_hat],
            "out_of_domain_points": out_of_domain,
        },
    )


def save_adjustment(model: AdjustmentModel, path) -> None:
    """Persist an adjustment as JSON (matrices as row-major nested lists)."""
    doc = {
        "format": "nlsurf-adjustment-v1",
        "theta_star": [float(t) for t in model.theta_star],
        "H": [[float(v) for v in row] for row in model.H],
        "J": [[float(v) for v in row] for row in model.J],
        "C": [[float(v) for v in row] for row in model.C],
        "sqrt_method": model.sqrt_method,
        "fd_step": model.fd_step,
        "delta": model.delta,
        "n_fields": model.n_fields,
        "n_used": model.n_used,
        "theta_hat_pwl": None
        if model.theta_hat_pwl is None
        else [float(t) for t in model.theta_hat_pwl],
    }
    write_json(path, doc)


def load_adjustment(path) -> AdjustmentModel:
    doc = read_json(path)
    if doc.get("format") != "nlsurf-adjustment-v1":
        raise FormatError(f"{path}: not an adjustment file")
    return AdjustmentModel(
        theta_star=np.asarray(doc["theta_star"], dtype=np.float64),
        H=np.asarray(doc["H"], dtype=np.float64),
        J=np.asarray(doc["J"], dtype=np.float64),
        C=np.asarray(doc["C"], dtype=np.float64),
        sqrt_method=doc["sqrt_method"],
        fd_step=doc["fd_step"],
        delta=doc["delta"],
        n_fields=doc["n_fields"],
        n_used=doc["n_used"],
        theta_hat_pwl=None
        if doc.get("theta_hat_pwl") is None
        else np.asarray(doc["theta_hat_pwl"], dtype=np.float64),
    )
