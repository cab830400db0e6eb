import numpy as np
import pytest

from nlsurf.errors import InvalidArgumentError
from nlsurf.gp_likelihood import gp_log_likelihood, gp_surface
from nlsurf.grids import GridSpec, SpatialField, make_parameter_grid
from nlsurf.simulate import exp_covariance, simulate_gp


def dense_oracle(y, theta, grid):
    """Reference log density via explicit inverse and slogdet."""
    sigma = exp_covariance(theta, grid)
    s = y.size
    _, logdet = np.linalg.slogdet(sigma)
    quad = y @ np.linalg.inv(sigma) @ y
    return -0.5 * quad - 0.5 * s * np.log(2 * np.pi) - 0.5 * logdet


class TestLogLikelihood:
    def test_matches_dense_oracle(self, rng):
        for _ in range(40):
            side = int(rng.integers(2, 7))
            grid = GridSpec(side, 0.0, float(rng.uniform(1, 8)))
            theta = rng.uniform(0.1, 2.4, size=2)
            y = simulate_gp(theta, grid, rng)
            got = gp_log_likelihood(y, theta, grid)
            want = dense_oracle(y.ravel(), theta, grid)
            assert abs(got - want) <= 1e-8 * max(1.0, abs(want))

    def test_single_site_closed_form(self):
        grid = GridSpec(1)
        y, nu = 0.7, 1.9
        got = gp_log_likelihood(np.array([[y]]), (nu, 1.0), grid)
        want = -0.5 * y * y / nu - 0.5 * np.log(2 * np.pi) - 0.5 * np.log(nu)
        np.testing.assert_allclose(got, want, rtol=1e-14)

    def test_two_site_closed_form(self):
        # unit-variance pair at distance 1, length 1, observed zeros:
        # density is -log(2 pi) - 0.5 log(1 - e^-2)
        from scipy.linalg.lapack import dpotrf

        from nlsurf.gp_likelihood import _loglik_from_factor

        rho = np.exp(-1.0)
        sigma = np.asfortranarray([[1.0, rho], [rho, 1.0]])
        chol, info = dpotrf(sigma, lower=1, overwrite_a=1)
        assert info == 0
        got = _loglik_from_factor(chol, np.zeros(2))
        want = -np.log(2 * np.pi) - 0.5 * np.log(1 - np.exp(-2.0))
        np.testing.assert_allclose(got, want, rtol=1e-14)

    def test_scale_equivariance(self, rng):
        # scaling the field by c and the variance by c^2 shifts the density
        # by -s log c
        grid = GridSpec(3, 0.0, 2.0)
        y = simulate_gp((1.0, 1.0), grid, rng)
        base = gp_log_likelihood(y, (0.8, 1.1), grid)
        for c in (0.5, 2.0, 3.7):
            scaled = gp_log_likelihood(c * y, (c * c * 0.8, 1.1), grid)
            np.testing.assert_allclose(scaled, base - grid.n_sites * np.log(c), rtol=1e-10)

    def test_accepts_spatial_field_and_flat_vector(self, rng):
        grid = GridSpec(3, 0.0, 2.0)
        y = simulate_gp((1.0, 1.0), grid, rng)
        a = gp_log_likelihood(SpatialField(y, grid), (1.0, 1.0), grid)
        b = gp_log_likelihood(y.ravel(), (1.0, 1.0), grid)
        assert a == b

    def test_rejects_shape_and_grid_mismatch(self):
        grid = GridSpec(3)
        with pytest.raises(InvalidArgumentError):
            gp_log_likelihood(np.zeros((2, 2)), (1.0, 1.0), grid)
        with pytest.raises(InvalidArgumentError):
            gp_log_likelihood(SpatialField(np.zeros((2, 2)), GridSpec(2)), (1.0, 1.0), grid)


class TestSurface:
    def test_matches_pointwise_evaluation(self, rng):
        grid = GridSpec(3, 0.0, 2.0)
        y = simulate_gp((1.0, 1.0), grid, rng)
        pg = make_parameter_grid([(0.0, 2.0), (0.0, 2.0)], [5, 4], ["variance", "length_scale"])
        surf = gp_surface(y, pg, grid)
        assert surf.kind == "exact-gp"
        assert surf.metadata["failed_points"] == 0
        pts = pg.points()
        for idx in (0, 7, 13, 19):
            np.testing.assert_allclose(
                surf.values[idx], gp_log_likelihood(y, pts[idx], grid), rtol=1e-12
            )

    def test_row_major_axis_order(self, rng):
        # index inu * n_len + il must hold (variance slowest)
        grid = GridSpec(2, 0.0, 1.0)
        y = simulate_gp((1.0, 1.0), grid, rng)
        pg = make_parameter_grid([(0.0, 2.0), (0.0, 2.0)], [3, 2], ["variance", "length_scale"])
        surf = gp_surface(y, pg, grid)
        nus, lens = pg.axis_values(0), pg.axis_values(1)
        np.testing.assert_allclose(
            surf.values[1 * 2 + 0], gp_log_likelihood(y, (nus[1], lens[0]), grid), rtol=1e-12
        )

    def test_degenerate_point_gets_minus_inf(self, rng):
        # a length scale of ~1e16 rounds the covariance to all-ones (singular)
        grid = GridSpec(3, 0.0, 2.0)
        y = simulate_gp((1.0, 1.0), grid, rng)
        pg = make_parameter_grid(
            [(0.0, 1.0), (0.0, 2.0e16)], [1, 1], ["variance", "length_scale"]
        )
        surf = gp_surface(y, pg, grid)
        assert surf.values[0] == -np.inf
        assert surf.metadata["failed_points"] == 1

    def test_rejects_non_positive_grid(self, rng):
        grid = GridSpec(2, 0.0, 1.0)
        y = simulate_gp((1.0, 1.0), grid, rng)
        pg = make_parameter_grid([(-1.0, 1.0), (0.0, 2.0)], [4, 4], ["a", "b"])
        with pytest.raises(InvalidArgumentError):
            gp_surface(y, pg, grid)

    def test_argmax_lands_near_truth(self):
        # one 25x25 field at theta = (1, 1): the exact surface should peak
        # within two grid cells of the truth
        grid = GridSpec(25)
        truth = np.array([1.0, 1.0])
        y = simulate_gp(truth, grid, 20260825)
        pg = make_parameter_grid(
            [(0.0, 2.0), (0.0, 2.0)], [40, 40], ["variance", "length_scale"]
        )
        surf = gp_surface(y, pg, grid)
        best = pg.points()[int(np.argmax(surf.values))]
        assert np.linalg.norm(best - truth) <= 0.3
