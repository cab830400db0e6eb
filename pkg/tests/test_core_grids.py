import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nlsurf.errors import InvalidArgumentError
from nlsurf.grids import (
    GridSpec,
    LabeledPair,
    Parameter,
    ParameterGrid,
    SpatialField,
    Surface,
    check_inside,
    make_parameter_grid,
)


class TestGridSpec:
    def test_coords_span_domain(self):
        g = GridSpec(5, -10.0, 10.0)
        np.testing.assert_allclose(g.coords(), [-10, -5, 0, 5, 10])

    def test_locations_row_major_lower_left_first(self):
        g = GridSpec(3, 0.0, 2.0)
        loc = g.locations()
        assert loc.shape == (9, 2)
        np.testing.assert_array_equal(loc[0], [0.0, 0.0])
        np.testing.assert_array_equal(loc[1], [0.0, 1.0])
        np.testing.assert_array_equal(loc[3], [1.0, 0.0])
        np.testing.assert_array_equal(loc[8], [2.0, 2.0])

    def test_single_site_grid(self):
        g = GridSpec(1)
        assert g.n_sites == 1
        assert g.locations().shape == (1, 2)

    def test_pairwise_distances(self):
        g = GridSpec(2, 0.0, 1.0)
        d = g.pairwise_distances()
        assert d.shape == (4, 4)
        np.testing.assert_array_equal(np.diag(d), 0.0)
        np.testing.assert_allclose(d[0, 3], np.sqrt(2.0))
        np.testing.assert_allclose(d, d.T)

    def test_invalid_side_or_domain(self):
        with pytest.raises(InvalidArgumentError):
            GridSpec(0)
        with pytest.raises(InvalidArgumentError):
            GridSpec(3, 1.0, 1.0)


class TestParameter:
    def test_basic(self):
        p = Parameter(np.array([1.0, 2.0]), ("variance", "length_scale"))
        assert p.k == 2
        assert p.as_dict() == {"variance": 1.0, "length_scale": 2.0}

    def test_rejects_non_finite(self):
        with pytest.raises(InvalidArgumentError):
            Parameter(np.array([1.0, np.nan]), ("a", "b"))

    def test_rejects_name_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            Parameter(np.array([1.0]), ("a", "b"))

    def test_rejects_empty(self):
        with pytest.raises(InvalidArgumentError):
            Parameter(np.array([]), ())


def test_check_inside():
    check_inside([0.5, 1.5], ((0, 1), (1, 2)))
    with pytest.raises(InvalidArgumentError):
        check_inside([0.0, 1.5], ((0, 1), (1, 2)))
    with pytest.raises(InvalidArgumentError):
        check_inside([0.5, 2.0], ((0, 1), (1, 2)))


class TestSpatialField:
    def test_flat_matches_locations_order(self):
        g = GridSpec(2, 0.0, 1.0)
        f = SpatialField(np.array([[1.0, 2.0], [3.0, 4.0]]), g)
        np.testing.assert_array_equal(f.flat(), [1, 2, 3, 4])

    def test_shape_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            SpatialField(np.zeros((2, 3)), GridSpec(2))

    def test_non_finite_rejected(self):
        with pytest.raises(InvalidArgumentError):
            SpatialField(np.full((2, 2), np.inf), GridSpec(2))


class TestParameterGrid:
    def test_axis_values_exclude_low_include_high(self):
        g = make_parameter_grid([(0.0, 2.0)], [40], ["x"])
        vals = g.axis_values(0)
        assert vals.size == 40
        np.testing.assert_allclose(vals[0], 0.05)
        np.testing.assert_allclose(vals[-1], 2.0)
        np.testing.assert_allclose(np.diff(vals), 0.05)

    def test_40x40_square(self):
        g = make_parameter_grid([(0.0, 2.0), (0.0, 2.0)], [40, 40], ["a", "b"])
        assert g.n_points == 1600
        assert g.spacings == (0.05, 0.05)
        np.testing.assert_allclose(g.cell_volume(), 0.0025)

    def test_count_one_gives_high_endpoint(self):
        g = make_parameter_grid([(0.0, 1.0)], [1], ["x"])
        np.testing.assert_array_equal(g.axis_values(0), [1.0])

    def test_points_row_major(self):
        g = make_parameter_grid([(0.0, 2.0), (0.0, 3.0)], [2, 3], ["a", "b"])
        pts = g.points()
        a = g.axis_values(0)
        b = g.axis_values(1)
        expected = [(x, y) for x in a for y in b]
        np.testing.assert_allclose(pts, expected)

    def test_point_and_index_round_trip(self):
        g = make_parameter_grid([(0.0, 2.0), (0.0, 2.0)], [7, 5], ["a", "b"])
        for idx in range(g.n_points):
            p = g.point(idx)
            assert g.index_of(p.values) == idx
        np.testing.assert_allclose(g.points()[12], g.point(12).values)

    def test_index_of_rejects_off_lattice(self):
        g = make_parameter_grid([(0.0, 2.0)], [4], ["x"])
        with pytest.raises(InvalidArgumentError):
            g.index_of([0.7])
        with pytest.raises(InvalidArgumentError):
            g.index_of([0.0])

    @given(
        st.integers(min_value=1, max_value=60),
        st.floats(min_value=-5, max_value=5, allow_nan=False),
        st.floats(min_value=0.1, max_value=10, allow_nan=False),
    )
    def test_points_strictly_above_low_at_most_high(self, count, lo, width):
        hi = lo + width
        g = make_parameter_grid([(lo, hi)], [count], ["x"])
        vals = g.axis_values(0)
        assert np.all(vals > lo)
        assert vals[-1] <= hi + 1e-12
        assert vals.size == count

    def test_validation(self):
        with pytest.raises(InvalidArgumentError):
            make_parameter_grid([(1.0, 0.0)], [4], ["x"])
        with pytest.raises(InvalidArgumentError):
            make_parameter_grid([(0.0, 1.0)], [0], ["x"])
        with pytest.raises(InvalidArgumentError):
            make_parameter_grid([], [], [])
        with pytest.raises(InvalidArgumentError):
            make_parameter_grid([(0.0, 1.0)], [4, 4], ["x"])


class TestSurface:
    def _grid(self):
        return make_parameter_grid([(0.0, 1.0)], [4], ["x"])

    def test_accepts_minus_inf(self):
        s = Surface(self._grid(), np.array([0.0, -np.inf, 1.0, 2.0]), "exact-gp")
        assert s.values[1] == -np.inf

    def test_rejects_nan_and_plus_inf(self):
        with pytest.raises(InvalidArgumentError):
            Surface(self._grid(), np.array([0.0, np.nan, 1.0, 2.0]), "exact-gp")
        with pytest.raises(InvalidArgumentError):
            Surface(self._grid(), np.array([0.0, np.inf, 1.0, 2.0]), "exact-gp")

    def test_rejects_wrong_length(self):
        with pytest.raises(InvalidArgumentError):
            Surface(self._grid(), np.zeros(5), "exact-gp")

    def test_rejects_unknown_kind(self):
        with pytest.raises(InvalidArgumentError):
            Surface(self._grid(), np.zeros(4), "mystery")


def test_labeled_pair_label_validation():
    f = SpatialField(np.zeros((2, 2)), GridSpec(2))
    p = Parameter(np.array([1.0]), ("x",))
    LabeledPair(f, p, 1)
    LabeledPair(f, p, 2)
    with pytest.raises(InvalidArgumentError):
        LabeledPair(f, p, 0)
