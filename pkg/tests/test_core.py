import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pointspec import (
    CuboidWindow,
    DataError,
    PointPattern,
    WavenumberGrid,
    fourier_grid,
    grid_from_nodes,
    intensity_estimate,
    pair_intensity_estimate,
    radial_set_covariance,
    regular_grid,
    set_covariance,
)


class TestCuboidWindow:
    def test_basic_geometry(self):
        w = CuboidWindow([-5, -10], [5, 10])
        assert w.dim == 2
        assert w.lengths == (10.0, 20.0)
        assert w.volume == 200.0
        assert w.centre == (0.0, 0.0)
        assert w.is_centered
        assert w.diameter == pytest.approx(np.sqrt(500.0))

    def test_centered_constructor(self):
        w = CuboidWindow.centered([10, 10])
        assert w.lower == (-5.0, -5.0)
        assert w.upper == (5.0, 5.0)

    def test_rejects_degenerate_sides(self):
        with pytest.raises(DataError):
            CuboidWindow([0, 0], [1, 0])
        with pytest.raises(DataError):
            CuboidWindow([0], [np.inf])
        with pytest.raises(DataError):
            CuboidWindow([0, 0], [1])

    def test_contains_is_closed(self):
        w = CuboidWindow([0, 0], [1, 1])
        pts = np.array([[0.0, 0.0], [1.0, 1.0], [0.5, 0.5], [1.0001, 0.5]])
        assert list(w.contains(pts)) == [True, True, True, False]

    def test_translate_and_dilate(self):
        w = CuboidWindow([0, 0], [2, 2])
        t = w.translate([-1, -1])
        assert t.is_centered
        d = w.dilate(0.5)
        assert d.lower == (-0.5, -0.5)
        assert d.upper == (2.5, 2.5)
        with pytest.raises(DataError):
            w.dilate(-1)

    def test_centering_shift(self):
        w = CuboidWindow([2, 4], [4, 8])
        assert w.centering_shift() == (-3.0, -6.0)


class TestPointPattern:
    def test_accepts_interior_and_boundary_points(self):
        w = CuboidWindow([0, 0], [1, 1])
        p = PointPattern([[0.0, 0.0], [1.0, 1.0], [0.3, 0.7]], w)
        assert p.n == 3
        assert p.dim == 2
        assert not p.points.flags.writeable

    def test_rejects_outside_points(self):
        w = CuboidWindow([0, 0], [1, 1])
        with pytest.raises(DataError, match="outside"):
            PointPattern([[0.5, 0.5], [1.5, 0.5]], w)

    def test_rejects_duplicates(self):
        w = CuboidWindow([0, 0], [1, 1])
        with pytest.raises(DataError, match="duplicate"):
            PointPattern([[0.5, 0.5], [0.5, 0.5]], w)

    def test_empty_pattern(self):
        w = CuboidWindow([0, 0], [1, 1])
        p = PointPattern(np.empty((0, 2)), w)
        assert p.n == 0
        assert intensity_estimate(p) == 0.0
        assert pair_intensity_estimate(p) == 0.0

    def test_centered_translation_recorded(self):
        w = CuboidWindow([0, 0], [10, 10])
        p = PointPattern([[5.0, 5.0]], w)
        centered, shift = p.centered()
        assert shift == (-5.0, -5.0)
        assert centered.window.is_centered
        np.testing.assert_array_equal(centered.points, [[0.0, 0.0]])

    def test_centered_noop_when_already_centered(self):
        w = CuboidWindow.centered([10, 10])
        p = PointPattern([[1.0, 2.0]], w)
        centered, shift = p.centered()
        assert centered is p
        assert shift == (0.0, 0.0)


class TestIntensity:
    def test_point_count_over_volume(self):
        w = CuboidWindow([0, 0], [10, 10])
        rng = np.random.default_rng(1)
        pts = rng.uniform(0.01, 9.99, size=(100, 2))
        p = PointPattern(pts, w)
        assert intensity_estimate(p) == 1.0

    def test_pair_intensity(self):
        w = CuboidWindow([0, 0], [2, 2])
        p = PointPattern([[0.1, 0.1], [0.5, 0.5], [1.0, 1.0], [1.5, 1.5], [1.9, 0.3]], w)
        assert pair_intensity_estimate(p) == pytest.approx(5 * 4 / 16.0)


class TestGrids:
    def test_fourier_grid_nodes(self):
        w = CuboidWindow.centered([10, 20])
        g = fourier_grid(w, 2)
        assert g.m == 25
        assert g.is_lattice
        # nodes are integer multiples of the reciprocal lengths
        scaled = g.nodes * np.array([10.0, 20.0])
        np.testing.assert_allclose(scaled, np.round(scaled), atol=1e-9)

    def test_fourier_grid_per_dim_orders(self):
        w = CuboidWindow.centered([10, 10])
        g = fourier_grid(w, [1, 2])
        assert g.m == 15

    def test_fourier_grid_excludes_zero(self):
        w = CuboidWindow.centered([10, 10])
        g = fourier_grid(w, 1, exclude_zero=True)
        assert g.m == 8
        assert g.zero_excluded
        assert not np.any(np.all(g.nodes == 0, axis=1))

    def test_fourier_grid_hermitian_closure(self):
        w = CuboidWindow.centered([7, 13])
        g = fourier_grid(w, 3)
        node_set = {tuple(row) for row in g.nodes}
        for row in g.nodes:
            assert tuple(-row) in node_set

    def test_regular_grid_matches_protocol_shape(self):
        g = regular_grid(0.006, 0.3, dim=2)
        assert g.lattice_shape == (101, 101)
        assert g.m == 101 * 101
        axis = g.axes[0]
        np.testing.assert_array_equal(axis, -axis[::-1])
        assert axis[0] == pytest.approx(-0.3)

    def test_lattice_round_trip_with_zero_excluded(self):
        g = regular_grid(0.1, 0.2, dim=2, exclude_zero=True)
        assert g.m == 24
        vals = np.arange(24, dtype=float)
        lattice = g.to_lattice(vals)
        assert lattice.shape == (5, 5)
        assert np.isnan(lattice[2, 2])
        np.testing.assert_array_equal(g.from_lattice(lattice), vals)

    def test_duplicate_nodes_rejected(self):
        with pytest.raises(DataError, match="duplicate"):
            WavenumberGrid(np.array([[0.0, 0.0], [0.0, 0.0]]))

    def test_free_form_grid(self):
        g = grid_from_nodes(np.array([[0.1, 0.2], [0.3, 0.4]]))
        assert not g.is_lattice
        with pytest.raises(DataError):
            g.lattice_shape

    def test_within_mask(self):
        g = regular_grid(0.1, 0.3, dim=2)
        mask = g.within(0.2)
        assert mask.sum() == 25

    def test_rejects_nonfinite(self):
        with pytest.raises(DataError):
            WavenumberGrid(np.array([[np.nan, 0.0]]))


class TestSetCovariance:
    def test_at_zero_equals_volume(self):
        w = CuboidWindow.centered([3, 7])
        assert set_covariance(w, np.zeros(2)) == pytest.approx(21.0)

    def test_unit_square_half_shift(self):
        w = CuboidWindow.centered([1, 1])
        assert set_covariance(w, np.array([0.5, 0.0])) == pytest.approx(0.5)

    def test_vanishes_outside_difference_body(self):
        w = CuboidWindow.centered([2, 2])
        assert set_covariance(w, np.array([2.5, 0.0])) == 0.0
        assert set_covariance(w, np.array([2.0, 0.1])) == 0.0

    @settings(max_examples=50, deadline=None)
    @given(
        z1=st.floats(-4, 4, allow_nan=False),
        z2=st.floats(-4, 4, allow_nan=False),
    )
    def test_even_in_the_lag(self, z1, z2):
        w = CuboidWindow.centered([3, 5])
        z = np.array([z1, z2])
        assert set_covariance(w, z) == set_covariance(w, -z)

    def test_translation_invariant(self):
        a = CuboidWindow.centered([3, 5])
        b = CuboidWindow([10, 20], [13, 25])
        z = np.array([0.7, -1.2])
        assert set_covariance(a, z) == set_covariance(b, z)

    def test_vectorized_lags(self):
        w = CuboidWindow.centered([2, 2])
        zs = np.array([[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]])
        np.testing.assert_allclose(set_covariance(w, zs), [4.0, 2.0, 0.0])


class TestRadialSetCovariance:
    def test_at_zero_equals_volume(self):
        w = CuboidWindow.centered([4, 4])
        assert radial_set_covariance(w, 0.0) == pytest.approx(16.0)

    def test_unit_square_matches_closed_form(self):
        # for r below the shorter side nothing clips, so the quadrant average
        # of (lx - r cos t)(ly - r sin t) integrates in closed form to
        # lx*ly - 2r(lx+ly)/pi + r^2/pi
        w = CuboidWindow.centered([1, 1])
        for r in (0.25, 0.5, 0.9):
            exact = 1.0 - 4.0 * r / np.pi + r**2 / np.pi
            assert radial_set_covariance(w, r) == pytest.approx(exact, abs=1e-9)

    def test_rectangle_matches_closed_form(self):
        w = CuboidWindow.centered([2.0, 0.5])
        r = 0.4
        exact = 1.0 - 2 * r * 2.5 / np.pi + r**2 / np.pi
        assert radial_set_covariance(w, r) == pytest.approx(exact, abs=1e-9)

    def test_clipped_radius_matches_adaptive_quadrature(self):
        from scipy.integrate import quad

        w = CuboidWindow.centered([1, 1])
        r = 1.3

        def integrand(t):
            return max(1 - r * np.cos(t), 0.0) * max(1 - r * np.sin(t), 0.0)

        cuts = sorted([np.arccos(1 / r), np.arcsin(1 / r)])
        oracle = quad(integrand, 0, np.pi / 2, points=cuts, limit=200)[0] / (
            np.pi / 2
        )
        assert radial_set_covariance(w, r) == pytest.approx(oracle, abs=1e-9)

    def test_weight_callable_multiplies(self):
        w = CuboidWindow.centered([1, 1])
        r = 0.5
        plain = radial_set_covariance(w, r)
        doubled = radial_set_covariance(w, r, weight=lambda z: np.full(len(z), 2.0))
        assert doubled == pytest.approx(2 * plain, rel=1e-12)

    def test_monotone_decreasing(self):
        w = CuboidWindow.centered([5, 5])
        r = np.linspace(0, 7, 40)
        vals = radial_set_covariance(w, r)
        assert np.all(np.diff(vals) <= 1e-12)

    def test_vanishes_beyond_diameter(self):
        w = CuboidWindow.centered([2, 2])
        assert radial_set_covariance(w, 3.0) == 0.0

    def test_three_dimensional_window(self):
        w = CuboidWindow.centered([2, 2, 2])
        assert radial_set_covariance(w, 0.0) == pytest.approx(8.0)
        assert radial_set_covariance(w, 4.0) == 0.0
        # interior value against a crude Monte-Carlo oracle
        rng = np.random.default_rng(3)
        u = rng.normal(size=(200000, 3))
        u /= np.linalg.norm(u, axis=1)[:, None]
        mc = set_covariance(w, 1.0 * u).mean()
        assert radial_set_covariance(w, 1.0) == pytest.approx(mc, rel=5e-3)

    def test_rejects_negative_radius(self):
        w = CuboidWindow.centered([2, 2])
        with pytest.raises(DataError):
            radial_set_covariance(w, -0.5)
