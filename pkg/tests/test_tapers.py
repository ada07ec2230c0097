import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial.legendre import leggauss

from pointspec import (
    BoxTaper,
    CuboidWindow,
    DataError,
    HermiteRadialTaper,
    NumericalError,
    SineTaper,
    UniformPairTaper,
    cross_norm4,
    sine_taper_family,
    spectral_bandwidth,
    spectral_window,
    taper_from_spec,
    tapered_fourier_spacing,
)

W10 = CuboidWindow.centered([10, 10])


def midpoint_nodes(ell, n):
    return (np.arange(n) + 0.5) / n * ell - ell / 2


def quad_transform_midpoint(taper, k, n=2048):
    """Tensor midpoint-rule transform, independent of the closed forms."""
    w = taper.window
    axes = [midpoint_nodes(ell, n) for ell in w.lengths]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    h = taper.evaluate(pts)
    phase = np.exp(-2j * np.pi * (pts @ np.asarray(k)))
    cell = w.volume / pts.shape[0]
    return np.sum(h * phase) * cell


def quad_transform_gauss(taper, k, n=128):
    """Tensor Gauss-Legendre transform, second independent quadrature."""
    w = taper.window
    x, wt = leggauss(n)
    axes = []
    wts = []
    for ell in w.lengths:
        axes.append(0.5 * ell * x)
        wts.append(0.5 * ell * wt)
    mesh = np.meshgrid(*axes, indexing="ij")
    wmesh = np.meshgrid(*wts, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    weight = np.prod(np.stack([m.ravel() for m in wmesh]), axis=0)
    h = taper.evaluate(pts)
    phase = np.exp(-2j * np.pi * (pts @ np.asarray(k)))
    return np.sum(weight * h * phase)


class TestTaperValues:
    def test_box_value(self):
        t = BoxTaper(W10)
        np.testing.assert_allclose(t.evaluate([[0.0, 0.0], [4.9, -4.9]]), 0.1)

    def test_sine_vanishes_on_boundary(self):
        t = SineTaper(W10, (1, 1))
        vals = t.evaluate([[5.0, 0.0], [-5.0, 2.0], [1.0, 5.0]])
        np.testing.assert_allclose(vals, 0.0, atol=1e-12)

    def test_sine_peak_at_center_for_first_order(self):
        t = SineTaper(W10, (1, 1))
        assert t.evaluate([[0.0, 0.0]])[0] == pytest.approx(2.0 / 10.0)

    def test_requires_centered_window(self):
        w = CuboidWindow([0, 0], [10, 10])
        with pytest.raises(DataError, match="center"):
            BoxTaper(w)
        with pytest.raises(DataError, match="center"):
            SineTaper(w, (1, 1))

    def test_sine_order_validation(self):
        with pytest.raises(DataError):
            SineTaper(W10, (0, 1))
        with pytest.raises(DataError):
            SineTaper(W10, (1,))


class TestUnitEnergy:
    @pytest.mark.parametrize(
        "taper",
        [BoxTaper(W10), SineTaper(W10, (1, 1)), SineTaper(W10, (2, 3))],
        ids=["box", "sine11", "sine23"],
    )
    def test_energy_is_one(self, taper):
        n = 512
        axes = [midpoint_nodes(ell, n) for ell in taper.window.lengths]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        h = taper.evaluate(pts)
        cell = taper.window.volume / pts.shape[0]
        assert np.sum(h * h) * cell == pytest.approx(1.0, abs=1e-10)


class TestOrthogonality:
    def test_sine_orders_pairwise_orthogonal(self):
        n = 4096
        x = midpoint_nodes(10.0, n)
        profiles = {}
        for p in range(1, 5):
            profiles[p] = np.sqrt(2.0 / 10.0) * np.sin(
                np.pi * p * (x + 5.0) / 10.0
            )
        for p in range(1, 5):
            for q in range(1, 5):
                ip = np.sum(profiles[p] * profiles[q]) * (10.0 / n)
                target = 1.0 if p == q else 0.0
                assert ip == pytest.approx(target, abs=1e-8)


class TestTransforms:
    def test_box_transform_at_zero(self):
        t = BoxTaper(W10)
        assert t.transform(np.zeros(2)) == pytest.approx(10.0)

    def test_box_matches_sinc_product(self):
        t = BoxTaper(W10)
        k = np.array([0.05, -0.11])
        expected = 10.0 * np.sinc(0.5) * np.sinc(-1.1)
        assert t.transform(k) == pytest.approx(expected)

    def test_sine_even_order_vanishes_at_zero(self):
        t = SineTaper(W10, (2, 1))
        assert abs(t.transform(np.zeros(2))) < 1e-15

    def test_sine_transform_at_zero_odd_orders(self):
        t = SineTaper(W10, (1, 1))
        per_dim = 2.0 * np.sqrt(2.0 * 10.0) / np.pi
        assert t.transform(np.zeros(2)) == pytest.approx(per_dim**2)

    @pytest.mark.parametrize("orders", [(1, 1), (2, 3), (4, 4)])
    def test_sine_matches_gauss_quadrature(self, orders):
        t = SineTaper(W10, orders)
        k = np.array([0.05, 0.05])
        oracle = quad_transform_gauss(t, k)
        assert abs(t.transform(k) - oracle) < 1e-8

    def test_box_matches_gauss_quadrature(self):
        t = BoxTaper(W10)
        k = np.array([0.05, 0.05])
        assert abs(t.transform(k) - quad_transform_gauss(t, k)) < 1e-8

    def test_transforms_match_midpoint_quadrature_at_random_wavenumbers(self):
        rng = np.random.default_rng(42)
        tapers = [BoxTaper(W10), SineTaper(W10, (1, 1)), SineTaper(W10, (3, 2))]
        for taper in tapers:
            ks = rng.uniform(-0.3, 0.3, size=(20, 2))
            closed = taper.transform(ks)
            for i, k in enumerate(ks):
                oracle = quad_transform_midpoint(taper, k)
                scale = max(abs(oracle), 1.0)
                # the midpoint oracle itself carries ~1e-6 discretization
                # error for higher sine orders; the Gauss test above pins
                # the tighter tolerance
                assert abs(closed[i] - oracle) / scale < 5e-6

    @settings(max_examples=40, deadline=None)
    @given(
        k1=st.floats(-0.5, 0.5, allow_nan=False),
        k2=st.floats(-0.5, 0.5, allow_nan=False),
        p1=st.integers(1, 4),
        p2=st.integers(1, 4),
    )
    def test_hermitian_symmetry_bitwise(self, k1, k2, p1, p2):
        k = np.array([k1, k2])
        for taper in (BoxTaper(W10), SineTaper(W10, (p1, p2))):
            a = taper.transform(k)
            b = taper.transform(-k)
            assert b == np.conj(a)

    def test_singular_point_finite(self):
        # k = p/(2 l) is a removable singularity of the raw difference form
        t = SineTaper(W10, (1, 1))
        val = t.transform(np.array([1.0 / 20.0, 0.0]))
        assert np.isfinite(val)
        oracle = quad_transform_gauss(t, np.array([1.0 / 20.0, 0.0]))
        assert abs(val - oracle) < 1e-8


class TestNorm4:
    def test_box_norm4(self):
        assert BoxTaper(W10).norm4() == pytest.approx(1.0 / 100.0)

    def test_sine_norm4_closed_form(self):
        assert SineTaper(W10, (1, 1)).norm4() == pytest.approx(2.25 / 100.0)

    def test_sine_norm4_matches_quadrature(self):
        t = SineTaper(W10, (2, 3))
        n = 1024
        axes = [midpoint_nodes(ell, n) for ell in t.window.lengths]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        h = t.evaluate(pts)
        cell = t.window.volume / pts.shape[0]
        assert np.sum(h**4) * cell == pytest.approx(t.norm4(), rel=1e-9)

    @pytest.mark.parametrize(
        "taper", [BoxTaper(W10), SineTaper(W10, (1, 1)), SineTaper(W10, (4, 2))]
    )
    def test_lower_bound_volume_reciprocal(self, taper):
        assert taper.norm4() >= 1.0 / taper.window.volume - 1e-15

    def test_cross_norm_diagonal_equals_norm4(self):
        t = SineTaper(W10, (2, 2))
        assert cross_norm4(t, t) == pytest.approx(t.norm4())

    def test_cross_norm_off_diagonal(self):
        a = SineTaper(W10, (1, 1))
        b = SineTaper(W10, (2, 2))
        assert cross_norm4(a, b) == pytest.approx(1.0 / 100.0)

    def test_cross_norm_matches_quadrature(self):
        a = SineTaper(W10, (1, 2))
        b = SineTaper(W10, (2, 2))
        n = 1024
        axes = [midpoint_nodes(ell, n) for ell in W10.lengths]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        cell = W10.volume / pts.shape[0]
        oracle = np.sum(a.evaluate(pts) ** 2 * b.evaluate(pts) ** 2) * cell
        assert cross_norm4(a, b) == pytest.approx(oracle, rel=1e-9)

    def test_cross_norm_box_sine(self):
        assert cross_norm4(BoxTaper(W10), SineTaper(W10, (3, 1))) == pytest.approx(
            1.0 / 100.0
        )


class TestTaperFamily:
    def test_family_enumeration(self):
        fam = sine_taper_family(W10, 2)
        assert [t.orders for t in fam] == [(1, 1), (1, 2), (2, 1), (2, 2)]

    def test_family_count_validation(self):
        with pytest.raises(DataError):
            sine_taper_family(W10, 0)


class TestSpectralWindow:
    def test_single_box_at_zero(self):
        assert spectral_window([BoxTaper(W10)], np.zeros(2)) == pytest.approx(100.0)

    def test_empty_list_rejected(self):
        with pytest.raises(DataError):
            spectral_window([], np.zeros(2))

    def test_integrates_to_one(self):
        fam = sine_taper_family(W10, 2)
        # separable mass: per-axis midpoint integral of each |H_j|^2 factor
        step = 1.0 / (4 * 10.0)
        extent = 41.0 / 10.0
        axis = np.arange(-extent, extent + step / 2, step)
        mesh = np.meshgrid(axis, axis, indexing="ij")
        nodes = np.stack([m.ravel() for m in mesh], axis=-1)
        vals = spectral_window(fam, nodes)
        integral = vals.sum() * step * step
        assert integral == pytest.approx(1.0, abs=1e-3)


class TestSpectralBandwidth:
    def test_sine_matches_gradient_identity(self):
        # independent oracle: b^2 = (1/4 pi^2) int |grad h|^2 = sum p_j^2/(2 l_j)^2
        t = SineTaper(W10, (1, 1))
        res = spectral_bandwidth(t)
        analytic = np.sqrt((1 + 1) / (4.0 * 100.0))
        assert not res.divergent
        assert res.value == pytest.approx(analytic, rel=0.02)

    def test_sine_resolution_stability(self):
        t = SineTaper(W10, (1, 1))
        a = spectral_bandwidth(t, resolution=64)
        b = spectral_bandwidth(t, resolution=128)
        assert abs(a.value - b.value) / b.value < 0.01

    def test_window_scaling(self):
        a = spectral_bandwidth(SineTaper(W10, (2, 1)))
        b = spectral_bandwidth(SineTaper(CuboidWindow.centered([20, 20]), (2, 1)))
        assert a.value / b.value == pytest.approx(2.0, rel=0.01)

    def test_box_flagged_divergent(self):
        res = spectral_bandwidth(BoxTaper(W10))
        assert res.divergent
        assert np.isfinite(res.value)
        assert res.truncated_at == pytest.approx(1.0)


class TestTaperedFourierSpacing:
    def test_box_pair_decorrelates_near_reciprocal_length(self):
        tau = tapered_fourier_spacing(BoxTaper(W10), BoxTaper(W10), 0.01)
        assert tau <= 2.0 / 10.0
        assert tau == pytest.approx(1.0 / 10.0)

    def test_orthogonal_sine_pair_reports_zero(self):
        a = SineTaper(W10, (1, 1))
        b = SineTaper(W10, (2, 2))
        assert tapered_fourier_spacing(a, b, 1e-8) == 0.0

    def test_epsilon_near_one_gives_first_step(self):
        tau = tapered_fourier_spacing(BoxTaper(W10), BoxTaper(W10), 0.99)
        assert tau == pytest.approx(1.0 / 80.0)

    def test_search_exhaustion_raises(self):
        with pytest.raises(NumericalError, match="exhausted"):
            tapered_fourier_spacing(BoxTaper(W10), BoxTaper(W10), 1e-30)

    def test_epsilon_domain(self):
        with pytest.raises(DataError):
            tapered_fourier_spacing(BoxTaper(W10), BoxTaper(W10), 0.0)
        with pytest.raises(DataError):
            tapered_fourier_spacing(BoxTaper(W10), BoxTaper(W10), 1.0)


class TestPairTapers:
    def test_hermite_unit_at_zero_lag(self):
        t = HermiteRadialTaper(W10)
        assert t.a == 25.0
        assert t.evaluate_diff(np.zeros(2))[0] == 1.0

    def test_hermite_matches_radial_profile_on_axis(self):
        t = HermiteRadialTaper(W10, a=25.0)
        r = np.array([0.0, 1.0, 3.0, 7.0])
        axis_lag = np.stack([r, np.zeros_like(r)], axis=-1)
        np.testing.assert_allclose(
            t.evaluate_diff(axis_lag), t.radial_profile(r), rtol=1e-12
        )

    def test_hermite_rejects_nonsquare_profile(self):
        t = HermiteRadialTaper(CuboidWindow.centered([10, 20]))
        with pytest.raises(DataError):
            t.radial_profile(np.array([1.0]))

    def test_hermite_separable_value(self):
        t = HermiteRadialTaper(W10, a=25.0)
        z = np.array([2.0, 3.0])
        expected = np.exp(-25.0 * ((2.0 / 20.0) ** 2 + (3.0 / 20.0) ** 2))
        assert t.evaluate_diff(z)[0] == pytest.approx(expected, rel=1e-12)

    def test_uniform_taper(self):
        t = UniformPairTaper(W10)
        np.testing.assert_array_equal(t.evaluate_diff(np.array([[1.0, 2.0]])), [1.0])


class TestTaperSpecStrings:
    def test_round_trips(self):
        assert taper_from_spec("box", W10).spec_string == "box"
        assert taper_from_spec("sine:2,3", W10).spec_string == "sine:2,3"
        assert taper_from_spec("hermite:25", W10).spec_string == "hermite:25"
        assert taper_from_spec("none", W10).spec_string == "none"

    def test_bad_specs_raise(self):
        with pytest.raises(DataError):
            taper_from_spec("sine:a,b", W10)
        with pytest.raises(DataError):
            taper_from_spec("gauss", W10)
