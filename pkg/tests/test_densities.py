"""Mixture calculus, annealing-path ingredients, and quadrature expectations.

Closed forms used as oracles throughout: for eta = N(0,1), pi = N(a,1) the
unnormalized geometric path is exp(-(x-at)^2/2 - a^2 t(1-t)/2)/sqrt(2pi), so
Z(t) = exp(-a^2 t (1-t)/2) and E_t[log pi - log eta] = a^2 t - a^2/2.
"""

import math

import numpy as np
import pytest

from tiltpath.densities import (
    GaussianMixture,
    GeometricPath,
    QuadratureRule,
    path_expectation,
    path_normalizer,
)

TWO_MODE = GaussianMixture(((2.0 / 3.0, -8.0, 1.0), (1.0 / 3.0, 4.0, 1.0)))


class TestGaussianMixtureValidation:
    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError):
            GaussianMixture(((0.5, 0.0, 1.0), (0.4, 1.0, 1.0)))

    def test_weights_must_be_positive(self):
        with pytest.raises(ValueError):
            GaussianMixture(((1.5, 0.0, 1.0), (-0.5, 1.0, 1.0)))

    def test_std_must_be_positive(self):
        with pytest.raises(ValueError):
            GaussianMixture(((1.0, 0.0, 0.0),))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            GaussianMixture(())

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            GaussianMixture(((1.0, math.inf, 1.0),))


class TestGaussianMixturePdf:
    def test_standard_normal_at_zero(self):
        """pdf(0) of N(0,1) equals 1/sqrt(2 pi)."""
        m = GaussianMixture.normal(0.0, 1.0)
        np.testing.assert_allclose(m.pdf(np.array(0.0)), 0.3989422804014327, rtol=1e-14)

    def test_log_pdf_two_components_hand_value(self):
        """log of (w1 phi(x; m1, s1) + w2 phi(x; m2, s2)) at x = 0."""
        m = GaussianMixture(((0.25, -1.0, 0.5), (0.75, 2.0, 2.0)))
        p1 = 0.25 * math.exp(-0.5 * (1.0 / 0.5) ** 2) / (0.5 * math.sqrt(2 * math.pi))
        p2 = 0.75 * math.exp(-0.5 * (2.0 / 2.0) ** 2) / (2.0 * math.sqrt(2 * math.pi))
        np.testing.assert_allclose(m.log_pdf(np.array(0.0)), math.log(p1 + p2), rtol=1e-14)

    def test_pdf_integrates_to_one(self):
        xs = np.linspace(-30, 30, 20001)
        total = np.trapezoid(TWO_MODE.pdf(xs), xs)
        np.testing.assert_allclose(total, 1.0, atol=1e-10)

    def test_log_pdf_deep_tail_finite(self):
        """logsumexp keeps the far tail finite instead of -inf/nan."""
        v = TWO_MODE.log_pdf(np.array([-40.0, 40.0]))
        assert np.all(np.isfinite(v))


class TestScore:
    def test_single_gaussian_closed_form(self):
        """score of N(m, s) is (m - x) / s^2."""
        m = GaussianMixture.normal(1.5, 2.0)
        xs = np.linspace(-5, 5, 11)
        np.testing.assert_allclose(m.score(xs), (1.5 - xs) / 4.0, rtol=1e-13)

    def test_matches_log_pdf_gradient(self):
        xs = np.linspace(-12, 8, 41)
        h = 1e-6
        fd = (TWO_MODE.log_pdf(xs + h) - TWO_MODE.log_pdf(xs - h)) / (2 * h)
        np.testing.assert_allclose(TWO_MODE.score(xs), fd, atol=1e-7)


class TestCdfQuantile:
    def test_cdf_at_mode_gap(self):
        """Essentially all left-mode mass sits below -2: cdf(-2) = 2/3."""
        np.testing.assert_allclose(TWO_MODE.cdf(np.array(-2.0)), 2.0 / 3.0, atol=1e-8)

    def test_quantile_inverts_cdf(self):
        xs = np.linspace(-11.0, 7.0, 37)
        ps = TWO_MODE.cdf(xs)
        back = TWO_MODE.quantile(ps)
        np.testing.assert_allclose(back, xs, atol=1e-9)

    def test_quantile_monotone(self):
        ps = np.linspace(1e-6, 1 - 1e-6, 200)
        qs = TWO_MODE.quantile(ps)
        assert np.all(np.diff(qs) > 0)

    def test_quantile_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            TWO_MODE.quantile(np.array(1.5))

    def test_scalar_in_scalar_out(self):
        q = TWO_MODE.quantile(0.5)
        assert np.ndim(q) == 0


class TestSampling:
    def test_seeded_reproducibility(self):
        a = TWO_MODE.sample(500, seed=11)
        b = TWO_MODE.sample(500, seed=11)
        np.testing.assert_array_equal(a, b)

    def test_different_seeds_differ(self):
        a = TWO_MODE.sample(500, seed=11)
        b = TWO_MODE.sample(500, seed=12)
        assert not np.array_equal(a, b)

    def test_moments_match_mixture(self):
        s = TWO_MODE.sample(200_000, seed=3)
        np.testing.assert_allclose(s.mean(), TWO_MODE.mean(), atol=0.05)
        np.testing.assert_allclose(s.var(), TWO_MODE.var(), rtol=0.02)

    def test_component_proportions(self):
        s = TWO_MODE.sample(100_000, seed=5)
        np.testing.assert_allclose(np.mean(s < -2), 2.0 / 3.0, atol=0.01)


class TestMoments:
    def test_two_mode_mean_and_var(self):
        """E = (2/3)(-8) + (1/3)(4) = -4; Var = E[x^2] - 16 = 49 - 16 = 33."""
        np.testing.assert_allclose(TWO_MODE.mean(), -4.0, rtol=1e-14)
        np.testing.assert_allclose(TWO_MODE.var(), 33.0, rtol=1e-14)


class TestGeometricPath:
    def setup_method(self):
        self.path = GeometricPath(GaussianMixture.normal(0.0, 1.0), TWO_MODE)

    def test_endpoints(self):
        xs = np.linspace(-10, 6, 17)
        np.testing.assert_allclose(
            self.path.log_unnorm(xs, 0.0), self.path.eta.log_pdf(xs), rtol=1e-13
        )
        np.testing.assert_allclose(
            self.path.log_unnorm(xs, 1.0), self.path.pi.log_pdf(xs), rtol=1e-13
        )

    def test_ingredients_definitions(self):
        xs = np.linspace(-10, 6, 17)
        t = 0.3
        ell, s = self.path.ingredients(xs, t)
        np.testing.assert_allclose(
            ell, self.path.pi.log_pdf(xs) - self.path.eta.log_pdf(xs), rtol=1e-12
        )
        np.testing.assert_allclose(
            s,
            0.7 * self.path.eta.score(xs) + 0.3 * self.path.pi.score(xs),
            rtol=1e-12,
        )

    def test_time_range_checked(self):
        with pytest.raises(ValueError):
            self.path.log_unnorm(np.array(0.0), 1.5)


class TestQuadratureRule:
    def test_weights_sum_to_length(self):
        q = QuadratureRule(-30.0, 30.0, 4001)
        np.testing.assert_allclose(q.weights.sum(), 60.0, rtol=1e-13)

    def test_trapezoid_exact_on_linear(self):
        q = QuadratureRule(-1.0, 3.0, 11)
        np.testing.assert_allclose(q.weights @ (2 * q.points + 1), 12.0, rtol=1e-13)

    def test_validation(self):
        with pytest.raises(ValueError):
            QuadratureRule(1.0, -1.0, 101)
        with pytest.raises(ValueError):
            QuadratureRule(-1.0, 1.0, 2)


class TestPathExpectation:
    def setup_method(self):
        self.eta = GaussianMixture.normal(0.0, 1.0)
        self.pi = GaussianMixture.normal(2.0, 1.0)
        self.path = GeometricPath(self.eta, self.pi)
        self.quad = QuadratureRule(-15.0, 15.0, 2001)

    def test_gaussian_shift_closed_form(self):
        """E_t[ell] = a^2 t - a^2 / 2 for the unit-variance shift by a = 2."""
        for t in (0.0, 0.25, 0.5, 0.75, 1.0):
            e = path_expectation(self.path, None, t, self.quad)
            np.testing.assert_allclose(e, 4.0 * t - 2.0, atol=1e-9)

    def test_normalizer_closed_form(self):
        """Z(t) = exp(-a^2 t (1-t) / 2) for the same shift."""
        for t in (0.0, 0.3, 0.5, 1.0):
            z = path_normalizer(self.path, None, t, self.quad)
            np.testing.assert_allclose(z, math.exp(-2.0 * t * (1 - t)), rtol=1e-10)

    def test_constant_tilt_leaves_expectation(self):
        """A tilt g = const rescales weights but not normalized expectations."""
        tilt = lambda x, t: (np.full_like(x, 3.7), np.zeros_like(x))
        e0 = path_expectation(self.path, None, 0.4, self.quad)
        e1 = path_expectation(self.path, tilt, 0.4, self.quad)
        np.testing.assert_allclose(e1, e0, rtol=1e-12)

    def test_tilt_time_derivative_enters_integrand(self):
        """The integrand is ell + dt_g, so a constant dt_g shifts E by it."""
        tilt = lambda x, t: (np.zeros_like(x), np.full_like(x, 1.25))
        e0 = path_expectation(self.path, None, 0.4, self.quad)
        e1 = path_expectation(self.path, tilt, 0.4, self.quad)
        np.testing.assert_allclose(e1 - e0, 1.25, atol=1e-10)

    def test_coverage_check(self):
        """A mixture mean outside the quadrature window is an error."""
        far = GaussianMixture.normal(100.0, 1.0)
        path = GeometricPath(self.eta, far)
        with pytest.raises(ValueError):
            path_expectation(path, None, 0.5, self.quad)
