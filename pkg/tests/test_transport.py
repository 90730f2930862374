"""Euler particle transport and the quantile-matching baseline."""

import numpy as np
import pytest

from tiltpath.densities import GaussianMixture
from tiltpath.transport import (
    euler_transport,
    mccann_map,
    mccann_transport,
    mccann_velocity,
)

ETA = GaussianMixture.normal(0.0, 1.0)
TWO_MODE = GaussianMixture(((2 / 3, -8.0, 1.0), (1 / 3, 4.0, 1.0)))


class TestEuler:
    def test_constant_velocity_is_exact(self):
        """dX = 3 dt moves every particle by exactly 3 regardless of dt."""
        init = np.array([-1.0, 0.0, 2.5])
        traj = euler_transport(lambda x, t: np.full_like(x, 3.0), init, dt=0.01)
        np.testing.assert_allclose(traj.terminal, init + 3.0, rtol=1e-12)
        assert traj.positions.shape == (3, 101)
        np.testing.assert_allclose(traj.times, np.linspace(0.0, 1.0, 101), atol=1e-12)

    def test_exponential_growth_oracle(self):
        """v(x) = x gives the compound-interest product (1 + dt)^{1/dt};
        at dt = 0.01 that is (1.01)^100, within 0.015 of e."""
        init = np.array([1.0])
        traj = euler_transport(lambda x, t: x, init, dt=0.01)
        ratio = traj.terminal[0]
        np.testing.assert_allclose(ratio, 1.01**100, rtol=1e-12)
        assert abs(ratio - np.e) < 0.015

    def test_time_dependent_velocity(self):
        """v(x, t) = 2t integrates to t^2; Euler's left endpoint gives the
        lower Riemann sum sum 2 t_k dt = 1 - dt."""
        traj = euler_transport(lambda x, t: np.full_like(x, 2 * t), np.zeros(1), dt=0.01)
        np.testing.assert_allclose(traj.terminal[0], 1.0 - 0.01, rtol=1e-12)

    def test_dt_must_divide_unit_interval(self):
        with pytest.raises(ValueError):
            euler_transport(lambda x, t: x, np.zeros(2), dt=0.03)
        with pytest.raises(ValueError):
            euler_transport(lambda x, t: x, np.zeros(2), dt=0.0)
        with pytest.raises(ValueError):
            euler_transport(lambda x, t: x, np.zeros(2), dt=1.5)

    def test_non_finite_velocity_aborts_with_location(self):
        """A nan velocity at t = 0.5 corrupts the position landing on the
        next grid time, and the error names the particle and that time."""

        def bad(x, t):
            v = np.zeros_like(x)
            if t >= 0.5:
                v[1] = np.nan
            return v

        with pytest.raises(FloatingPointError, match=r"particle 1.*t=0\.75"):
            euler_transport(bad, np.zeros(3), dt=0.25)

    def test_wrong_velocity_shape_rejected(self):
        with pytest.raises(ValueError):
            euler_transport(lambda x, t: np.zeros(5), np.zeros(3), dt=0.5)

    def test_seed_recorded(self):
        traj = euler_transport(lambda x, t: x, np.zeros(2), dt=0.5, seed=42)
        assert traj.seed == 42
        assert traj.n_particles == 2


class TestMccannMap:
    def test_identity_when_endpoints_match(self):
        x = np.linspace(-3, 3, 11)
        np.testing.assert_allclose(mccann_map(ETA, ETA, x), x, atol=1e-8)

    def test_gaussian_shift(self):
        pi = GaussianMixture.normal(2.0, 1.0)
        x = np.linspace(-3, 3, 11)
        np.testing.assert_allclose(mccann_map(ETA, pi, x), x + 2.0, atol=1e-8)

    def test_gaussian_scale(self):
        pi = GaussianMixture.normal(0.0, 2.0)
        x = np.linspace(-2.5, 2.5, 9)
        np.testing.assert_allclose(mccann_map(ETA, pi, x), 2.0 * x, atol=1e-8)

    def test_strictly_monotone(self):
        x = np.sort(ETA.sample(1000, seed=0))
        tx = mccann_map(ETA, TWO_MODE, x)
        assert np.all(np.diff(tx) > 0)

    def test_pushforward_hits_target_mass_split(self):
        """Mapping eta samples through the quantile map reproduces the
        2/3 : 1/3 split of the bimodal target."""
        x = ETA.sample(4000, seed=1)
        tx = mccann_map(ETA, TWO_MODE, x)
        frac = np.mean(tx < -2.0)
        assert abs(frac - 2 / 3) < 0.05


class TestMccannVelocity:
    def test_consistent_with_interpolated_map(self):
        """Along X_t(x0) = (1-t) x0 + t T(x0) the displacement field must
        return T(x0) - x0 at every t, including the endpoints."""
        x0 = np.array([-1.5, -0.3, 0.4, 1.7])
        tx = mccann_map(ETA, TWO_MODE, x0)
        disp = tx - x0
        for t in (0.0, 0.25, 0.6, 1.0):
            xt = (1 - t) * x0 + t * tx
            v = mccann_velocity(ETA, TWO_MODE, xt, t)
            np.testing.assert_allclose(v, disp, rtol=1e-6, atol=1e-8)

    def test_scalar_input_gives_scalar(self):
        v = mccann_velocity(ETA, TWO_MODE, 0.5, 0.5)
        assert np.ndim(v) == 0


class TestMccannTransport:
    def test_positions_are_linear_in_t(self):
        init = ETA.sample(50, seed=2)
        traj = mccann_transport(ETA, TWO_MODE, init, dt=0.1)
        tx = mccann_map(ETA, TWO_MODE, init)
        for k, t in enumerate(traj.times):
            np.testing.assert_allclose(
                traj.positions[:, k], (1 - t) * init + t * tx, rtol=1e-9, atol=1e-9
            )

    def test_terminal_is_the_map(self):
        init = ETA.sample(200, seed=3)
        traj = mccann_transport(ETA, TWO_MODE, init, dt=0.01)
        np.testing.assert_allclose(
            traj.terminal, mccann_map(ETA, TWO_MODE, init), rtol=1e-9, atol=1e-9
        )
