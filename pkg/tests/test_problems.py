import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from decminimax import (
    ConfigError,
    make_quadratic_problem,
    make_sinpl_problem,
    maximizer_oracle,
)

from conftest import assert_close


def finite_difference(f, z, h=1e-5):
    g = np.zeros_like(z)
    for i in range(z.size):
        zp = z.copy()
        zm = z.copy()
        zp[i] += h
        zm[i] -= h
        g[i] = (f(zp) - f(zm)) / (2 * h)
    return g


def agent_objective_quadratic(problem, k, x, y):
    return (0.5 * x @ problem.Q[k] @ x + x @ problem.R[k] @ y
            + problem.a[k] @ x - 0.5 * y @ problem.S[k] @ y
            + problem.b[k] @ y)


class TestQuadraticConstruction:
    def test_pure_concave_instance(self):
        problem = make_quadratic_problem(K=1, d1=1, d2=1, N=4, sigma=0.0,
                                         seed=0, nu_target=1.0, s_spread=0.0,
                                         q_base=(0.0, 0.0), q_spread=0.0,
                                         r_scale=0.0, hetero=0.0)
        assert problem.constants.nu == pytest.approx(1.0, abs=1e-12)
        assert problem.constants.L_f == pytest.approx(1.0, abs=1e-12)
        assert problem.constants.kappa == pytest.approx(1.0, abs=1e-12)

    @given(seed=st.integers(0, 10**4))
    @settings(max_examples=20, deadline=None)
    def test_nu_target_respected(self, seed):
        problem = make_quadratic_problem(K=4, d1=3, d2=2, N=8, sigma=0.5,
                                         seed=seed, nu_target=0.4)
        assert problem.constants.nu >= 0.4 - 1e-12

    def test_sample_means_exact(self):
        problem = make_quadratic_problem(K=4, d1=3, d2=2, N=32, sigma=0.7,
                                         seed=3)
        assert_close(problem.a_samples.mean(axis=1), problem.a, 1e-12,
                     "a sample means")
        assert_close(problem.b_samples.mean(axis=1), problem.b, 1e-12,
                     "b sample means")

    def test_sample_variance_is_sigma_sq(self):
        sigma = 0.7
        problem = make_quadratic_problem(K=4, d1=3, d2=2, N=32, sigma=sigma,
                                         seed=3)
        # per-agent RMS of the x-side deviations is scaled to sigma exactly
        dev = problem.a_samples - problem.a[:, None, :]
        rms = np.sqrt((dev**2).sum(axis=2).mean(axis=1))
        assert_close(rms, np.full(4, sigma), 1e-12, "a-side RMS")

    def test_sigma_zero_samples_equal_mean(self):
        problem = make_quadratic_problem(K=3, d1=2, d2=2, N=8, sigma=0.0,
                                         seed=1)
        assert_close(problem.a_samples,
                     np.broadcast_to(problem.a[:, None, :], (3, 8, 2)), 0,
                     "zero-noise samples")

    def test_infeasible_nu(self):
        with pytest.raises(ConfigError):
            make_quadratic_problem(K=2, d1=2, d2=2, N=4, sigma=0.0, seed=0,
                                   nu_target=0.0)


class TestGradients:
    @pytest.mark.parametrize("seed", [0, 1])
    def test_finite_difference_quadratic(self, seed):
        problem = make_quadratic_problem(K=3, d1=3, d2=2, N=8, sigma=0.3,
                                         seed=seed)
        rng = np.random.default_rng(seed)
        for _ in range(25):
            k = int(rng.integers(0, 3))
            x = rng.standard_normal(3)
            y = rng.standard_normal(2)
            gx = finite_difference(
                lambda z: agent_objective_quadratic(problem, k, z, y), x)
            gy = finite_difference(
                lambda z: agent_objective_quadratic(problem, k, x, z), y)
            gx_a = problem.exact_grad_x(k, x, y)
            gy_a = problem.exact_grad_y(k, x, y)
            assert np.linalg.norm(gx - gx_a) <= 1e-6 * max(1, np.linalg.norm(gx_a))
            assert np.linalg.norm(gy - gy_a) <= 1e-6 * max(1, np.linalg.norm(gy_a))

    def test_finite_difference_sinpl(self):
        problem = make_sinpl_problem(K=4, sigma=0.0, seed=2)

        def agent_obj(k, x, y):
            return (problem.objective(x, y) + problem.cx[k] * x[0]
                    + problem.cy[k] * y[0])

        rng = np.random.default_rng(0)
        for _ in range(25):
            k = int(rng.integers(0, 4))
            x = rng.uniform(-3, 3, size=1)
            y = rng.uniform(-3, 3, size=1)
            gx = finite_difference(lambda z: agent_obj(k, z, y), x)
            gy = finite_difference(lambda z: agent_obj(k, x, z), y)
            assert np.linalg.norm(gx - problem.exact_grad_x(k, x, y)) <= 1e-5
            assert np.linalg.norm(gy - problem.exact_grad_y(k, x, y)) <= 1e-5

    def test_offline_sample_mean_matches_exact(self):
        problem = make_quadratic_problem(K=2, d1=2, d2=2, N=16, sigma=0.5,
                                         seed=4)
        x = np.ones(2)
        y = -np.ones(2)
        for k in range(2):
            gx = np.mean([problem.grad_sample(k, s, x, y, "x")
                          for s in range(16)], axis=0)
            assert_close(gx, problem.exact_grad_x(k, x, y), 1e-12,
                         f"agent {k} sample mean")

    def test_block_gradients_match_scalar(self, quad_problem):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((8, 3))
        Y = rng.standard_normal((8, 2))
        GX, GY = quad_problem.exact_grads_block(X, Y)
        for k in range(8):
            assert_close(GX[k], quad_problem.exact_grad_x(k, X[k], Y[k]),
                         1e-13, f"x agent {k}")
            assert_close(GY[k], quad_problem.exact_grad_y(k, X[k], Y[k]),
                         1e-13, f"y agent {k}")


class TestSinPL:
    def test_single_agent_no_perturbation(self):
        problem = make_sinpl_problem(K=1, sigma=0.0, seed=0)
        assert problem.cx[0] == 0.0
        assert problem.cy[0] == 0.0

    def test_perturbations_cancel(self):
        problem = make_sinpl_problem(K=6, sigma=0.0, seed=1)
        rng = np.random.default_rng(0)
        for _ in range(100):
            X = np.tile(rng.uniform(-3, 3, size=1), (6, 1))
            Y = np.tile(rng.uniform(-3, 3, size=1), (6, 1))
            gx, gy = problem.exact_grads_block(X, Y)
            base_x = 2 * X[0, 0] + 3 * np.sin(2 * X[0, 0]) * np.sin(Y[0, 0]) ** 2
            assert gx.mean() == pytest.approx(base_x, abs=1e-12)

    def test_grid_pl_constant_positive(self):
        problem = make_sinpl_problem(K=4, sigma=0.0, seed=2)
        assert problem.constants.nu > 0

    def test_online_only(self):
        problem = make_sinpl_problem(K=2, sigma=0.0, seed=0)
        with pytest.raises(ConfigError):
            problem.batch_noise(0, idx=np.array([0]))


class TestMaximizerOracle:
    def test_decoupled_instance(self):
        problem = make_quadratic_problem(K=1, d1=1, d2=1, N=4, sigma=0.0,
                                         seed=0, nu_target=1.0, s_spread=0.0,
                                         q_base=(0.0, 0.0), q_spread=0.0,
                                         r_scale=0.0, hetero=0.0)
        y_opt, P = maximizer_oracle(problem, np.array([2.0]))
        assert_close(y_opt, [0.0], 1e-12, "y_opt")
        assert P == pytest.approx(0.0, abs=1e-12)

    def test_fallback_matches_closed_form(self):
        problem = make_quadratic_problem(K=3, d1=2, d2=2, N=8, sigma=0.0,
                                         seed=7)
        rng = np.random.default_rng(0)
        for _ in range(5):
            x = rng.standard_normal(2)
            y_cf, P_cf = maximizer_oracle(problem, x)
            y_it, P_it = maximizer_oracle(problem, x, use_closed_form=False,
                                          tol=1e-12)
            assert np.linalg.norm(y_cf - y_it) <= 1e-8
            assert abs(P_cf - P_it) <= 1e-8

    def test_delta_c_nonnegative(self):
        problem = make_quadratic_problem(K=3, d1=2, d2=2, N=8, sigma=0.0,
                                         seed=8)
        rng = np.random.default_rng(1)
        for _ in range(50):
            x = rng.standard_normal(2)
            y = rng.standard_normal(2)
            _, P = maximizer_oracle(problem, x)
            assert P - problem.objective(x, y) >= -1e-10
