import math

import numpy as np
import pytest

from convexroof.de import DEConfig, evolve, unitary_to_vector, vector_to_matrix
from convexroof.errors import NonFiniteError, RankDeficientError
from convexroof.linalg import haar_random, project_qr
from convexroof.models import bell_state, make_rho1, make_rho2
from convexroof.monotones import wootters_eof
from convexroof.refine import (
    MinimizeResult,
    RefineConfig,
    bfgs_minimize,
    fd_gradient,
    refine_unitary,
)
from convexroof.roof import objective, spectral_factorize


class TestFdGradient:
    def test_quadratic(self):
        grad = fd_gradient(lambda x: float(x @ x), np.array([1.0, 2.0]), 1e-5)
        assert grad == pytest.approx([2.0, 4.0], abs=1e-8)

    def test_constant(self):
        grad = fd_gradient(lambda x: 3.0, np.array([1.0, -1.0, 0.5]), 1e-5)
        assert np.array_equal(grad, np.zeros(3))

    def test_non_finite_raises(self):
        with pytest.raises(NonFiniteError):
            fd_gradient(lambda x: math.inf, np.zeros(2), 1e-5)

    def test_step_halving_consistency_on_projected_objective(self):
        # Richardson check: h and h/2 agree within 1e-5 on J(project(x))
        state, _ = make_rho1(0.4, 0.2)

        def f(x):
            return objective(state, project_qr(vector_to_matrix(x, 2, 2)))

        x = unitary_to_vector(haar_random(2, 2, np.random.default_rng(1)))
        g1 = fd_gradient(f, x, 1e-5)
        g2 = fd_gradient(f, x, 0.5e-5)
        assert np.abs(g1 - g2).max() <= 1e-5


class TestBfgs:
    def test_quadratic_bowl(self):
        f = lambda x: (x[0] - 3.0) ** 2 + 10.0 * (x[1] + 1.0) ** 2
        result = bfgs_minimize(f, np.zeros(2))
        assert result.converged
        assert result.x == pytest.approx([3.0, -1.0], abs=1e-8)

    def test_already_at_minimizer(self):
        f = lambda x: float(x @ x)
        result = bfgs_minimize(f, np.zeros(3))
        assert result.converged
        assert result.iterations == 0
        assert np.array_equal(result.x, np.zeros(3))

    def test_rosenbrock(self):
        f = lambda x: (1.0 - x[0]) ** 2 + 100.0 * (x[1] - x[0] ** 2) ** 2
        result = bfgs_minimize(
            f, np.array([-1.2, 1.0]), RefineConfig(max_iter=2000, grad_tol=1e-10)
        )
        assert result.x == pytest.approx([1.0, 1.0], abs=1e-6)

    def test_never_increases(self):
        rng = np.random.default_rng(2)
        f = lambda x: float(np.sin(x).sum() + 0.1 * x @ x)
        for _ in range(5):
            x0 = rng.standard_normal(4)
            result = bfgs_minimize(f, x0, RefineConfig(max_iter=50))
            assert result.fun <= f(x0)

    def test_custom_gradient_used(self):
        calls = []

        def gradient(x):
            calls.append(1)
            return 2.0 * x

        result = bfgs_minimize(lambda x: float(x @ x), np.ones(2), gradient=gradient)
        assert result.converged
        assert calls

    def test_line_search_failure_returns_best_so_far(self):
        # flat objective with a lying gradient: no step can satisfy Armijo
        result = bfgs_minimize(
            lambda x: 0.0,
            np.array([1.0, 1.0]),
            RefineConfig(max_iter=10),
            gradient=lambda x: np.array([1.0, 0.0]),
        )
        assert result.line_search_failed
        assert not result.converged
        assert result.fun == 0.0
        assert np.array_equal(result.x, [1.0, 1.0])

    def test_non_finite_start_raises(self):
        with pytest.raises(NonFiniteError):
            bfgs_minimize(lambda x: math.inf, np.zeros(2))


class TestRefineUnitary:
    def test_rho1_to_ten_digits(self):
        state, analytic = make_rho1(1.0 / 3.0, 1.0 / 3.0)
        seed_result = evolve(state, DEConfig(n_max=24, seed=3))
        assert abs(seed_result.best_j - analytic) > 1e-8  # refinement has work to do
        _, refined = refine_unitary(state, seed_result.best_u)
        assert abs(refined - analytic) <= 1e-10

    def test_pure_state_unchanged(self):
        psi = bell_state("psi_plus")
        state = spectral_factorize(np.outer(psi, psi.conj()), 2, 2)
        u0 = haar_random(1, 1, np.random.default_rng(4))
        _, refined = refine_unitary(state, u0)
        assert refined == pytest.approx(objective(state, u0), abs=1e-12)

    def test_matches_wootters_at_generic_point(self):
        state = make_rho2(0.7, 1.0, 1.0)
        oracle = wootters_eof(state.density_matrix())
        result = evolve(state, DEConfig(n_max=192, seed=5))
        _, refined = refine_unitary(state, result.best_u)
        assert abs(refined - oracle) <= 1e-8

    def test_returns_semi_unitary(self):
        state = make_rho2(0.5, 1.0, 2.0)
        result = evolve(state, DEConfig(n_max=32, seed=6))
        u_star, _ = refine_unitary(state, result.best_u, RefineConfig(max_iter=40))
        assert np.abs(u_star.conj().T @ u_star - np.eye(state.rank)).max() <= 1e-12

    def test_directional_derivative_consistency(self):
        state, _ = make_rho1(0.45, 0.25)

        def f(x):
            try:
                return objective(state, project_qr(vector_to_matrix(x, 2, 2)))
            except RankDeficientError:
                return math.inf

        rng = np.random.default_rng(7)
        x = unitary_to_vector(haar_random(2, 2, rng))
        grad = fd_gradient(f, x, 1e-6)
        for _ in range(20):
            v = rng.standard_normal(x.size)
            v /= np.linalg.norm(v)
            h = 1e-6
            directional = (f(x + h * v) - f(x - h * v)) / (2.0 * h)
            scale = max(abs(directional), np.abs(grad).max(), 1e-8)
            assert abs(grad @ v - directional) / scale <= 1e-5
