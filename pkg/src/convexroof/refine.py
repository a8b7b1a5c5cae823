"""Quasi-Newton polish of the evolutionary output.

The objective is minimized over the raw real agent vector; every evaluation
reshapes the vector to a matrix and QR-projects it, so the search never
leaves the semi-unitary set.  Gradients come from central finite differences
(the objective is treated as a black box), and the backtracking line search
only ever accepts descent, so refinement cannot increase J.
"""

import math
from dataclasses import dataclass

import numpy as np

from .de import unitary_to_vector, vector_to_matrix
from .errors import NonFiniteError, RankDeficientError
from .linalg import project_qr, project_qr_batch
from .roof import objective, objective_batch


@dataclass
class RefineConfig:
    max_iter: int = 500
    grad_tol: float = 1e-9  # sup norm of the finite-difference gradient
    step_tol: float = 1e-12  # sup norm of the accepted step
    fd_step: float = 1e-6
    armijo_c: float = 1e-4  # sufficient-decrease constant
    backtrack: float = 0.5  # line-search shrink factor
    max_backtracks: int = 50

    def validate(self):
        if min(self.grad_tol, self.step_tol) <= 0.0 or self.max_iter < 1:
            raise ValueError("tolerances must be positive and max_iter >= 1")
        if not 1e-9 <= self.fd_step <= 1e-4:
            raise ValueError(f"fd_step must lie in [1e-9, 1e-4], got {self.fd_step}")
        if not 0.0 < self.backtrack < 1.0 or not 0.0 < self.armijo_c < 1.0:
            raise ValueError("line-search parameters must lie in (0, 1)")


@dataclass
class MinimizeResult:
    x: np.ndarray
    fun: float
    iterations: int
    converged: bool
    line_search_failed: bool = False


def fd_gradient(f, x, h):
    """Central-difference gradient (f(x + h e_j) - f(x - h e_j)) / 2h."""
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    probe = x.copy()
    for j in range(x.size):
        probe[j] = x[j] + h
        f_plus = f(probe)
        probe[j] = x[j] - h
        f_minus = f(probe)
        probe[j] = x[j]
        if not (math.isfinite(f_plus) and math.isfinite(f_minus)):
            raise NonFiniteError(f"non-finite objective at coordinate {j}")
        grad[j] = (f_plus - f_minus) / (2.0 * h)
    return grad


def bfgs_minimize(f, x0, config=None, gradient=None):
    """BFGS with inverse-Hessian updates and a backtracking Armijo search.

    Terminates on the gradient tolerance, the step tolerance, or the
    iteration budget; the returned value never exceeds f(x0).  If the line
    search cannot find descent the best point so far is returned with
    ``line_search_failed`` set.  ``gradient`` overrides the default
    central-difference gradient of ``f``.
    """
    config = config or RefineConfig()
    config.validate()
    if gradient is None:
        gradient = lambda point: fd_gradient(f, point, config.fd_step)
    x = np.asarray(x0, dtype=float).copy()
    fx = f(x)
    if not math.isfinite(fx):
        raise NonFiniteError("objective is not finite at the starting point")
    n = x.size
    h_inv = np.eye(n)
    grad = gradient(x)
    iterations = 0
    while iterations < config.max_iter:
        if np.abs(grad).max() < config.grad_tol:
            return MinimizeResult(x, fx, iterations, converged=True)
        direction = -h_inv @ grad
        slope = float(grad @ direction)
        if slope >= 0.0:  # not a descent direction; reset the curvature model
            h_inv = np.eye(n)
            direction = -grad
            slope = -float(grad @ grad)
        alpha = 1.0
        f_new = math.inf
        for _ in range(config.max_backtracks):
            trial = x + alpha * direction
            f_new = f(trial)
            if math.isfinite(f_new) and f_new <= fx + config.armijo_c * alpha * slope:
                break
            alpha *= config.backtrack
        else:
            return MinimizeResult(
                x, fx, iterations, converged=False, line_search_failed=True
            )
        step = alpha * direction
        x_new = x + step
        grad_new = gradient(x_new)
        y = grad_new - grad
        ys = float(y @ step)
        if ys > 1e-14:
            rho = 1.0 / ys
            outer = np.outer(step, y)
            h_inv = (
                (np.eye(n) - rho * outer) @ h_inv @ (np.eye(n) - rho * outer.T)
                + rho * np.outer(step, step)
            )
        x, fx, grad = x_new, f_new, grad_new
        iterations += 1
        if np.abs(step).max() < config.step_tol:
            return MinimizeResult(x, fx, iterations, converged=True)
    return MinimizeResult(x, fx, iterations, converged=False)


def _batched_fd_gradient(state, k, r, h):
    """Central-difference gradient of x -> J(project_qr(reshape(x))) with all
    2N probe points projected and evaluated as one stack."""

    def gradient(x):
        n = x.size
        probes = np.tile(x, (2 * n, 1))
        idx = np.arange(n)
        probes[2 * idx, idx] += h
        probes[2 * idx + 1, idx] -= h
        raw = (probes[:, 0::2] + 1j * probes[:, 1::2]).reshape(2 * n, k, r)
        projected, ok = project_qr_batch(raw)
        if not ok.all():
            raise NonFiniteError(
                f"rank-deficient projection at coordinate {int(np.flatnonzero(~ok)[0]) // 2}"
            )
        values = objective_batch(state, projected)
        return (values[0::2] - values[1::2]) / (2.0 * h)

    return gradient


def refine_unitary(state, u0, config=None, monotone=None):
    """Polish a semi-unitary matrix by BFGS on the projected objective.

    Returns ``(u_star, j_star)`` with j_star <= J(state, u0).  Rank-deficient
    points encountered by the line search count as +inf, which simply forces
    shorter steps; the feasible region itself is never relaxed.
    """
    u0 = np.asarray(u0, dtype=complex)
    k, r = u0.shape

    def f(x):
        try:
            return objective(state, project_qr(vector_to_matrix(x, k, r)), monotone)
        except RankDeficientError:
            return math.inf

    x0 = unitary_to_vector(u0)
    j0 = f(x0)
    cfg = config or RefineConfig()
    gradient = None
    if monotone is None:
        gradient = _batched_fd_gradient(state, k, r, cfg.fd_step)
    result = bfgs_minimize(f, x0, cfg, gradient=gradient)
    u_star = project_qr(vector_to_matrix(result.x, k, r))
    j_star = objective(state, u_star, monotone)
    if not j_star <= j0 + 1e-12:
        raise AssertionError(
            f"refinement increased J: {j0!r} -> {j_star!r}"
        )
    return u_star, j_star
