"""Integrator-augmented LQR for the translational error dynamics.

The error state is ``e_a = (e_p, e_v, e_i)`` with ``e_i`` the time integral of
the position error. The Riccati solver is a Kleinman-Newton iteration with
Lyapunov solves done by Kronecker vectorization.
"""
from dataclasses import dataclass

import numpy as np

from quadsim.rigid_body import E3

DEFAULT_STATE_WEIGHTS = (2.0, 2.0, 2.0, 1.0, 1.0, 1.0, 1e-3, 1e-3, 0.1)
DEFAULT_FORCE_WEIGHTS = (0.1, 0.1, 1.0)
INTEGRAL_LIMIT = 5.0


class NoConvergence(RuntimeError):
    """Riccati iteration did not reach the residual tolerance."""


@dataclass
class ErrorState:
    e_p: np.ndarray
    e_v: np.ndarray
    e_i: np.ndarray

    def stacked(self):
        return np.concatenate([self.e_p, self.e_v, self.e_i])


@dataclass
class LqrGain:
    K: np.ndarray
    P: np.ndarray


def augmented_matrices(mass):
    """State and input matrices of the integrator-augmented error system."""
    if mass <= 0.0:
        raise ValueError("mass must be positive")
    I3 = np.eye(3)
    A = np.zeros((9, 9))
    A[0:3, 3:6] = I3
    A[6:9, 0:3] = I3
    B = np.zeros((9, 3))
    B[3:6, :] = I3 / mass
    return A, B


def controllability_matrix(A, B):
    n = A.shape[0]
    blocks = [B]
    for _ in range(n - 1):
        blocks.append(A @ blocks[-1])
    return np.hstack(blocks)


def solve_lyapunov(A, Q):
    """Solve ``A^T X + X A + Q = 0`` by vectorization."""
    n = A.shape[0]
    I = np.eye(n)
    # vec(A^T X + X A) = (I kron A^T + A^T kron I) vec(X), column-major vec.
    L = np.kron(I, A.T) + np.kron(A.T, I)
    x = np.linalg.solve(L, -Q.reshape(-1, order="F"))
    X = x.reshape(n, n, order="F")
    return 0.5 * (X + X.T)


def care_residual(A, B, Q, R, P):
    return A.T @ P + P @ A - P @ B @ np.linalg.solve(R, B.T @ P) + Q


def is_hurwitz(M):
    return bool(np.max(np.linalg.eigvals(M).real) < 0.0)


def stabilizing_gain(A, B, shift=None):
    """Initial stabilizing gain by Bass's algorithm.

    For ``beta`` large enough that ``-(A + beta I)`` is Hurwitz, the gain
    ``B^T X^-1`` with ``(A + beta I) X + X (A + beta I)^T = 2 B B^T``
    stabilizes any controllable pair.
    """
    n = A.shape[0]
    if shift is None:
        shift = max(1.0, np.max(np.abs(np.linalg.eigvals(A))) + 1.0, np.linalg.norm(A, 2) + 1.0)
    As = A + shift * np.eye(n)
    # As X + X As^T = 2 B B^T  <=>  (-As) X + X (-As)^T + 2 B B^T = 0
    X = solve_lyapunov(-As.T, 2.0 * B @ B.T)
    return B.T @ np.linalg.inv(X)


def solve_care(A, B, Q, R, tol=1e-10, max_iter=100):
    """Stabilizing solution of the continuous algebraic Riccati equation.

    Returns:
        LqrGain with ``K = R^-1 B^T P``.

    Raises:
        NoConvergence: if the residual does not fall below ``tol`` within
            ``max_iter`` Newton steps or an iterate loses stability.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    Q = np.asarray(Q, dtype=float)
    R = np.asarray(R, dtype=float)
    try:
        K = np.zeros((B.shape[1], A.shape[0])) if is_hurwitz(A) else stabilizing_gain(A, B)
    except np.linalg.LinAlgError:
        raise NoConvergence("pair is not controllable; no initial stabilizing gain") from None
    if not is_hurwitz(A - B @ K):
        raise NoConvergence("could not find an initial stabilizing gain")
    res = np.inf
    for _ in range(max_iter):
        Ak = A - B @ K
        try:
            P = solve_lyapunov(Ak, Q + K.T @ R @ K)
        except np.linalg.LinAlgError:
            break
        K = np.linalg.solve(R, B.T @ P)
        res = np.linalg.norm(care_residual(A, B, Q, R, P))
        if not np.all(np.isfinite(P)):
            break
        if res < tol:
            if not is_hurwitz(A - B @ K):
                break
            return LqrGain(K, P)
    raise NoConvergence(f"Riccati iteration stalled (residual {res:.3g})")


def position_gain(mass, state_weights=DEFAULT_STATE_WEIGHTS, force_weights=DEFAULT_FORCE_WEIGHTS):
    A, B = augmented_matrices(mass)
    W_e = np.diag(state_weights) if np.ndim(state_weights) == 1 else np.asarray(state_weights)
    W_f = np.diag(force_weights) if np.ndim(force_weights) == 1 else np.asarray(force_weights)
    for W in (W_e, W_f):
        if not np.allclose(W, W.T, atol=1e-12, rtol=0.0) or np.min(np.linalg.eigvalsh(W)) <= 0:
            raise ValueError("weights must be symmetric positive definite")
    return solve_care(A, B, W_e, W_f)


def equilibrium_force(point, params):
    return params.mass * (point.a - params.gravity * E3)


def force_command(e, point, gain, params):
    """Desired force ``-K e_a + m(-g e3 + a_d)``."""
    return -gain.K @ e.stacked() + equilibrium_force(point, params)


def force_derivative(e, f, point, gain, params):
    """Time derivative of :func:`force_command` under the model dynamics.

    Uses ``d e_p = e_v``, ``d e_v = g e3 + f/m - a_d`` and ``d e_i = e_p``.
    """
    ev_dot = params.gravity * E3 + f / params.mass - point.a
    ea_dot = np.concatenate([e.e_v, ev_dot, e.e_p])
    return -gain.K @ ea_dot + params.mass * point.j


def update_integral(e_i, e_p, dt, limit=INTEGRAL_LIMIT, e_p_prev=None):
    """Trapezoidal step of the position-error integral, clamped to +-limit."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if e_p_prev is None:
        e_p_prev = e_p
    return np.clip(e_i + 0.5 * dt * (e_p_prev + e_p), -limit, limit)
