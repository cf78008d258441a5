"""Desired attitude, rates and thrust from a desired force and heading.

The desired frame has its k-axis opposite the force (rotors push along -k)
and its i-axis as close to the commanded heading as the k-axis allows.
"""
from dataclasses import dataclass

import numpy as np

from quadsim.so3 import _vee_unchecked, cross

FORCE_EPS = 1e-3
CROSS_EPS = 1e-6
RATE_FD_STEP = 1e-4


class DegenerateForce(ValueError):
    """Desired force is too small to define a thrust direction."""


class HeadingParallel(ValueError):
    """Desired k-axis is parallel to the heading vector."""


@dataclass
class AttitudeRef:
    R_d: np.ndarray
    w_d: np.ndarray
    w_d_dot: np.ndarray
    thrust: float


def _heading_vector(psi):
    return np.array([np.cos(psi), np.sin(psi), 0.0])


def _axes(f, psi, fallback_j=None):
    n = np.linalg.norm(f)
    if n <= FORCE_EPS:
        raise DegenerateForce(f"|f| = {n:.3g} N")
    k = -f / n
    s = _heading_vector(psi)
    c = cross(k, s)
    cn = np.linalg.norm(c)
    held = False
    if cn <= CROSS_EPS:
        if fallback_j is None:
            raise HeadingParallel("desired k-axis parallel to heading")
        # Replace the heading with the previous j-axis: k x (j x k) keeps the
        # old lateral direction.
        s = cross(fallback_j, k)
        c = cross(k, s)
        cn = np.linalg.norm(c)
        if cn <= CROSS_EPS:
            raise HeadingParallel("fallback j-axis also parallel to k")
        held = True
    return n, k, s, c, cn, held


def desired_rotation(f, psi, fallback_j=None):
    """Rotation whose k-axis is ``-f/|f|`` and whose heading follows ``psi``.

    Raises:
        DegenerateForce: if ``|f| <= FORCE_EPS``.
        HeadingParallel: if ``k_d x s_d`` vanishes and no fallback is given.
    """
    _, k, _, c, cn, _ = _axes(np.asarray(f, dtype=float), psi, fallback_j)
    j = c / cn
    i = cross(j, k)
    return np.column_stack((i, j, k))


def desired_rotation_and_derivative(f, f_dot, psi, psi_dot, fallback_j=None):
    """``R_d`` and its time derivative from analytic differentiation of the axes."""
    f = np.asarray(f, dtype=float)
    f_dot = np.asarray(f_dot, dtype=float)
    n, k, s, c, cn, held = _axes(f, psi, fallback_j)
    k_dot = -(f_dot / n - f * (f @ f_dot) / n ** 3)
    if held:
        s_dot = np.zeros(3)
    else:
        s_dot = psi_dot * np.array([-np.sin(psi), np.cos(psi), 0.0])
    c_dot = cross(k_dot, s) + cross(k, s_dot)
    j = c / cn
    j_dot = c_dot / cn - c * (c @ c_dot) / cn ** 3
    i = cross(j, k)
    i_dot = cross(j_dot, k) + cross(j, k_dot)
    return np.column_stack((i, j, k)), np.column_stack((i_dot, j_dot, k_dot))


def desired_rates(f, f_dot, psi, psi_dot, fallback_j=None):
    """Desired body rate ``(R_d^T dR_d/dt)^vee`` expressed in the desired frame."""
    R, R_dot = desired_rotation_and_derivative(f, f_dot, psi, psi_dot, fallback_j)
    W = R.T @ R_dot
    return 0.5 * _vee_unchecked(W - W.T)


def desired_rate_derivative(rate_at, t, h=RATE_FD_STEP):
    """Central difference of ``rate_at(t)``, a callable returning ``w_d``."""
    return (np.asarray(rate_at(t + h)) - np.asarray(rate_at(t - h))) / (2.0 * h)


def thrust_magnitude(f):
    return float(np.linalg.norm(f))
