"""Attitude control on SO(3) with logarithmic rotation error.

Notation: ``R_b`` is body-to-inertial, ``R_d`` desired-to-inertial and
``R_db = R_b^T R_d`` the desired frame seen from the body. ``w_d`` is the
desired rate in the desired frame, ``w_b`` the body rate in the body frame.
"""
from dataclasses import dataclass, field

import numpy as np

from quadsim.rigid_body import E3
from quadsim.so3 import (PI_ANGLE, _vee_unchecked, cross, left_jacobian,
                         left_jacobian_inv, log_map)

TRACE_EPS = 1e-12


class SingularTrace(ValueError):
    """The Lee (2012) error is undefined at a half-turn."""


@dataclass
class AttitudeGains:
    K_r: np.ndarray = field(default_factory=lambda: np.diag([10.0, 10.0, 10.0]))
    K_w: np.ndarray = field(default_factory=lambda: np.diag([1.2, 1.2, 1.2]))

    def __post_init__(self):
        self.K_r = np.array(self.K_r, dtype=float)
        self.K_w = np.array(self.K_w, dtype=float)
        for name, K in (("K_r", self.K_r), ("K_w", self.K_w)):
            if not np.allclose(K, K.T) or np.min(np.linalg.eigvalsh(K)) <= 0.0:
                raise ValueError(f"{name} must be symmetric positive definite")


@dataclass
class RotationalError:
    r: np.ndarray
    w: np.ndarray


def error_rotation(R_b, R_d):
    return R_b.T @ R_d


def rotation_error_log(R_db, previous=None):
    """Log of the error rotation.

    When ``previous`` is given and the angle is within ``PI_ANGLE`` of pi,
    the axis sign closest to ``previous`` is kept so the error does not jump
    between antipodal representatives.
    """
    r = log_map(R_db, check=False)
    if previous is not None and np.linalg.norm(r) >= np.pi - PI_ANGLE and r @ previous < 0.0:
        r = -r
    return r


def rotation_error_lee2010(R_db):
    """``(R_db - R_db^T)^vee / 2``, magnitude ``sin(phi)``."""
    return 0.5 * _vee_unchecked(R_db - R_db.T)


def rotation_error_lee2012(R_db):
    """``(R_db - R_db^T)^vee / (2 sqrt(1 + tr R_db))``, magnitude ``sin(phi/2)``.

    Within about 1e-4 rad of a half-turn ``1 + tr`` is dominated by rounding
    and the magnitude is only accurate to a few digits.

    Raises:
        SingularTrace: at a half-turn, where ``1 + tr(R_db)`` vanishes.
    """
    s = 1.0 + np.trace(R_db)
    if s <= TRACE_EPS:
        raise SingularTrace(f"1 + tr(R) = {s:.3g}")
    return _vee_unchecked(R_db - R_db.T) / (2.0 * np.sqrt(s))


def rate_error(R_db, w_d, w_b):
    return R_db @ w_d - w_b


def omega_d_dot_body(R_db, w_d, w_d_dot, w_b):
    """Derivative of ``R_db w_d`` seen in the body frame."""
    return R_db @ w_d_dot - cross(w_b, R_db @ w_d)


def torque_command(state, ref, gains, J, previous_r=None):
    """Torque driving the log error and rate error to zero.

    ``tau = w x J w + J dw_d + J_l(r)^-T K_r r + K_w w_err``.

    Returns:
        ``(tau, RotationalError)``.
    """
    R_b, w_b = state.R, state.w
    R_db = R_b.T @ ref.R_d
    r = rotation_error_log(R_db, previous_r)
    w_err = rate_error(R_db, ref.w_d, w_b)
    wd_dot = omega_d_dot_body(R_db, ref.w_d, ref.w_d_dot, w_b)
    tau = (cross(w_b, J @ w_b) + J @ wd_dot
           + left_jacobian_inv(r).T @ (gains.K_r @ r) + gains.K_w @ w_err)
    return tau, RotationalError(r, w_err)


def rate_command(R_b, ref, K_r, previous_r=None):
    """Body-rate command ``R_db w_d + J_l(r) K_r r`` for a fast inner rate loop.

    Returns:
        ``(w_c, r)``.
    """
    R_db = R_b.T @ ref.R_d
    r = rotation_error_log(R_db, previous_r)
    return R_db @ ref.w_d + left_jacobian(r) @ (K_r @ r), r


def lee2010_baseline(state, ref, gains, J, f):
    """Geometric tracking controller of Lee, Leok and McClamroch (2010).

    Uses ``e_R = (R_d^T R - R^T R_d)^vee / 2`` and the projected thrust
    ``T = -f . R e3``. In this module's sign convention the torque is
    ``w x J w + J dw_d + K_r r_lee + K_w w_err`` with ``r_lee = -e_R``.

    Returns:
        ``(T, tau, RotationalError)`` where the error holds ``r_lee``.
    """
    R_b, w_b = state.R, state.w
    R_db = R_b.T @ ref.R_d
    r = rotation_error_lee2010(R_db)
    w_err = rate_error(R_db, ref.w_d, w_b)
    wd_dot = omega_d_dot_body(R_db, ref.w_d, ref.w_d_dot, w_b)
    tau = cross(w_b, J @ w_b) + J @ wd_dot + gains.K_r @ r + gains.K_w @ w_err
    thrust = -float(f @ (R_b @ E3))
    return thrust, tau, RotationalError(r, w_err)


def lyapunov_value(err, K_r, J):
    return 0.5 * float(err.r @ K_r @ err.r) + 0.5 * float(err.w @ J @ err.w)
