"""Quadrotor rigid-body plant: mixing, saturation, dynamics and integration.

Frames are north-east-down. The body k-axis points out of the underside, so
rotor thrust acts along ``-R e3`` in the inertial frame.
"""
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from quadsim.so3 import cross, exp_map, left_jacobian_inv

E3 = np.array([0.0, 0.0, 1.0])


class DegenerateGeometry(ValueError):
    """Mixing matrix parameters are not all positive."""


class NonFiniteState(FloatingPointError):
    """Integration produced NaN or Inf."""


LAYOUTS = ("x", "plus")


def build_mixing_matrix(arm_length, max_thrust, max_torque, layout="x"):
    """Mixing matrix for a quadrotor in X or plus configuration.

    Rows map throttles to ``(T, tau_x, tau_y, tau_z)``. For ``"x"`` the
    rotors sit on the 45 degree diagonals in the order front-right,
    back-left, front-left, back-right. For ``"plus"`` they sit on the body
    axes in the order front, back, right, left. Opposite rotors share a spin
    direction.

    Raises:
        DegenerateGeometry: if any parameter is not strictly positive.
    """
    if min(arm_length, max_thrust, max_torque) <= 0.0:
        raise DegenerateGeometry(
            f"arm_length={arm_length}, max_thrust={max_thrust}, "
            f"max_torque={max_torque} must all be > 0")
    if layout == "x":
        d = arm_length / np.sqrt(2.0)
        xy = np.array([[d, d], [-d, -d], [d, -d], [-d, d]])
    elif layout == "plus":
        l = arm_length
        xy = np.array([[l, 0.0], [-l, 0.0], [0.0, l], [0.0, -l]])
    else:
        raise ValueError(f"unknown rotor layout {layout!r}")
    spin = np.array([1.0, 1.0, -1.0, -1.0])
    M = np.empty((4, 4))
    M[0] = max_thrust
    # r x (0, 0, -F) = (-y F, x F, 0)
    M[1] = -xy[:, 1] * max_thrust
    M[2] = xy[:, 0] * max_thrust
    M[3] = spin * max_torque
    return M


@dataclass
class VehicleParams:
    mass: float = 1.0
    gravity: float = 9.81
    inertia: np.ndarray = field(default_factory=lambda: np.diag([0.07, 0.07, 0.12]))
    arm_length: float = 0.25
    max_thrust: float = 9.81
    max_torque: float = 5.0
    layout: str = "x"
    # Controller-side estimate of max_thrust as a multiple of the true value.
    thrust_estimate_scale: float = 1.0

    def __post_init__(self):
        self.inertia = np.array(self.inertia, dtype=float)
        if self.mass <= 0.0 or self.gravity <= 0.0:
            raise ValueError("mass and gravity must be positive")
        if not np.allclose(self.inertia, self.inertia.T):
            raise ValueError("inertia must be symmetric")
        if np.min(np.linalg.eigvalsh(self.inertia)) <= 0.0:
            raise ValueError("inertia must be positive definite")
        self.inertia_inv = np.linalg.inv(self.inertia)
        self.mixer = build_mixing_matrix(self.arm_length, self.max_thrust, self.max_torque,
                                         self.layout)
        self.controller_mixer = build_mixing_matrix(
            self.arm_length, self.max_thrust * self.thrust_estimate_scale, self.max_torque,
            self.layout)
        if not np.isfinite(np.linalg.cond(self.mixer)):
            raise DegenerateGeometry("mixing matrix is singular")
        self.mixer_inv = np.linalg.inv(self.mixer)
        self.controller_mixer_inv = np.linalg.inv(self.controller_mixer)


class WrenchCommand(NamedTuple):
    thrust: float
    torque: np.ndarray


@dataclass
class QuadState:
    p: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    R: np.ndarray = field(default_factory=lambda: np.eye(3))
    w: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def copy(self):
        return QuadState(self.p.copy(), self.v.copy(), self.R.copy(), self.w.copy())

    def is_finite(self):
        return bool(np.all(np.isfinite(self.p)) and np.all(np.isfinite(self.v))
                    and np.all(np.isfinite(self.R)) and np.all(np.isfinite(self.w)))


class StateDerivative(NamedTuple):
    p_dot: np.ndarray
    v_dot: np.ndarray
    w: np.ndarray  # body rate driving R_dot = R hat(w)
    w_dot: np.ndarray


def mix(delta, M):
    """Throttles to wrench, ``(T, tau) = M delta``."""
    out = M @ np.asarray(delta, dtype=float)
    return WrenchCommand(float(out[0]), out[1:])


def unmix(wrench, M_inv):
    """Unsaturated throttles ``M^-1 (T, tau)``."""
    return M_inv @ np.array([wrench.thrust, *wrench.torque])


def unmix_and_saturate(wrench, M):
    """Throttles for a wrench, clamped componentwise to [0, 1]."""
    raw = np.linalg.solve(M, np.array([wrench.thrust, *wrench.torque]))
    return np.clip(raw, 0.0, 1.0)


def state_derivative(x, wrench, params):
    J = params.inertia
    w = x.w
    v_dot = params.gravity * E3 - (wrench.thrust / params.mass) * x.R[:, 2]
    w_dot = params.inertia_inv @ (cross(J @ w, w) + wrench.torque)
    return StateDerivative(x.v, v_dot, w, w_dot)


def rk4_step(x, wrench, dt, params):
    """One RK4 step with the wrench held constant.

    The rotation is propagated as ``R0 Exp(theta)`` where ``theta`` is
    integrated in the tangent space with the inverse right Jacobian
    (``J_r^-1(theta) = J_l^-1(-theta)``), so R stays on SO(3) to rounding.
    """
    def stage(theta, dp, dv, dw):
        xs = QuadState(x.p + dp, x.v + dv, x.R @ exp_map(theta), x.w + dw)
        d = state_derivative(xs, wrench, params)
        theta_dot = d.w if not theta.any() else left_jacobian_inv(-theta) @ d.w
        return d, theta_dot

    zero = np.zeros(3)
    d1, t1 = stage(zero, zero, zero, zero)
    h = 0.5 * dt
    d2, t2 = stage(h * t1, h * d1.p_dot, h * d1.v_dot, h * d1.w_dot)
    d3, t3 = stage(h * t2, h * d2.p_dot, h * d2.v_dot, h * d2.w_dot)
    d4, t4 = stage(dt * t3, dt * d3.p_dot, dt * d3.v_dot, dt * d3.w_dot)

    s = dt / 6.0
    theta = s * (t1 + 2.0 * t2 + 2.0 * t3 + t4)
    out = QuadState(
        x.p + s * (d1.p_dot + 2.0 * d2.p_dot + 2.0 * d3.p_dot + d4.p_dot),
        x.v + s * (d1.v_dot + 2.0 * d2.v_dot + 2.0 * d3.v_dot + d4.v_dot),
        x.R @ exp_map(theta),
        x.w + s * (d1.w_dot + 2.0 * d2.w_dot + 2.0 * d3.w_dot + d4.w_dot),
    )
    if not out.is_finite():
        raise NonFiniteState(f"non-finite state after step: {out}")
    return out


def apply_throttle_noise(delta, noise_std, rng):
    if noise_std <= 0.0:
        return np.asarray(delta, dtype=float)
    return np.clip(delta + rng.normal(0.0, noise_std, size=4), 0.0, 1.0)


def step(x, delta, dt, params, rng=None, noise_std=0.0):
    """Advance the plant by ``dt`` with throttles held constant.

    Noise is added to the throttles before they pass through the true mixer.

    Raises:
        NonFiniteState: if the integrated state is not finite.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if noise_std > 0.0 and rng is None:
        raise ValueError("rng required when noise_std > 0")
    delta = apply_throttle_noise(delta, noise_std, rng)
    return rk4_step(x, mix(delta, params.mixer), dt, params)


def kinematic_rate_step(x, thrust, w_cmd, dt, params):
    """Plant step when the body rate is slaved to a command.

    Angular rate dynamics are skipped: ``w`` is set to ``w_cmd`` and the
    rotation follows ``R Exp(w_cmd dt)``. Translation is integrated with RK4
    along the same rotation path.
    """
    w_cmd = np.asarray(w_cmd, dtype=float)
    g = params.gravity * E3
    a = thrust / params.mass

    def accel(tau):
        return g - a * (x.R @ exp_map(tau * dt * w_cmd))[:, 2]

    k1 = accel(0.0)
    k23 = accel(0.5)
    k4 = accel(1.0)
    v_new = x.v + dt / 6.0 * (k1 + 4.0 * k23 + k4)
    # Position: Simpson on v(t) with v at the midpoint from the same stages.
    v_mid = x.v + dt / 24.0 * (5.0 * k1 + 8.0 * k23 - k4)
    p_new = x.p + dt / 6.0 * (x.v + 4.0 * v_mid + v_new)
    out = QuadState(p_new, v_new, x.R @ exp_map(dt * w_cmd), w_cmd.copy())
    if not out.is_finite():
        raise NonFiniteState(f"non-finite state after step: {out}")
    return out
