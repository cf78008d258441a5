"""Attitude-only closed loops used to check the stability properties.

These loops regulate to a fixed desired rotation with ``w_d = 0``. The torque
loop evaluates the control law at every integrator stage, so the simulated
system is the continuous closed loop rather than a sampled-data one. The
rate loop slaves the body rate to the command, holding it over each step.
"""
from typing import NamedTuple

import numpy as np

from quadsim import controller as ctl
from quadsim.so3 import cross, exp_map, left_jacobian_inv


class AttitudeTrace(NamedTuple):
    t: np.ndarray
    r: np.ndarray       # rotation error, one row per sample
    w_err: np.ndarray   # rate error
    V: np.ndarray


def _errors(R, w, R_d, previous):
    r = ctl.rotation_error_log(R.T @ R_d, previous)
    return r, -w  # w_d = 0


def regulate_torque(R0, w0, R_d, gains, J, dt=1e-3, duration=2.0):
    """Continuous torque-mode regulation integrated with RK4 on SO(3)."""
    J_inv = np.linalg.inv(J)
    n = int(round(duration / dt))
    t = np.arange(n + 1) * dt
    r_log = np.zeros((n + 1, 3))
    w_log = np.zeros((n + 1, 3))
    V = np.zeros(n + 1)
    R, w = np.array(R0, dtype=float), np.array(w0, dtype=float)
    prev = None

    def w_dot(Rs, ws):
        r, w_err = _errors(Rs, ws, R_d, prev)
        tau = (cross(ws, J @ ws) + left_jacobian_inv(r).T @ (gains.K_r @ r)
               + gains.K_w @ w_err)
        return J_inv @ (cross(J @ ws, ws) + tau)

    def stage(theta, dw):
        Rs, ws = R @ exp_map(theta), w + dw
        th_dot = ws if not theta.any() else left_jacobian_inv(-theta) @ ws
        return th_dot, w_dot(Rs, ws)

    for k in range(n + 1):
        r, w_err = _errors(R, w, R_d, prev)
        prev = r
        r_log[k], w_log[k] = r, w_err
        V[k] = ctl.lyapunov_value(ctl.RotationalError(r, w_err), gains.K_r, J)
        if k == n:
            break
        z = np.zeros(3)
        t1, a1 = stage(z, z)
        t2, a2 = stage(0.5 * dt * t1, 0.5 * dt * a1)
        t3, a3 = stage(0.5 * dt * t2, 0.5 * dt * a2)
        t4, a4 = stage(dt * t3, dt * a3)
        R = R @ exp_map(dt / 6.0 * (t1 + 2 * t2 + 2 * t3 + t4))
        w = w + dt / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4)
    return AttitudeTrace(t, r_log, w_log, V)


def regulate_rate(R0, R_d, K_r, dt=1e-3, duration=1.0):
    """Rate-mode regulation: ``R <- R Exp(w_c dt)`` with ``w_c`` held per step."""
    n = int(round(duration / dt))
    t = np.arange(n + 1) * dt
    r_log = np.zeros((n + 1, 3))
    R = np.array(R0, dtype=float)
    zero = np.zeros(3)
    prev = None
    for k in range(n + 1):
        R_db = R.T @ R_d
        r = ctl.rotation_error_log(R_db, prev)
        prev = r
        r_log[k] = r
        if k == n:
            break
        w_c = R_db @ zero + ctl.left_jacobian(r) @ (K_r @ r)
        R = R @ exp_map(dt * w_c)
    V = 0.5 * np.einsum("ij,jk,ik->i", r_log, K_r, r_log)
    return AttitudeTrace(t, r_log, np.zeros_like(r_log), V)


def half_turn_start(u):
    """Body attitude whose log error to the identity is a half-turn about ``u``."""
    u = np.asarray(u, dtype=float)
    return exp_map(np.pi * u / np.linalg.norm(u))


def random_axes(n, seed=0):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def dissipation_error(trace, K_w):
    """Measured ``dV/dt`` minus ``-w_err^T K_w w_err`` at interior samples.

    The derivative uses the fourth-order five-point central stencil; the
    three-point stencil's truncation error alone is about 2e-3 of V at 1 ms
    during the initial transient. Returns ``(residual, V)``.
    """
    dt = trace.t[1] - trace.t[0]
    V = trace.V
    dV = (-V[4:] + 8.0 * V[3:-1] - 8.0 * V[1:-3] + V[:-4]) / (12.0 * dt)
    w = trace.w_err[2:-2]
    predicted = -np.einsum("ij,jk,ik->i", w, K_w, w)
    return dV - predicted, V[2:-2]
