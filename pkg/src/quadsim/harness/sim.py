"""Closed-loop simulation: trajectory -> LQR -> attitude reference ->
attitude controller -> mixer -> plant."""
import logging
from dataclasses import dataclass

import numpy as np

from quadsim import attitude_reference as aref
from quadsim import controller as ctl
from quadsim import lqr
from quadsim import rigid_body as rb
from quadsim.trajectory import sample

from .telemetry import TelemetryLog, compute_metrics

log = logging.getLogger(__name__)


class BlowUp(RuntimeError):
    """The plant state became non-finite; carries the partial run."""

    def __init__(self, t, telemetry, metrics):
        super().__init__(f"simulation diverged at t = {t:.4f} s")
        self.t = t
        self.telemetry = telemetry
        self.metrics = metrics


@dataclass
class StepRecord:
    """Everything the controller computed at one control step."""
    point: object
    error: lqr.ErrorState
    f: np.ndarray
    f_dot: np.ndarray
    ref: aref.AttitudeRef
    rot_error: ctl.RotationalError
    thrust: float
    tau: np.ndarray
    delta: np.ndarray
    w_cmd: np.ndarray = None


class ReferenceGenerator:
    """Desired attitude from the position loop, holding the last valid
    attitude through force or heading degeneracies."""

    def __init__(self, traj, gain, params):
        self.traj = traj
        self.gain = gain
        self.params = params
        self.prev_R = np.eye(3)

    def _rate_at(self, t, tau, e, ea_dot):
        pt = sample(self.traj, tau)
        ea = e.stacked() + (tau - t) * ea_dot
        e_tau = lqr.ErrorState(ea[0:3], ea[3:6], ea[6:9])
        f = lqr.force_command(e_tau, pt, self.gain, self.params)
        f_dot = lqr.force_derivative(e_tau, f, pt, self.gain, self.params)
        return aref.desired_rates(f, f_dot, pt.psi, pt.psi_dot, self.prev_R[:, 1])

    def __call__(self, t, point, e, f, f_dot):
        p = self.params
        thrust = aref.thrust_magnitude(f)
        try:
            R_d, R_d_dot = aref.desired_rotation_and_derivative(
                f, f_dot, point.psi, point.psi_dot, self.prev_R[:, 1])
        except aref.DegenerateForce:
            return aref.AttitudeRef(self.prev_R.copy(), np.zeros(3), np.zeros(3), thrust)
        W = R_d.T @ R_d_dot
        w_d = 0.5 * np.array([W[2, 1] - W[1, 2], W[0, 2] - W[2, 0], W[1, 0] - W[0, 1]])
        # Model-predicted error rate used to extrapolate the force for the
        # finite-difference angular acceleration.
        ev_dot = p.gravity * rb.E3 + f / p.mass - point.a
        ea_dot = np.concatenate([e.e_v, ev_dot, e.e_p])
        try:
            w_d_dot = aref.desired_rate_derivative(
                lambda tau: self._rate_at(t, tau, e, ea_dot), t)
        except (aref.DegenerateForce, aref.HeadingParallel):
            w_d_dot = np.zeros(3)
        self.prev_R = R_d
        return aref.AttitudeRef(R_d, w_d, w_d_dot, thrust)


class ClosedLoop:
    """One run's controller state and plant, advanced one step at a time."""

    def __init__(self, config):
        self.config = config.validate()
        self.params = config.vehicle
        self.gain = lqr.position_gain(self.params.mass, config.state_weights, config.force_weights)
        self.gains = config.attitude_gains
        self.refgen = ReferenceGenerator(config.trajectory, self.gain, self.params)
        self.rng = np.random.default_rng(int(config.seed))
        self.x = config.initial_state.copy()
        self.e_i = np.zeros(3)
        self.e_p_prev = None
        self.prev_r = None
        self.saturated = False

    def control(self, t):
        cfg, p = self.config, self.params
        point = sample(cfg.trajectory, t)
        e_p = self.x.p - point.p
        e_v = self.x.v - point.v
        # Conditional integration: hold the integral while the previous
        # throttle command was clipped.
        hold = cfg.freeze_integral_on_saturation and self.saturated
        if self.e_p_prev is not None and not hold:
            self.e_i = lqr.update_integral(self.e_i, e_p, cfg.dt, cfg.integral_limit,
                                           self.e_p_prev)
        self.e_p_prev = e_p
        e = lqr.ErrorState(e_p, e_v, self.e_i)
        f = lqr.force_command(e, point, self.gain, p)
        f_dot = lqr.force_derivative(e, f, point, self.gain, p)
        ref = self.refgen(t, point, e, f, f_dot)

        w_cmd = None
        if cfg.mode == "torque":
            tau, err = ctl.torque_command(self.x, ref, self.gains, p.inertia, self.prev_r)
            thrust = ref.thrust
        elif cfg.mode == "rate":
            w_cmd, r = ctl.rate_command(self.x.R, ref, self.gains.K_r, self.prev_r)
            R_db = self.x.R.T @ ref.R_d
            err = ctl.RotationalError(r, ctl.rate_error(R_db, ref.w_d, w_cmd))
            tau = np.zeros(3)
            thrust = ref.thrust
        else:
            thrust, tau, err = ctl.lee2010_baseline(
                self.x, ref, cfg.baseline_gains, p.inertia, f)
        self.prev_r = err.r
        wrench = rb.WrenchCommand(thrust, tau)
        raw = rb.unmix(wrench, p.controller_mixer_inv)
        delta = np.clip(raw, 0.0, 1.0)
        self.saturated = bool(np.any(raw != delta))
        return StepRecord(point, e, f, f_dot, ref, err, thrust, tau, delta, w_cmd)

    def advance(self, rec):
        cfg, p = self.config, self.params
        if cfg.mode == "rate":
            delta = rb.apply_throttle_noise(rec.delta, cfg.noise_std, self.rng)
            thrust = rb.mix(delta, p.mixer).thrust
            self.x = rb.kinematic_rate_step(self.x, thrust, rec.w_cmd, cfg.dt, p)
        else:
            self.x = rb.step(self.x, rec.delta, cfg.dt, p, self.rng, cfg.noise_std)


def run(config, on_step=None):
    """Simulate ``config`` and return ``(TelemetryLog, RunMetrics)``.

    ``on_step(t, loop, record)`` is called after each control computation,
    before the plant advances.

    Raises:
        BlowUp: if the plant diverges; the partial log and metrics are attached.
    """
    loop = ClosedLoop(config)
    n = config.steps
    dt = config.dt
    telemetry = TelemetryLog(n + 1)
    ref_p = np.zeros((n + 1, 3))
    ref_v = np.zeros((n + 1, 3))
    K_r, J = loop.gains.K_r, loop.params.inertia
    for k in range(n + 1):
        t = k * dt
        rec = loop.control(t)
        V = ctl.lyapunov_value(rec.rot_error, K_r, J)
        telemetry.append(t, loop.x, rec.rot_error.r, rec.rot_error.w, rec.f,
                         rec.thrust, rec.tau, rec.delta, V)
        ref_p[k] = rec.point.p
        ref_v[k] = rec.point.v
        if on_step is not None:
            on_step(t, loop, rec)
        if k == n:
            break
        try:
            loop.advance(rec)
        except rb.NonFiniteState:
            log.warning("plant diverged at t=%.4f s", t)
            telemetry.finish()
            rows = telemetry.rows
            metrics = compute_metrics(telemetry, ref_p[:rows], ref_v[:rows], config,
                                      blew_up_at=t)
            raise BlowUp(t, telemetry, metrics) from None
    telemetry.finish()
    return telemetry, compute_metrics(telemetry, ref_p, ref_v, config)
