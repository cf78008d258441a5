"""Named experiments: presets, acceptance checks and output files.

Each experiment returns a list of :class:`Criterion` results and writes its
artifacts into an output directory: telemetry CSV, a ``key=value`` metrics
file and ``criteria.txt`` with one PASS/FAIL line per check.
"""
import logging
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from quadsim import controller as ctl
from quadsim import trajectory as trajectories
from quadsim.controller import AttitudeGains
from quadsim.rigid_body import QuadState, VehicleParams
from quadsim.so3 import exp_map, left_jacobian_inv

from . import attitude_loop as al
from .config import RunConfig, load_config
from .sim import BlowUp, run
from .telemetry import IoFailure, write_csv, write_metrics

log = logging.getLogger(__name__)

EXPERIMENTS = ("fast_circles", "flipping_loops", "upside_down", "error_sweep",
               "rate_mode_recovery", "attitude_regulation")

# Acceptance bands.
CIRCLE_CONVERGENCE_TIME = 3.0
CIRCLE_ROLL_BAND = (np.radians(60.0), np.radians(80.0))
CIRCLE_RADIUS_ERROR = 1.0
LOOP_RMS = 0.5
DROP_BAND = (4.5, 8.5)
LEMMA1_TOL = 1e-3
BRANCH_MARGIN = 1e-2
DISSIPATION_TOL = 1e-3
SWEEP_TOL = 1e-9
SWEEP_POINTS = 1001
ESCAPE_ANGLE = np.pi - 1e-2
ESCAPE_TIME = 0.1
DECAY_AFTER = 0.05
DECAY_MARGIN = 0.9
AXIS_COUNT = 100


class UnknownExperiment(ValueError):
    """Experiment name is not one of :data:`EXPERIMENTS`."""


@dataclass
class Criterion:
    name: str
    passed: bool
    detail: str

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def _check(name, passed, detail):
    return Criterion(name, bool(passed), detail)


def biased_vehicle():
    """Vehicle with the controller's thrust estimate 10% high."""
    return VehicleParams(thrust_estimate_scale=1.1)


def preset(name):
    """Default :class:`RunConfig` for a simulation experiment."""
    if name == "fast_circles":
        return RunConfig("fast_circles", trajectory=trajectories.fast_circle(),
                         vehicle=biased_vehicle(), noise_std=0.04, duration=10.0)
    if name == "flipping_loops":
        return RunConfig("flipping_loops", trajectory=trajectories.flipping_loop(),
                         vehicle=biased_vehicle(), noise_std=0.04, duration=10.0,
                         initial_state=QuadState(p=np.array([0.0, 0.0, -1.5])))
    if name == "upside_down":
        return RunConfig("upside_down", trajectory=trajectories.hover(),
                         vehicle=biased_vehicle(), noise_std=0.04, duration=15.0,
                         initial_state=QuadState(R=exp_map([np.pi, 0.0, 0.0])))
    if name == "rate_mode_recovery":
        return RunConfig("rate_mode_recovery", mode="rate", trajectory=trajectories.hover(),
                         vehicle=biased_vehicle(), noise_std=0.04, duration=15.0,
                         gains=AttitudeGains(np.diag([5.0, 5.0, 5.0])),
                         initial_state=QuadState(R=exp_map([np.pi, 0.0, 0.0])))
    if name in EXPERIMENTS:
        return RunConfig(name)
    raise UnknownExperiment(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")


def make_config(name, config_path=None, seed=None):
    """Preset for ``name`` with an optional config file and seed applied on top."""
    config = preset(name)
    if config_path is not None:
        config = load_config(config_path, base=config)
    if seed is not None:
        config = replace(config, seed=int(seed)).validate()
    return config


def _run_safely(config):
    """Run and return ``(log, metrics)``; a blow-up returns the partial run."""
    try:
        return run(config)
    except BlowUp as exc:
        log.warning("%s (%s) diverged at t = %.3f s", config.experiment, config.mode, exc.t)
        return exc.telemetry, exc.metrics


def _save(out, stem, telemetry, metrics):
    write_csv(telemetry, Path(out) / f"{stem}.csv")
    write_metrics(metrics, Path(out) / f"{stem}.metrics")


# --- simulation experiments ------------------------------------------------

def circle_criteria(metrics):
    """Checks on fast-circle metrics (a single run or a seed average)."""
    lo, hi = CIRCLE_ROLL_BAND
    return [
        _check("altitude converged within 3 s",
               metrics.convergence_time <= CIRCLE_CONVERGENCE_TIME,
               f"convergence_time = {metrics.convergence_time:.3f} s"),
        _check("steady mean |roll| in [60, 80] deg",
               lo <= metrics.steady_mean_abs_roll <= hi,
               f"mean |roll| = {np.degrees(metrics.steady_mean_abs_roll):.2f} deg"),
        _check("steady radius error < 1 m",
               metrics.steady_radius_error < CIRCLE_RADIUS_ERROR,
               f"radius error = {metrics.steady_radius_error:.3f} m"),
    ]


def fast_circles(config, out):
    telemetry, metrics = _run_safely(config)
    _save(out, "fast_circles", telemetry, metrics)
    return circle_criteria(metrics)


def lemma1_residual(t, r, R_b, R_d, w_b, margin=BRANCH_MARGIN):
    """Largest gap between the central difference of ``r`` and ``J_l^-1(r) w_err``.

    ``w_err`` uses the desired rate of the realized desired frame, itself a
    central difference of ``R_d``. Samples whose neighbourhood comes within
    ``margin`` of a half-turn error are skipped.

    Returns ``(max_residual, samples_used)``.
    """
    dt = t[1] - t[0]
    angle = np.linalg.norm(r, axis=1)
    worst, used = 0.0, 0
    for k in range(1, len(t) - 1):
        if np.max(angle[k - 1:k + 2]) > np.pi - margin:
            continue
        W = R_d[k].T @ (R_d[k + 1] - R_d[k - 1]) / (2.0 * dt)
        w_d = 0.5 * np.array([W[2, 1] - W[1, 2], W[0, 2] - W[2, 0], W[1, 0] - W[0, 1]])
        w_err = ctl.rate_error(R_b[k].T @ R_d[k], w_d, w_b[k])
        fd = (r[k + 1] - r[k - 1]) / (2.0 * dt)
        worst = max(worst, float(np.linalg.norm(fd - left_jacobian_inv(r[k]) @ w_err)))
        used += 1
    return worst, used


def run_with_desired_frames(config):
    """Run and also return the desired rotation at every control step."""
    frames = []
    telemetry, metrics = run(config, on_step=lambda t, loop, rec: frames.append(rec.ref.R_d))
    return telemetry, metrics, np.array(frames)


def flipping_loops(config, out):
    telemetry, metrics = _run_safely(config)
    _save(out, "flipping_loops", telemetry, metrics)
    results = [
        _check("steady RMS position error < 0.5 m",
               metrics.steady_rms_position_error < LOOP_RMS,
               f"rms = {metrics.steady_rms_position_error:.3f} m"),
        _check("max unwrapped |roll| > 180 deg",
               metrics.max_abs_unwrapped_roll > np.pi,
               f"max |roll| = {np.degrees(metrics.max_abs_unwrapped_roll):.1f} deg"),
    ]
    clean = replace(config, noise_std=0.0, experiment="flipping_loops_noise_free")
    tel, met, R_d = run_with_desired_frames(clean)
    _save(out, "flipping_loops_noise_free", tel, met)
    worst, used = lemma1_residual(tel.column("t"), tel.columns("r_x", "r_y", "r_z"),
                                  tel.rotations, R_d, tel.columns("w_x", "w_y", "w_z"))
    results.append(_check("error dynamics match J_l^-1 w_err", worst < LEMMA1_TOL,
                          f"max residual = {worst:.2e} over {used} steps"))
    return results


def upside_down(config, out):
    ours = replace(config, mode="torque")
    telemetry, metrics = _run_safely(ours)
    _save(out, "upside_down", telemetry, metrics)
    lo, hi = DROP_BAND
    base = replace(config, mode="lee2010", experiment="upside_down_lee2010")
    b_tel, b_metrics = _run_safely(base)
    _save(out, "upside_down_lee2010", b_tel, b_metrics)
    return [
        _check("torque controller recovers", metrics.recovered,
               f"recovery_time = {metrics.recovery_time:.3f} s"),
        _check("altitude drop in [4.5, 8.5] m", lo <= metrics.max_altitude_drop <= hi,
               f"drop = {metrics.max_altitude_drop:.3f} m"),
        _check("baseline does not recover", not b_metrics.recovered,
               f"recovered = {b_metrics.recovered}, final altitude drop = "
               f"{b_tel.column('p_z')[-1] - b_tel.column('p_z')[0]:.1f} m"),
    ]


# --- error-function sweep --------------------------------------------------

def error_sweep_table(points=SWEEP_POINTS):
    """Rows ``(phi, |r_lee2010|, |r_lee2012|, |r_log|)`` for ``Exp(phi e1)``.

    The Lee (2012) error is undefined at a half-turn and is NaN there.
    """
    table = np.zeros((points, 4))
    for k, phi in enumerate(np.linspace(0.0, np.pi, points)):
        R = exp_map([phi, 0.0, 0.0])
        try:
            r12 = np.linalg.norm(ctl.rotation_error_lee2012(R))
        except ctl.SingularTrace:
            r12 = np.nan
        table[k] = (phi, np.linalg.norm(ctl.rotation_error_lee2010(R)), r12,
                    np.linalg.norm(ctl.rotation_error_log(R)))
    return table


def sweep_criteria(table):
    phi = table[:, 0]
    ok12 = ~np.isnan(table[:, 2])
    e10 = np.max(np.abs(table[:, 1] - np.sin(phi)))
    e12 = np.max(np.abs(table[ok12, 2] - np.sin(0.5 * phi[ok12])))
    elog = np.max(np.abs(table[:, 3] - phi))
    return [
        _check("|r_log| = phi", elog < SWEEP_TOL, f"max error = {elog:.1e}"),
        _check("|r_lee2010| = sin(phi)", e10 < SWEEP_TOL, f"max error = {e10:.1e}"),
        _check("|r_lee2012| = sin(phi/2)", e12 < SWEEP_TOL,
               f"max error = {e12:.1e} ({np.count_nonzero(~ok12)} singular point excluded)"),
    ]


def error_sweep(config, out):
    table = error_sweep_table()
    path = Path(out) / "error_sweep.csv"
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        np.savetxt(path, table, delimiter=",", fmt="%.17g",
                   header="phi,r_lee2010,r_lee2012,r_log", comments="")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return sweep_criteria(table)


# --- attitude-only property checks -----------------------------------------

def escape_time(trace, angle=ESCAPE_ANGLE):
    """First time the error angle is below ``angle``, inf if never."""
    below = np.flatnonzero(np.linalg.norm(trace.r, axis=1) < angle)
    return float(trace.t[below[0]]) if below.size else float("inf")


def decay_ratio(trace, rate, after=DECAY_AFTER):
    """Largest ``|r(t)| / (|r(0)| exp(-rate t))`` for ``t > after``."""
    norm = np.linalg.norm(trace.r, axis=1)
    m = trace.t > after
    return float(np.max(norm[m] / (norm[0] * np.exp(-rate * trace.t[m]))))


def rate_mode_checks(K_r=None, axes=AXIS_COUNT, seed=0):
    """Half-turn starts in rate mode: escape time and exponential decay."""
    K_r = 5.0 * np.eye(3) if K_r is None else K_r
    rate = DECAY_MARGIN * np.min(np.linalg.eigvalsh(K_r))
    worst_escape, worst_ratio = 0.0, 0.0
    for u in al.random_axes(axes, seed):
        trace = al.regulate_rate(al.half_turn_start(u), np.eye(3), K_r)
        worst_escape = max(worst_escape, escape_time(trace))
        worst_ratio = max(worst_ratio, decay_ratio(trace, rate))
    return [
        _check("rate mode leaves the half-turn set within 0.1 s", worst_escape <= ESCAPE_TIME,
               f"worst escape = {worst_escape:.3f} s over {axes} axes"),
        _check("rate mode decays at 0.9 lambda_min(K_r)", worst_ratio <= 1.0,
               f"worst |r(t)| / bound = {worst_ratio:.4f}"),
    ]


def torque_escape_checks(J=None, axes=AXIS_COUNT, seed=0):
    """Half-turn starts in torque mode with ``K_w = J``."""
    J = VehicleParams().inertia if J is None else J
    gains = AttitudeGains(AttitudeGains().K_r, J)
    worst = 0.0
    for u in al.random_axes(axes, seed):
        trace = al.regulate_torque(al.half_turn_start(u), np.zeros(3), np.eye(3), gains, J,
                                   duration=ESCAPE_TIME)
        worst = max(worst, escape_time(trace))
    return [_check("torque mode (K_w = J) leaves the half-turn set within 0.1 s",
                   worst <= ESCAPE_TIME, f"worst escape = {worst:.3f} s over {axes} axes")]


def dissipation_checks(config=None, R0=None, w0=(1.0, -2.0, 3.0), duration=5.0):
    """Torque-mode regulation: V never increases and follows ``-w^T K_w w``."""
    config = RunConfig() if config is None else config
    gains, J = config.attitude_gains, config.vehicle.inertia
    R0 = exp_map([2.5, -1.0, 0.7]) if R0 is None else R0
    trace = al.regulate_torque(R0, np.asarray(w0, dtype=float), np.eye(3), gains, J,
                               dt=config.dt, duration=duration)
    rise = float(np.max(np.diff(trace.V) / np.maximum(1.0, trace.V[:-1])))
    residual, V = al.dissipation_error(trace, gains.K_w)
    rel = float(np.max(np.abs(residual) / np.maximum(1.0, V)))
    return trace, [
        _check("V non-increasing", rise <= 0.0, f"largest relative step increase = {rise:.2e}"),
        _check("dV/dt = -w_err^T K_w w_err", rel < DISSIPATION_TOL,
               f"max relative residual = {rel:.2e}"),
    ]


def rate_mode_recovery(config, out):
    telemetry, metrics = _run_safely(config)
    _save(out, "rate_mode_recovery", telemetry, metrics)
    return rate_mode_checks(config.gains.K_r, seed=int(config.seed)) + torque_escape_checks(
        config.vehicle.inertia, seed=int(config.seed))


def attitude_regulation(config, out):
    trace, results = dissipation_checks(config)
    path = Path(out) / "attitude_regulation.csv"
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        np.savetxt(path, np.column_stack([trace.t, trace.r, trace.w_err, trace.V]),
                   delimiter=",", fmt="%.17g",
                   header="t,r_x,r_y,r_z,wt_x,wt_y,wt_z,V", comments="")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return results


RUNNERS = {
    "fast_circles": fast_circles,
    "flipping_loops": flipping_loops,
    "upside_down": upside_down,
    "error_sweep": error_sweep,
    "rate_mode_recovery": rate_mode_recovery,
    "attitude_regulation": attitude_regulation,
}


def run_experiment(name, out, config_path=None, seed=None):
    """Run ``name``, write artifacts and ``criteria.txt`` under ``out``.

    Returns the list of :class:`Criterion`.

    Raises:
        UnknownExperiment, ConfigInvalid, IoFailure.
    """
    if name not in RUNNERS:
        raise UnknownExperiment(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")
    config = make_config(name, config_path, seed)
    results = RUNNERS[name](config, out)
    path = Path(out) / "criteria.txt"
    try:
        path.write_text("".join(c.line() + "\n" for c in results))
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return results
