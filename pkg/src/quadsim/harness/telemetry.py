"""Telemetry log, derived run metrics, and their file formats."""
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

COLUMNS = (
    "t",
    "p_x", "p_y", "p_z",
    "v_x", "v_y", "v_z",
    "q_w", "q_x", "q_y", "q_z",
    "roll", "pitch", "yaw",
    "w_x", "w_y", "w_z",
    "r_x", "r_y", "r_z",
    "wt_x", "wt_y", "wt_z",
    "f_x", "f_y", "f_z",
    "T",
    "tau_x", "tau_y", "tau_z",
    "delta_1", "delta_2", "delta_3", "delta_4",
    "V",
)
COL = {name: i for i, name in enumerate(COLUMNS)}

RECOVERY_POSITION = 0.5
RECOVERY_VELOCITY = 0.5
RECOVERY_HOLD = 1.0
ALTITUDE_BAND = 0.25


class IoFailure(OSError):
    """Telemetry or metrics could not be written."""


def quaternion_from_matrix(R):
    """Unit quaternion ``(w, x, y, z)`` with ``w >= 0`` (Shepperd's method)."""
    tr = R[0, 0] + R[1, 1] + R[2, 2]
    diag = (tr, R[0, 0], R[1, 1], R[2, 2])
    i = int(np.argmax(diag))
    if i == 0:
        s = 2.0 * np.sqrt(1.0 + tr)
        q = np.array([0.25 * s, (R[2, 1] - R[1, 2]) / s,
                      (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s])
    elif i == 1:
        s = 2.0 * np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2])
        q = np.array([(R[2, 1] - R[1, 2]) / s, 0.25 * s,
                      (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s])
    elif i == 2:
        s = 2.0 * np.sqrt(1.0 - R[0, 0] + R[1, 1] - R[2, 2])
        q = np.array([(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s,
                      0.25 * s, (R[1, 2] + R[2, 1]) / s])
    else:
        s = 2.0 * np.sqrt(1.0 - R[0, 0] - R[1, 1] + R[2, 2])
        q = np.array([(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s,
                      (R[1, 2] + R[2, 1]) / s, 0.25 * s])
    q /= np.linalg.norm(q)
    return q if q[0] >= 0.0 else -q


def euler_zyx(R):
    """Roll, pitch, yaw (rad) of a body-to-inertial rotation, wrapped."""
    roll = np.arctan2(R[2, 1], R[2, 2])
    pitch = -np.arcsin(np.clip(R[2, 0], -1.0, 1.0))
    yaw = np.arctan2(R[1, 0], R[0, 0])
    return roll, pitch, yaw


class TelemetryLog:
    """Row-per-control-step table backed by a preallocated array."""

    def __init__(self, capacity):
        self.data = np.zeros((capacity, len(COLUMNS)))
        self.rotations = np.zeros((capacity, 3, 3))
        self.rows = 0

    def append(self, t, x, r, w_err, f, thrust, tau, delta, V):
        row = self.data[self.rows]
        row[0] = t
        row[1:4] = x.p
        row[4:7] = x.v
        row[7:11] = quaternion_from_matrix(x.R)
        row[11:14] = euler_zyx(x.R)
        row[14:17] = x.w
        row[17:20] = r
        row[20:23] = w_err
        row[23:26] = f
        row[26] = thrust
        row[27:30] = tau
        row[30:34] = delta
        row[34] = V
        self.rotations[self.rows] = x.R
        self.rows += 1

    def finish(self):
        self.data = self.data[:self.rows]
        self.rotations = self.rotations[:self.rows]
        # Unwrap attitude angles so flips accumulate past +-pi.
        for name in ("roll", "pitch", "yaw"):
            c = COL[name]
            self.data[:, c] = np.unwrap(self.data[:, c])
        return self

    def __len__(self):
        return self.rows

    def column(self, name):
        return self.data[:self.rows, COL[name]]

    def columns(self, *names):
        return self.data[:self.rows, [COL[n] for n in names]]


@dataclass
class RunMetrics:
    experiment: str
    mode: str
    seed: int
    duration: float
    convergence_time: float
    steady_rms_position_error: float
    steady_mean_abs_roll: float
    steady_max_abs_roll: float
    max_abs_unwrapped_roll: float
    max_altitude_drop: float
    steady_radius_error: float
    recovered: bool
    recovery_time: float
    final_lyapunov: float
    blew_up_at: float


def _settle_time(ok, t):
    """First time from which ``ok`` holds through the end, NaN if never."""
    if not ok[-1]:
        return float("nan")
    bad = np.flatnonzero(~ok)
    return float(t[0] if bad.size == 0 else t[bad[-1] + 1])


def compute_metrics(log, ref_p, ref_v, config, blew_up_at=float("nan")):
    """Summarize a run.

    ``ref_p`` and ``ref_v`` hold the desired position and velocity, one row
    per log row. The steady-state window is the last half of the logged time.
    """
    t = log.column("t")
    p = log.columns("p_x", "p_y", "p_z")
    v = log.columns("v_x", "v_y", "v_z")
    e_p = p - ref_p
    roll = log.column("roll")
    # Wrapped roll magnitude for the steady-state statistics.
    roll_wrapped = np.abs(np.arctan2(np.sin(roll), np.cos(roll)))
    steady = t >= t[0] + 0.5 * (t[-1] - t[0])

    in_band = np.abs(e_p[:, 2]) <= ALTITUDE_BAND
    convergence = _settle_time(in_band, t)

    near = ((np.linalg.norm(e_p, axis=1) < RECOVERY_POSITION)
            & (np.linalg.norm(v - ref_v, axis=1) < RECOVERY_VELOCITY))
    recovery_time = _settle_time(near, t) if np.isnan(blew_up_at) else float("nan")
    recovered = bool(np.isfinite(recovery_time) and t[-1] - recovery_time >= RECOVERY_HOLD)

    spec = config.trajectory
    if spec.kind == "circle":
        radius = np.linalg.norm(p[steady, :2] - np.asarray(spec.center)[:2], axis=1)
        radius_error = float(np.mean(np.abs(radius - 0.5 * spec.diameter)))
    else:
        radius_error = float("nan")

    return RunMetrics(
        experiment=config.experiment,
        mode=config.mode,
        seed=int(config.seed),
        duration=float(t[-1] - t[0]),
        convergence_time=convergence,
        steady_rms_position_error=float(np.sqrt(np.mean(np.sum(e_p[steady] ** 2, axis=1)))),
        steady_mean_abs_roll=float(np.mean(roll_wrapped[steady])),
        steady_max_abs_roll=float(np.max(roll_wrapped[steady])),
        max_abs_unwrapped_roll=float(np.max(np.abs(roll))),
        max_altitude_drop=float(np.max(p[:, 2]) - p[0, 2]),
        steady_radius_error=radius_error,
        recovered=recovered,
        recovery_time=recovery_time,
        final_lyapunov=float(log.column("V")[-1]),
        blew_up_at=float(blew_up_at),
    )


def write_csv(log, path):
    """Write the log with a header row and 17 significant digits."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        np.savetxt(path, log.data[:log.rows], delimiter=",", fmt="%.17g",
                   header=",".join(COLUMNS), comments="")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return path


def read_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    return header, np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_metrics(metrics, path):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("".join(f"{k}={format_value(v)}\n" for k, v in asdict(metrics).items()))
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return path
