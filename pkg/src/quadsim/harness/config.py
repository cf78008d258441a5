"""Run configuration and the flat ``key = value`` config file format.

Lines are ``key = value``; ``#`` starts a comment. Vector values are comma
separated. Unknown keys are rejected. Every key has a default, and each
experiment preset overrides a subset of them before the file is applied.
"""
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from quadsim import trajectory as trajectories
from quadsim.controller import AttitudeGains
from quadsim.lqr import INTEGRAL_LIMIT, DEFAULT_FORCE_WEIGHTS, DEFAULT_STATE_WEIGHTS
from quadsim.rigid_body import QuadState, VehicleParams
from quadsim.so3 import exp_map

MODES = ("torque", "rate", "lee2010")


class ConfigInvalid(ValueError):
    """Config file or values are malformed."""


@dataclass
class RunConfig:
    experiment: str = "hover"
    mode: str = "torque"
    trajectory: trajectories.TrajectorySpec = field(default_factory=trajectories.hover)
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    state_weights: tuple = DEFAULT_STATE_WEIGHTS
    force_weights: tuple = DEFAULT_FORCE_WEIGHTS
    integral_limit: float = INTEGRAL_LIMIT
    freeze_integral_on_saturation: bool = True
    gains: AttitudeGains = field(default_factory=AttitudeGains)
    baseline_gains: AttitudeGains = field(default_factory=AttitudeGains)
    # Replace K_w by the inertia (global attractiveness at a half-turn error).
    global_attractive: bool = False
    dt: float = 1e-3
    duration: float = 10.0
    noise_std: float = 0.0
    seed: int = 0
    initial_state: QuadState = field(default_factory=QuadState)

    def validate(self):
        if self.mode not in MODES:
            raise ConfigInvalid(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.dt > 0.0:
            raise ConfigInvalid("dt must be > 0")
        if not self.duration > 0.0:
            raise ConfigInvalid("duration must be > 0")
        if not self.noise_std >= 0.0:
            raise ConfigInvalid("noise_std must be >= 0")
        if self.integral_limit <= 0.0:
            raise ConfigInvalid("integral_limit must be > 0")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigInvalid("seed must fit in an unsigned 64-bit integer")
        return self

    @property
    def steps(self):
        return int(round(self.duration / self.dt))

    @property
    def attitude_gains(self):
        if self.global_attractive:
            return AttitudeGains(self.gains.K_r, self.vehicle.inertia)
        return self.gains


# key -> (number of floats or a type, description)
KEYS = {
    "experiment": (str, "label written to the metrics file"),
    "mode": (str, "torque | rate | lee2010"),
    "trajectory": (str, "hover | circle | flipping_loop"),
    "traj_center": (3, "NED center of the reference (m)"),
    "traj_diameter": (1, "circle diameter (m)"),
    "traj_period": (1, "period (s)"),
    "traj_y_amplitude": (1, "loop y amplitude (m)"),
    "traj_z_amplitude": (1, "loop z amplitude (m)"),
    "traj_heading": (1, "fixed heading (rad)"),
    "traj_heading_mode": (str, "fixed | velocity"),
    "mass": (1, "kg"),
    "gravity": (1, "m/s^2"),
    "inertia": (3, "diagonal of J (kg m^2)"),
    "arm_length": (1, "m"),
    "max_thrust": (1, "per rotor (N)"),
    "max_torque": (1, "per rotor (N m)"),
    "layout": (str, "rotor layout: x | plus"),
    "thrust_estimate_scale": (1, "controller-side max_thrust multiplier"),
    "state_weights": (9, "diagonal of W_e, ordered (e_p, e_v, e_i)"),
    "force_weights": (3, "diagonal of W_f"),
    "integral_limit": (1, "per-axis clamp on the position integral (m s)"),
    "freeze_integral_on_saturation": (bool, "skip integration while throttles are clipped"),
    "K_r": (3, "diagonal of the rotation gain"),
    "K_w": (3, "diagonal of the rate gain"),
    "lee_K_r": (3, "diagonal of the baseline rotation gain"),
    "lee_K_w": (3, "diagonal of the baseline rate gain"),
    "global_attractive": (bool, "use K_w = J"),
    "dt": (1, "control and plant step (s)"),
    "duration": (1, "s"),
    "noise_std": (1, "throttle noise standard deviation"),
    "seed": (int, "RNG seed"),
    "init_position": (3, "m"),
    "init_velocity": (3, "m/s"),
    "init_rotation": (3, "rotation vector of R_b (rad)"),
    "init_rate": (3, "body rate (rad/s)"),
}


def parse_config_text(text):
    """Parse ``key = value`` lines into a dict of typed values."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigInvalid(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigInvalid(f"line {lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigInvalid(f"line {lineno}: duplicate key {key!r}")
        kind = KEYS[key][0]
        try:
            if kind is str:
                out[key] = value
            elif kind is bool:
                if value.lower() not in ("true", "false", "1", "0"):
                    raise ValueError(value)
                out[key] = value.lower() in ("true", "1")
            elif kind is int:
                out[key] = int(value)
            else:
                nums = [float(v) for v in value.split(",")]
                if len(nums) != kind:
                    raise ValueError(f"expected {kind} numbers, got {len(nums)}")
                if not all(np.isfinite(nums)):
                    raise ValueError("non-finite value")
                out[key] = nums[0] if kind == 1 else tuple(nums)
        except ValueError as exc:
            raise ConfigInvalid(f"line {lineno}: bad value for {key!r}: {exc}") from None
    return out


def apply_overrides(config, values):
    """Return a copy of ``config`` with parsed file values applied."""
    try:
        traj = config.trajectory
        traj_fields = {
            "trajectory": "kind", "traj_center": "center", "traj_diameter": "diameter",
            "traj_period": "period", "traj_y_amplitude": "y_amplitude",
            "traj_z_amplitude": "z_amplitude", "traj_heading": "heading",
            "traj_heading_mode": "heading_mode",
        }
        traj_kw = {traj_fields[k]: v for k, v in values.items() if k in traj_fields}
        if traj_kw:
            traj = replace(traj, **traj_kw)

        veh = config.vehicle
        veh_kw = {k: values[k] for k in ("mass", "gravity", "arm_length", "max_thrust",
                                         "max_torque", "thrust_estimate_scale", "layout")
                  if k in values}
        if "inertia" in values:
            veh_kw["inertia"] = np.diag(values["inertia"])
        if veh_kw:
            veh = replace(veh, **veh_kw)

        gains = config.gains
        if "K_r" in values or "K_w" in values:
            gains = AttitudeGains(np.diag(values["K_r"]) if "K_r" in values else gains.K_r,
                                  np.diag(values["K_w"]) if "K_w" in values else gains.K_w)
        base = config.baseline_gains
        if "lee_K_r" in values or "lee_K_w" in values:
            base = AttitudeGains(np.diag(values["lee_K_r"]) if "lee_K_r" in values else base.K_r,
                                 np.diag(values["lee_K_w"]) if "lee_K_w" in values else base.K_w)

        x0 = config.initial_state.copy()
        if "init_position" in values:
            x0.p = np.array(values["init_position"])
        if "init_velocity" in values:
            x0.v = np.array(values["init_velocity"])
        if "init_rotation" in values:
            x0.R = exp_map(np.array(values["init_rotation"]))
        if "init_rate" in values:
            x0.w = np.array(values["init_rate"])

        simple = {k: values[k] for k in ("experiment", "mode", "state_weights", "force_weights",
                                         "integral_limit", "freeze_integral_on_saturation", "global_attractive", "dt",
                                         "duration", "noise_std", "seed") if k in values}
        out = replace(config, trajectory=traj, vehicle=veh, gains=gains,
                      baseline_gains=base, initial_state=x0, **simple)
    except ValueError as exc:
        raise ConfigInvalid(str(exc)) from None
    return out.validate()


def load_config(path, base=None):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config {path}: {exc}") from None
    return apply_overrides(base if base is not None else RunConfig(), parse_config_text(text))


def describe_keys():
    return "\n".join(f"{k:22s} {desc}" for k, (_, desc) in KEYS.items())
