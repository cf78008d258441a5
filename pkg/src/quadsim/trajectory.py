"""Analytic reference trajectories with derivatives through jerk.

Altitudes are given as positive-up numbers but stored as negative z in
the NED frame.
"""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

HEADING_MIN_SPEED = 1e-3

KINDS = ("hover", "circle", "flipping_loop")


class DegenerateHeading(ValueError):
    """Horizontal speed too small to define a travel direction."""


class TrajectoryPoint(NamedTuple):
    p: np.ndarray
    v: np.ndarray
    a: np.ndarray
    j: np.ndarray
    psi: float
    psi_dot: float


@dataclass(frozen=True)
class TrajectorySpec:
    """Parameters of a sinusoidal or constant reference.

    ``center`` is the NED point the motion is built around. For ``circle``
    the path lies in the horizontal plane through ``center``; for
    ``flipping_loop`` it lies in the vertical y-z plane with ``center`` at the
    middle of the loop. ``heading_mode`` is ``"fixed"`` (use ``heading``) or
    ``"velocity"`` (body i-axis along the horizontal travel direction).
    """
    kind: str = "hover"
    center: tuple = (0.0, 0.0, 0.0)
    diameter: float = 10.0
    period: float = 2.5
    y_amplitude: float = 1.0
    z_amplitude: float = 1.5
    heading: float = 0.0
    heading_mode: str = "fixed"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown trajectory kind {self.kind!r}")
        if self.kind != "hover" and self.period <= 0.0:
            raise ValueError("period must be positive")
        if self.heading_mode not in ("fixed", "velocity"):
            raise ValueError(f"unknown heading mode {self.heading_mode!r}")


def fast_circle(diameter=10.0, period=2.5, altitude=5.0):
    return TrajectorySpec("circle", center=(0.0, 0.0, -altitude), diameter=diameter,
                          period=period, heading_mode="velocity")


def flipping_loop(y_amplitude=1.0, z_amplitude=1.5, altitude=1.5, period=1.4):
    return TrajectorySpec("flipping_loop", center=(0.0, 0.0, -altitude), period=period,
                          y_amplitude=y_amplitude, z_amplitude=z_amplitude, heading=0.0)


def hover(position=(0.0, 0.0, 0.0), heading=0.0):
    return TrajectorySpec("hover", center=tuple(position), heading=heading)


def heading_from_velocity(v, a):
    """Heading along the horizontal velocity and its rate.

    Returns ``(psi, psi_dot)`` with ``psi = atan2(vy, vx)``.

    Raises:
        DegenerateHeading: if horizontal speed is at most ``HEADING_MIN_SPEED``.
    """
    speed2 = v[0] * v[0] + v[1] * v[1]
    if speed2 <= HEADING_MIN_SPEED ** 2:
        raise DegenerateHeading(f"horizontal speed {np.sqrt(speed2):.3g} m/s too small")
    psi = np.arctan2(v[1], v[0])
    psi_dot = (v[0] * a[1] - v[1] * a[0]) / speed2
    return float(psi), float(psi_dot)


def _harmonic(omega, t):
    """cos/sin and their first three derivatives at ``omega t``."""
    c, s = np.cos(omega * t), np.sin(omega * t)
    w2 = omega * omega
    cos_d = (c, -omega * s, -w2 * c, w2 * omega * s)
    sin_d = (s, omega * c, -w2 * s, -w2 * omega * c)
    return cos_d, sin_d


def sample(spec, t):
    """Evaluate the reference at time ``t``."""
    center = np.asarray(spec.center, dtype=float)
    if spec.kind == "hover":
        z = np.zeros(3)
        return TrajectoryPoint(center.copy(), z, z.copy(), z.copy(), float(spec.heading), 0.0)

    omega = 2.0 * np.pi / spec.period
    cos_d, sin_d = _harmonic(omega, t)
    derivs = []
    if spec.kind == "circle":
        r = 0.5 * spec.diameter
        for k in range(4):
            derivs.append(np.array([r * cos_d[k], r * sin_d[k], 0.0]))
    else:
        # Up is -z: the loop starts at the side and climbs first.
        for k in range(4):
            derivs.append(np.array([0.0, spec.y_amplitude * cos_d[k],
                                    -spec.z_amplitude * sin_d[k]]))
    derivs[0] = derivs[0] + center

    if spec.heading_mode == "velocity":
        psi, psi_dot = heading_from_velocity(derivs[1], derivs[2])
    else:
        psi, psi_dot = float(spec.heading), 0.0
    return TrajectoryPoint(*derivs, psi, psi_dot)
