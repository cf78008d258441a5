import numpy as np
import pytest

from quadsim import trajectory as tr
from quadsim.trajectory import DegenerateHeading, TrajectorySpec, sample

SPECS = [tr.hover((1.0, -2.0, -3.0), 0.4), tr.fast_circle(), tr.flipping_loop(),
         TrajectorySpec("circle", center=(1, 2, -3), diameter=4, period=3, heading=0.5)]


def test_hover():
    pt = sample(tr.hover((1.0, 2.0, -3.0), 0.7), 4.2)
    assert np.array_equal(pt.p, [1.0, 2.0, -3.0])
    for d in (pt.v, pt.a, pt.j):
        assert np.array_equal(d, np.zeros(3))
    assert pt.psi == 0.7 and pt.psi_dot == 0.0


def test_circle_periodic():
    spec = tr.fast_circle()
    for t in np.linspace(0.0, 5.0, 11):
        assert np.allclose(sample(spec, t + spec.period).p, sample(spec, t).p, atol=1e-12)


def test_circle_geometry():
    spec = tr.fast_circle()
    speed = np.pi * spec.diameter / spec.period
    centripetal = speed ** 2 / (0.5 * spec.diameter)
    for t in np.linspace(0.0, spec.period, 25):
        pt = sample(spec, t)
        assert np.isclose(np.linalg.norm(pt.v), speed, rtol=1e-12)
        assert np.isclose(np.linalg.norm(pt.a), centripetal, rtol=1e-12)
        assert pt.p[2] == -5.0
        assert np.isclose(np.linalg.norm(pt.p[:2]), 5.0)


def test_flipping_loop_shape():
    spec = tr.flipping_loop()
    for t in np.linspace(0.0, spec.period, 25):
        pt = sample(spec, t)
        assert pt.p[0] == 0.0 and pt.psi == 0.0
        y, z = pt.p[1], pt.p[2] + 1.5
        assert np.isclose((y / 1.0) ** 2 + (z / 1.5) ** 2, 1.0)


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.kind)
def test_derivative_chain(spec):
    h = 1e-5
    period = spec.period if spec.kind != "hover" else 1.0
    for t in np.linspace(0.1, 0.1 + period, 40):
        lo, hi = sample(spec, t - h), sample(spec, t + h)
        pt = sample(spec, t)
        assert np.allclose((hi.p - lo.p) / (2 * h), pt.v, atol=1e-6)
        assert np.allclose((hi.v - lo.v) / (2 * h), pt.a, atol=1e-6)
        assert np.allclose((hi.a - lo.a) / (2 * h), pt.j, atol=1e-5)


def test_heading_from_velocity_examples():
    assert tr.heading_from_velocity(np.array([1.0, 0, 0]), np.zeros(3))[0] == 0.0
    assert np.isclose(tr.heading_from_velocity(np.array([0, 1.0, 0]), np.zeros(3))[0],
                      np.pi / 2)
    with pytest.raises(DegenerateHeading):
        tr.heading_from_velocity(np.array([1e-4, 0, 5.0]), np.zeros(3))


def test_circle_heading_rate():
    spec = tr.fast_circle()
    h = 1e-5
    for t in np.linspace(0.05, 2.5, 30):
        pt = sample(spec, t)
        psi_lo, psi_hi = sample(spec, t - h).psi, sample(spec, t + h).psi
        fd = np.angle(np.exp(1j * (psi_hi - psi_lo))) / (2 * h)
        assert abs(fd - pt.psi_dot) < 1e-6
        # Heading follows the direction of travel.
        assert np.isclose(pt.psi, np.arctan2(pt.v[1], pt.v[0]))


def test_spec_validation():
    with pytest.raises(ValueError):
        TrajectorySpec("square")
    with pytest.raises(ValueError):
        TrajectorySpec("circle", period=0.0)
    with pytest.raises(ValueError):
        TrajectorySpec("circle", heading_mode="sideways")
