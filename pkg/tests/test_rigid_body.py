import numpy as np
import pytest

from quadsim import rigid_body as rb
from quadsim.rigid_body import (DegenerateGeometry, NonFiniteState, QuadState, VehicleParams,
                                WrenchCommand)
from quadsim.so3 import exp_map, is_rotation

P = VehicleParams()


def hover_throttles(params=P):
    return rb.unmix(WrenchCommand(params.mass * params.gravity, np.zeros(3)), params.mixer_inv)


def test_mixer_zero_throttle():
    T, tau = rb.mix(np.zeros(4), P.mixer)
    assert T == 0.0 and np.array_equal(tau, np.zeros(3))


def test_mixer_full_throttle():
    T, tau = rb.mix(np.ones(4), P.mixer)
    assert np.isclose(T, 39.24, atol=1e-12)
    assert np.allclose(tau, 0.0, atol=1e-12)


@pytest.mark.parametrize("layout", rb.LAYOUTS)
def test_mixer_roundtrip(layout):
    params = VehicleParams(layout=layout)
    rng = np.random.default_rng(0)
    for delta in rng.uniform(0.01, 0.99, size=(200, 4)):
        assert np.allclose(rb.unmix(rb.mix(delta, params.mixer), params.mixer_inv), delta,
                           atol=1e-12)
        assert np.allclose(rb.unmix_and_saturate(rb.mix(delta, params.mixer), params.mixer),
                           delta, atol=1e-12)


def test_mixer_x_layout_columns():
    d = 0.25 / np.sqrt(2.0) * 9.81
    M = P.mixer
    assert np.allclose(np.abs(M[1:3]), d)
    assert np.allclose(np.abs(M[3]), 5.0)
    assert np.allclose(M[0], 9.81)
    # Each torque row is balanced so full throttle gives zero torque.
    assert np.allclose(M[1:].sum(axis=1), 0.0)


def test_mixer_plus_layout_columns():
    M = VehicleParams(layout="plus").mixer
    l = 0.25 * 9.81
    assert np.allclose(M[1], [0, 0, -l, l])
    assert np.allclose(M[2], [l, -l, 0, 0])


def test_mixer_torque_signs():
    # The front-left rotor (x > 0, y < 0) pushes along -z: roll and pitch up.
    M = P.mixer
    T, tau = rb.mix([0.0, 0.0, 1.0, 0.0], M)
    assert tau[0] > 0 and tau[1] > 0


@pytest.mark.parametrize("arm, thrust, torque", [(0, 1, 1), (1, -1, 1), (1, 1, 0)])
def test_mixer_degenerate(arm, thrust, torque):
    with pytest.raises(DegenerateGeometry):
        rb.build_mixing_matrix(arm, thrust, torque)


def test_unknown_layout():
    with pytest.raises(ValueError):
        rb.build_mixing_matrix(1.0, 1.0, 1.0, layout="hex")


def test_controller_mixer_scaled():
    params = VehicleParams(thrust_estimate_scale=1.1)
    assert np.allclose(params.controller_mixer[0], 1.1 * params.mixer[0])
    assert np.allclose(params.controller_mixer[3], params.mixer[3])


def test_unmix_and_saturate_examples():
    M = P.mixer
    assert np.allclose(rb.unmix_and_saturate(rb.mix(0.5 * np.ones(4), M), M), 0.5)
    assert np.array_equal(rb.unmix_and_saturate(WrenchCommand(1e6, np.zeros(3)), M), np.ones(4))
    assert np.array_equal(rb.unmix_and_saturate(WrenchCommand(-10.0, np.zeros(3)), M),
                          np.zeros(4))


def test_params_validation():
    with pytest.raises(ValueError):
        VehicleParams(mass=0.0)
    with pytest.raises(ValueError):
        VehicleParams(inertia=np.diag([1.0, -1.0, 1.0]))
    with pytest.raises(ValueError):
        VehicleParams(inertia=np.array([[1.0, 0.1, 0], [0, 1, 0], [0, 0, 1]]))


def test_derivative_hover_equilibrium():
    d = rb.state_derivative(QuadState(), WrenchCommand(9.81, np.zeros(3)), P)
    assert np.allclose(d.v_dot, 0.0) and np.allclose(d.w_dot, 0.0)


def test_derivative_free_fall():
    d = rb.state_derivative(QuadState(), WrenchCommand(0.0, np.zeros(3)), P)
    assert np.allclose(d.v_dot, [0, 0, 9.81])


def test_derivative_torque():
    d = rb.state_derivative(QuadState(), WrenchCommand(0.0, np.array([0.07, 0, 0])), P)
    assert np.allclose(d.w_dot, [1.0, 0.0, 0.0], atol=1e-15)


def test_derivative_thrust_along_minus_body_z():
    R = exp_map([0.0, 0.3, 0.0])
    d = rb.state_derivative(QuadState(R=R), WrenchCommand(5.0, np.zeros(3)), P)
    assert np.allclose(d.v_dot, [0, 0, 9.81] - 5.0 * R[:, 2])


def test_step_hover_unchanged():
    x0 = QuadState(p=np.array([1.0, 2.0, -3.0]))
    x1 = rb.step(x0, hover_throttles(), 1e-3, P)
    assert np.allclose(x1.p, x0.p, atol=1e-9) and np.allclose(x1.v, 0.0, atol=1e-9)
    assert np.allclose(x1.R, np.eye(3), atol=1e-9) and np.allclose(x1.w, 0.0, atol=1e-9)


def test_free_fall_one_second():
    x = QuadState()
    for _ in range(1000):
        x = rb.step(x, np.zeros(4), 1e-3, P)
    assert abs(x.p[2] - 4.905) < 1e-6
    assert abs(x.v[2] - 9.81) < 1e-9


def test_torque_free_momentum_and_energy():
    J = P.inertia
    x = QuadState(R=exp_map([0.2, -0.4, 1.0]), w=np.array([2.0, -1.0, 3.0]))
    L0, E0 = x.R @ J @ x.w, 0.5 * x.w @ J @ x.w
    zero = WrenchCommand(0.0, np.zeros(3))
    for _ in range(10_000):
        x = rb.rk4_step(x, zero, 1e-3, P)
    assert np.linalg.norm(x.R @ J @ x.w - L0) < 1e-6
    assert abs(0.5 * x.w @ J @ x.w - E0) < 1e-6
    assert is_rotation(x.R)


def test_rk4_matches_fine_reference():
    # Halving dt shrinks the error about 16 times (fourth order).
    x0 = QuadState(v=np.array([1.0, 0, 0]), R=exp_map([0.1, 0.2, 0.3]),
                   w=np.array([3.0, -2.0, 1.0]))
    wrench = WrenchCommand(12.0, np.array([0.05, -0.02, 0.01]))

    def integrate(dt, T=0.2):
        x = x0
        for _ in range(int(round(T / dt))):
            x = rb.rk4_step(x, wrench, dt, P)
        return x

    ref = integrate(1e-4)
    e1 = np.linalg.norm(integrate(2e-2).R - ref.R)
    e2 = np.linalg.norm(integrate(1e-2).R - ref.R)
    assert 12.0 < e1 / e2 < 20.0


@pytest.mark.slow
def test_orthonormality_after_million_steps():
    x = QuadState(w=np.array([5.0, -3.0, 7.0]))
    zero = WrenchCommand(0.0, np.zeros(3))
    for _ in range(1_000_000):
        x = rb.rk4_step(x, zero, 1e-3, P)
    assert np.linalg.norm(x.R.T @ x.R - np.eye(3)) < 1e-6


def test_step_noise_deterministic_and_clamped():
    x = QuadState()
    a = rb.step(x, hover_throttles(), 1e-3, P, np.random.default_rng(5), 0.04)
    b = rb.step(x, hover_throttles(), 1e-3, P, np.random.default_rng(5), 0.04)
    assert np.array_equal(a.v, b.v) and np.array_equal(a.w, b.w)
    noisy = rb.apply_throttle_noise(np.array([0.0, 1.0, 0.5, 0.5]), 10.0,
                                    np.random.default_rng(0))
    assert np.all((noisy >= 0.0) & (noisy <= 1.0))


def test_step_requires_rng_for_noise():
    with pytest.raises(ValueError):
        rb.step(QuadState(), np.zeros(4), 1e-3, P, None, 0.1)
    with pytest.raises(ValueError):
        rb.step(QuadState(), np.zeros(4), 0.0, P)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_step_non_finite():
    x = QuadState(w=np.array([np.inf, 0.0, 0.0]))
    with pytest.raises(NonFiniteState):
        rb.step(x, np.zeros(4), 1e-3, P)


def test_kinematic_rate_step():
    w = np.array([0.0, 0.0, 2.0])
    x = rb.kinematic_rate_step(QuadState(), 9.81, w, 1e-3, P)
    assert np.allclose(x.R, exp_map(2e-3 * np.array([0, 0, 1.0])), atol=1e-15)
    assert np.array_equal(x.w, w)
    assert np.allclose(x.v, 0.0, atol=1e-12)
    # Free fall is integrated exactly.
    x = QuadState()
    for _ in range(1000):
        x = rb.kinematic_rate_step(x, 0.0, np.zeros(3), 1e-3, P)
    assert abs(x.p[2] - 4.905) < 1e-9
