"""Headless acceptance criteria, one PASS/FAIL line each.

Run with pytest (lines appear in the terminal summary) or directly with
``python tests/test_acceptance.py``.
"""
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
from scipy.integrate import quad_vec

from quadsim import lqr
from quadsim import rigid_body as rb
from quadsim.harness import experiments as ex
from quadsim.harness import telemetry as tm
from quadsim.harness.sim import run
from quadsim.rigid_body import QuadState, VehicleParams, WrenchCommand
from quadsim.so3 import exp_map, hat, left_jacobian, left_jacobian_inv, log_map

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # imported outside pytest
    ACCEPTANCE_LINES = []


def report(number, passed, detail):
    line = f"{'PASS' if passed else 'FAIL'} C{number}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert passed, line


def random_unit(rng, n):
    u = rng.normal(size=(n, 3))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def test_c1_lie_group_suite():
    start = time.perf_counter()
    rng = np.random.default_rng(1)

    angles = rng.uniform(0.0, np.pi - 1e-6, 100_000)
    vs = random_unit(rng, 100_000) * angles[:, None]
    roundtrip = max(np.linalg.norm(log_map(exp_map(v)) - v) for v in vs)

    conj = 0.0
    for v in vs[:2000]:
        R = exp_map(rng.normal(size=3))
        conj = max(conj, np.linalg.norm(R @ exp_map(v) @ R.T - exp_map(R @ v)))

    quad = 0.0
    for v in list(vs[:200]) + [np.array([1e-6, 0, 0]), np.array([0, 0, np.pi])]:
        ref, _ = quad_vec(lambda s: exp_map(s * v), 0.0, 1.0, epsabs=1e-13, epsrel=1e-13)
        quad = max(quad, np.max(np.abs(left_jacobian(v) - ref)))

    phis = np.concatenate([np.geomspace(1e-4, np.pi, 2000),
                           np.pi - np.geomspace(1e-12, 1e-2, 200), [np.pi]])
    inv = 0.0
    for phi, u in zip(phis, random_unit(rng, len(phis))):
        v = phi * u
        inv = max(inv, np.max(np.abs(left_jacobian(v) @ left_jacobian_inv(v) - np.eye(3))))

    elapsed = time.perf_counter() - start
    ok = roundtrip < 1e-9 and conj < 1e-12 and quad < 1e-6 and inv < 1e-9 and elapsed < 10.0
    report(1, ok, f"roundtrip {roundtrip:.1e}, conjugation {conj:.1e}, quadrature {quad:.1e}, "
                  f"J_l J_l^-1 {inv:.1e}, {elapsed:.1f} s")


def test_c2_error_function_sweep():
    results = ex.sweep_criteria(ex.error_sweep_table())
    table = ex.error_sweep_table()
    zero_at_pi = abs(table[-1, 1]) < 1e-9
    report(2, all(r.passed for r in results) and zero_at_pi,
           "; ".join(r.detail for r in results) + f"; |r_lee2010(pi)| = {table[-1, 1]:.1e}")


def test_c3_care():
    A, B = lqr.augmented_matrices(1.0)
    W_e, W_f = np.diag(lqr.DEFAULT_STATE_WEIGHTS), np.diag(lqr.DEFAULT_FORCE_WEIGHTS)
    g = lqr.position_gain(1.0)
    res = np.linalg.norm(lqr.care_residual(A, B, W_e, W_f, g.P))
    hurwitz = lqr.is_hurwitz(A - B @ g.K)
    s = lqr.solve_care([[0.0]], [[1.0]], [[1.0]], [[1.0]])
    scalar = max(abs(s.P[0, 0] - 1.0), abs(s.K[0, 0] - 1.0))
    d = lqr.solve_care([[0.0, 1.0], [0.0, 0.0]], [[0.0], [1.0]], np.eye(2), [[1.0]])
    r3 = np.sqrt(3.0)
    double = max(np.max(np.abs(d.K - [[1.0, r3]])), np.max(np.abs(d.P - [[r3, 1.0], [1.0, r3]])))
    report(3, res < 1e-8 and hurwitz and scalar < 1e-9 and double < 1e-9,
           f"residual {res:.1e}, Hurwitz {hurwitz}, scalar {scalar:.1e}, "
           f"double integrator {double:.1e}")


def test_c4_error_dynamics_along_flipping_loop():
    config = replace(ex.preset("flipping_loops"), noise_std=0.0)
    tel, _, R_d = ex.run_with_desired_frames(config)
    worst, used = ex.lemma1_residual(tel.column("t"), tel.columns("r_x", "r_y", "r_z"),
                                     tel.rotations, R_d, tel.columns("w_x", "w_y", "w_z"))
    report(4, worst < 1e-3 and used > 0.9 * len(tel),
           f"max residual {worst:.2e} over {used} of {len(tel)} steps")


def test_c5_dissipation():
    _, results = ex.dissipation_checks()
    report(5, all(r.passed for r in results), "; ".join(r.detail for r in results))


def test_c6_fast_circles():
    metrics, times = [], []
    for seed in range(5):
        start = time.perf_counter()
        _, m = run(replace(ex.preset("fast_circles"), seed=seed))
        times.append(time.perf_counter() - start)
        metrics.append(m)
    mean = replace(metrics[0], seed=-1, **{
        k: float(np.mean([getattr(m, k) for m in metrics]))
        for k in ("convergence_time", "steady_mean_abs_roll", "steady_radius_error")})
    results = ex.circle_criteria(mean)
    ok = all(r.passed for r in results) and max(times) < 60.0
    report(6, ok, "; ".join(r.detail for r in results)
           + f"; slowest seed {max(times):.1f} s (5-seed mean)")


def test_c7_flipping_loops():
    _, m = run(ex.preset("flipping_loops"))
    ok = m.steady_rms_position_error < 0.5 and m.max_abs_unwrapped_roll > np.pi
    report(7, ok, f"rms {m.steady_rms_position_error:.3f} m, "
                  f"max |roll| {np.degrees(m.max_abs_unwrapped_roll):.0f} deg")


def test_c8_upside_down(tmp_path):
    results = ex.upside_down(ex.preset("upside_down"), tmp_path)
    report(8, all(r.passed for r in results),
           "; ".join(f"{r.name} [{'ok' if r.passed else 'no'}] {r.detail}" for r in results))


def test_c9_rate_mode_half_turn():
    results = ex.rate_mode_checks(5.0 * np.eye(3), axes=100, seed=0)
    report(9, all(r.passed for r in results), "; ".join(r.detail for r in results))


def test_c10_determinism_and_dynamics(tmp_path):
    config = replace(ex.preset("upside_down"), duration=2.0, seed=42)
    blobs = []
    for d in ("a", "b"):
        log, metrics = run(config)
        blobs.append(tm.write_csv(log, tmp_path / d / "t.csv").read_bytes()
                     + tm.write_metrics(metrics, tmp_path / d / "m.txt").read_bytes())
    identical = blobs[0] == blobs[1]

    P = VehicleParams()
    x = QuadState(R=exp_map([0.2, -0.4, 1.0]), w=np.array([2.0, -1.0, 3.0]))
    L0 = x.R @ P.inertia @ x.w
    zero = WrenchCommand(0.0, np.zeros(3))
    for _ in range(10_000):
        x = rb.rk4_step(x, zero, 1e-3, P)
    drift = np.linalg.norm(x.R @ P.inertia @ x.w - L0)

    x = QuadState()
    for _ in range(1000):
        x = rb.step(x, np.zeros(4), 1e-3, P)
    fall = x.p[2]
    ok = identical and drift < 1e-6 and abs(fall - 4.905) < 1e-6
    report(10, ok, f"byte-identical {identical}, momentum drift {drift:.1e}, "
                   f"free fall {fall:.9f} m")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
