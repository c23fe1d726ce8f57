"""Acceptance criteria 1-10, one test each; every test reports a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -s`` or ``python tests/test_acceptance.py``.
"""

import math
import sys
import time
from dataclasses import replace

import numpy as np
from scipy.integrate import quad

from oracles import algebra, angle_diff, commutator, conjugate, expm_series, homog
from se2track.controllers import DEFAULT_GAINS, single_follower_tracking, subsystem_diagnostics, tracking_context
from se2track.dynamics import ControlInput, RobotState, step
from se2track.liegroup import ExpCoords, Pose, Twist, adjoint, adjoint_inv, compose, exp_se2, lie_bracket, log_se2
from se2track.network import Topology, consensus_step_inputs
from se2track.scenario import load_scenario, parse_scenario
from se2track.simulate import run

STATIONARY = """
[scenario]
mode = track
duration = 60
dt = 1e-3
gains = 1, 2, 1, 5

[nodes]
0 = 0, 0, 0, 0, 0
1 = 0, 1, 0, 0, 0

[inputs]
u_theta = 0
u_x = 0
"""


def _pose_gap(a: Pose, b: Pose) -> float:
    return max(angle_diff(a.theta, b.theta), abs(a.x - b.x), abs(a.y - b.y))


def test_criterion_01_exp_log_oracle(report, acceptance_seed):
    rng = np.random.default_rng(acceptance_seed)
    X = np.column_stack([rng.uniform(-3, 3, 1000), rng.uniform(-5, 5, (1000, 2))])
    Y = np.column_stack([rng.uniform(-math.pi + 0.01, math.pi - 0.01, 1000), rng.uniform(-5, 5, (1000, 2))])
    series = [expm_series(algebra(*x)) for x in X]
    t0 = time.perf_counter()
    poses = [exp_se2(ExpCoords(*x)) for x in X]
    logs = [log_se2(exp_se2(ExpCoords(*y))) for y in Y]
    elapsed = time.perf_counter() - t0
    exp_err = max(np.abs(g.matrix() - s).max() for g, s in zip(poses, series))
    log_err = max(np.abs(np.asarray(l) - y).max() for l, y in zip(logs, Y))
    ok = exp_err < 1e-9 and log_err < 1e-9 and elapsed < 1.0
    report(1, ok, f"exp err {exp_err:.2e}, log(exp) err {log_err:.2e}, {elapsed * 1e3:.0f} ms")
    assert ok


def test_criterion_02_adjoint_bracket(report, acceptance_seed):
    rng = np.random.default_rng(acceptance_seed + 2)
    worst_hom = worst_conj = worst_com = worst_ad = 0.0
    for _ in range(1000):
        a = Pose(rng.uniform(-math.pi, math.pi), *rng.uniform(-10, 10, 2))
        b = Pose(rng.uniform(-math.pi, math.pi), *rng.uniform(-10, 10, 2))
        x, y = Twist(*rng.uniform(-3, 3, 3)), Twist(*rng.uniform(-3, 3, 3))
        worst_hom = max(worst_hom, np.abs(np.subtract(adjoint(compose(a, b), x), adjoint(a, adjoint(b, x)))).max())
        worst_conj = max(worst_conj, np.abs(np.subtract(adjoint(a, x), conjugate(homog(*a), x))).max())
        worst_com = max(worst_com, np.abs(np.subtract(lie_bracket(x, y), commutator(x, y))).max())
        lhs = adjoint(a, lie_bracket(x, y))
        rhs = lie_bracket(adjoint(a, x), adjoint(a, y))
        worst_ad = max(worst_ad, np.abs(np.subtract(lhs, rhs)).max())
    worst = max(worst_hom, worst_conj, worst_com, worst_ad)
    ok = worst < 1e-10
    report(2, ok, f"homomorphism {worst_hom:.1e}, conjugation {worst_conj:.1e}, "
                  f"commutator {worst_com:.1e}, bracket transport {worst_ad:.1e}")
    assert ok


def test_criterion_03_decomposition(report, acceptance_seed):
    rng = np.random.default_rng(acceptance_seed + 3)
    worst_pose = worst_twist = 0.0
    for _ in range(1000):
        lead = RobotState.at(rng.uniform(-math.pi, math.pi), *rng.uniform(-50, 50, 2), *rng.uniform(-5, 5, 2))
        fol = RobotState.at(rng.uniform(-math.pi, math.pi), *rng.uniform(-50, 50, 2), *rng.uniform(-5, 5, 2))
        ctx = tracking_context(lead, ControlInput(*rng.uniform(-1, 1, 2), 0.0), fol)
        d = subsystem_diagnostics(ctx)
        g01, xi01 = ctx.relative
        worst_pose = max(worst_pose, _pose_gap(compose(d.g_adj, d.g_e), g01))
        back = adjoint_inv(d.g_e, d.xi_adj)
        worst_twist = max(worst_twist, np.abs(np.asarray(xi01) - np.asarray(d.xi_e) - np.asarray(back)).max())
    ok = worst_pose < 1e-10 and worst_twist < 1e-10
    report(3, ok, f"pose identity {worst_pose:.1e}, twist identity {worst_twist:.1e}")
    assert ok


def test_criterion_04_stabilization(report, acceptance_seed):
    base = parse_scenario(STATIONARY, "stationary")
    assert base.gains == DEFAULT_GAINS
    rng = np.random.default_rng(acceptance_seed + 4)
    finals, vy, failed = [], 0.0, 0
    for _ in range(50):
        x, y = rng.uniform(-100, 100, 2)
        th = math.pi - rng.uniform(0, 2 * math.pi)
        res = run(replace(base, initial=((0.0,) * 5, (th, x, y, 0.0, 0.0))))
        err = res.summary["terminal_err_pose"]
        finals.append(err)
        failed += err >= 1e-2
        vy = max(vy, res.summary["max_abs_vy"])
    ok = failed == 0 and vy < 1e-9
    report(4, ok, f"{50 - failed}/50 starts below 1e-2 at t=60 s (worst {max(finals):.3g}, "
                  f"median {np.median(finals):.3g}), max |vy| {vy:.1e}")
    assert ok


def test_criterion_05_example1(report):
    log = run(load_scenario("example1")).log
    err = log.column("err_pos", 1)
    limit = 0.01 * err[0]
    tail = slice(int(round(0.75 * log.nsteps)), None)
    slope = np.polyfit(log.times[tail], err[tail], 1)[0]
    falling = slope < 0 and err[-1] < err[tail][0]
    ok = err[-1] < limit and falling
    report(5, ok, f"terminal {err[-1]:.3f} m vs {limit:.3f} m (initial {err[0]:.1f} m), "
                  f"final-quarter slope {slope:.3g} m/s, {err[tail][0]:.3f} -> {err[-1]:.3f}")
    assert ok


def _zero_runs(mask: np.ndarray) -> list[int]:
    runs, n = [], 0
    for m in mask:
        if m:
            n += 1
        elif n:
            runs.append(n)
            n = 0
    if n:
        runs.append(n)
    return runs


def test_criterion_06_example2_stops(report):
    res = run(load_scenario("example2"))
    log = res.log
    still = (log.column("omega", 0) == 0.0) & (log.column("vx", 0) == 0.0)
    long_stops = [r * log.dt for r in _zero_runs(still) if r * log.dt >= 2.0]
    final = res.summary["terminal_err_pose"]
    finite = bool(np.all(np.isfinite(log.data)))
    ok = len(long_stops) >= 2 and final < 0.1 and finite
    report(6, ok, f"{len(long_stops)} full stops of {', '.join(f'{s:.2f}' for s in long_stops)} s, "
                  f"terminal err_pose {final:.4f}, finite {finite}")
    assert ok


def test_criterion_07_branches(report):
    plus = run(load_scenario("example3_plus")).log
    minus = run(load_scenario("example3_minus")).log
    up, um = plus.column("u_theta", 1)[0], minus.column("u_theta", 1)[0]
    early = slice(0, int(round(0.1 * plus.nsteps)) + 1)
    corr = np.corrcoef(plus.column("y", 1)[early], minus.column("y", 1)[early])[0, 1]
    ok = up * um < 0 and corr < 0
    report(7, ok, f"u_theta(0) = {up:+.3f} / {um:+.3f}, early y correlation {corr:+.3f}")
    assert ok


def test_criterion_08_consensus(report, acceptance_seed):
    sc = load_scenario("example4")
    ratio = run(sc).summary["terminal_err_ratio"]

    # two-node chain: consensus pipeline against the single-follower run
    chain = replace(sc, initial=sc.initial[:2], topology=Topology.chain(2))
    same_run = np.array_equal(run(chain).log.data, run(replace(chain, mode="track")).log.data)
    rng = np.random.default_rng(acceptance_seed + 8)
    same_law = True
    for _ in range(200):
        s0 = RobotState.at(rng.uniform(-math.pi, math.pi), *rng.uniform(-30, 30, 2), *rng.uniform(-2, 2, 2))
        s1 = RobotState.at(rng.uniform(-math.pi, math.pi), *rng.uniform(-30, 30, 2), *rng.uniform(-2, 2, 2))
        u0 = ControlInput(*rng.uniform(-1, 1, 2), 0.0)
        got = consensus_step_inputs(Topology.chain(2), [s0, s1], lambda t: u0, sc.gains)[1]
        same_law &= got == single_follower_tracking(tracking_context(s0, u0, s1), sc.gains)
    ok = ratio < 0.05 and same_run and same_law
    report(8, ok, f"worst terminal/initial ratio {ratio:.4f}, chain reduction bitwise: run {same_run}, law {same_law}")
    assert ok


def test_criterion_09_formation(report):
    sc = load_scenario("example5")
    res = run(sc)
    per = {i: f["terminal_err"] for i, f in res.summary["followers"].items()}
    worst = max(per.values())
    vy = res.summary["max_target_vy"]
    zero = replace(sc, offsets={i: (0.0, 0.0) for i in sc.offsets})
    same = np.array_equal(run(zero).log.data, run(replace(zero, mode="consensus")).log.data)
    ok = worst < 0.5 and vy < 1e-10 and same
    detail = ", ".join(f"node {i} {e:.3f} m" for i, e in per.items())
    report(9, ok, f"offset errors at T: {detail}; transformed vy {vy:.1e}; zero-offset bitwise {same}")
    assert ok


def _closed_form_from_rest(a: float, b: float, t: float) -> tuple[float, float, float]:
    phi = 0.5 * a * t * t
    return phi, (b / a) * math.sin(phi), (b / a) * (1.0 - math.cos(phi))


def _quadrature(s0: RobotState, a: float, b: float, t: float) -> tuple[float, float, float]:
    th0, w0, v0 = s0.pose.theta, s0.twist.omega, s0.twist.vx
    heading = lambda s: th0 + w0 * s + 0.5 * a * s * s
    x = quad(lambda s: (v0 + b * s) * math.cos(heading(s)), 0, t, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    y = quad(lambda s: (v0 + b * s) * math.sin(heading(s)), 0, t, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    return heading(t), s0.pose.x + x, s0.pose.y + y


def test_criterion_10_integrator_order(report):
    T = 2.0
    dts = [2e-2, 1e-2, 5e-3, 2.5e-3]
    cases = [
        (RobotState.at(), 0.8, 1.5, _closed_form_from_rest(0.8, 1.5, T)),
        (RobotState.at(0.3, 1.0, -2.0, 0.4, 2.0), -0.5, 0.7, None),
    ]
    slopes = []
    for s0, a, b, exact in cases:
        exact = exact or _quadrature(s0, a, b, T)
        errs = []
        for dt in dts:
            s = s0
            for _ in range(int(round(T / dt))):
                s = step(s, ControlInput(a, b, 0.0), dt)
            errs.append(max(angle_diff(s.pose.theta, exact[0]), abs(s.pose.x - exact[1]), abs(s.pose.y - exact[2])))
        slopes.append(np.polyfit(np.log(dts), np.log(errs), 1)[0])
    ok = min(slopes) >= 0.9
    report(10, ok, f"fitted slopes {', '.join(f'{s:.3f}' for s in slopes)} over dt {dts}")
    assert ok


if __name__ == "__main__":
    import pytest

    sys.exit(pytest.main([__file__, "-q", "-s", *sys.argv[1:]]))
