import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import conjugate, homog
from se2track.controllers import DEFAULT_GAINS, Gains
from se2track.dynamics import ControlInput, RobotState
from se2track.formation import (
    desired_attitude,
    desired_pose,
    formation_error,
    formation_step_inputs,
    transformed_leader,
)
from se2track.liegroup import IDENTITY, Pose, Twist, compose
from se2track.network import Topology, VirtualLeader, consensus_step_inputs

angles = st.floats(-math.pi, math.pi, allow_nan=False)
coords = st.floats(-50, 50, allow_nan=False)
rates = st.floats(-5, 5, allow_nan=False)
states = st.builds(RobotState.at, angles, coords, coords, rates, rates)
FIG7 = [(0, 1), (1, 2), (1, 3), (2, 3)]


def test_desired_attitude_examples():
    assert desired_attitude((-15, 15), Twist(0, 2, 0)) == 0.0
    assert desired_attitude((-15, 15), Twist()) == 0.0
    th = desired_attitude((-15, 0), Twist(1, 0, 0))
    assert th == pytest.approx(-math.pi / 2, abs=1e-15)
    vl = VirtualLeader(IDENTITY, Twist(1, 0, 0), ControlInput())
    assert abs(transformed_leader(vl, (-15, 0)).twist.vy) < 1e-10


def test_transformed_leader_examples():
    vl = VirtualLeader(Pose(0.3, 1, 2), Twist(0.2, 1, 0), ControlInput(0.1, 0.5, 0))
    assert transformed_leader(vl, (0.0, 0.0)) is vl
    vl = VirtualLeader(IDENTITY, Twist(0, 1, 0), ControlInput())
    a = transformed_leader(vl, (-15, 0))
    assert a.pose == Pose(0, -15, 0)
    assert a.twist == Twist(0, 1, 0)
    vl = VirtualLeader(IDENTITY, Twist(0.1, 1, 0), ControlInput())
    assert abs(transformed_leader(vl, (-15, 15)).twist.vy) < 1e-10


@given(rates, rates, coords, coords)
def test_transformed_twist_is_nonholonomic(w, v, xb, yb):
    if math.hypot(w * xb, v - w * yb) < 1e-6:
        return
    vl = VirtualLeader(IDENTITY, Twist(w, v, 0), ControlInput())
    a = transformed_leader(vl, (xb, yb))
    assert abs(a.twist.vy) < 1e-10 * max(1.0, abs(v) + abs(w) * math.hypot(xb, yb))


@given(states, rates, rates, coords, coords)
def test_transformed_leader_matches_matrix_transport(s, a, b, xb, yb):
    vl = VirtualLeader(s.pose, s.twist, ControlInput(a, b, 0))
    tl = transformed_leader(vl, (xb, yb))
    gbar = desired_pose((xb, yb), s.twist)
    want = homog(*s.pose) @ homog(*gbar)
    assert np.allclose(tl.pose.matrix(), want, atol=1e-10)
    Ginv = np.linalg.inv(homog(*gbar))
    assert np.allclose(tl.twist, conjugate(Ginv, s.twist), atol=1e-9)
    assert np.allclose(tl.input, conjugate(Ginv, (a, b, 0)), atol=1e-9)


def test_random_offsets_thousand_samples():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        w, v = rng.uniform(-2, 2), rng.uniform(-5, 5)
        xb, yb = rng.uniform(-30, 30, 2)
        if math.hypot(w * xb, v - w * yb) < 1e-6:
            continue
        vl = VirtualLeader(IDENTITY, Twist(w, v, 0), ControlInput())
        worst = max(worst, abs(transformed_leader(vl, (xb, yb)).twist.vy))
    assert worst < 1e-10


@given(st.lists(states, min_size=4, max_size=4), rates, rates)
def test_zero_offsets_reduce_to_consensus(sts, a, b):
    top = Topology.from_edges(4, FIG7, {3: [0.5]})
    u0 = lambda t: ControlInput(a, b, 0)
    offs = {1: (0.0, 0.0), 2: (0.0, 0.0), 3: (0.0, 0.0)}
    assert formation_step_inputs(top, sts, offs, u0, DEFAULT_GAINS) == consensus_step_inputs(top, sts, u0, DEFAULT_GAINS)


def test_follower_on_station_gets_zero_input():
    lead = RobotState.at(0.0, 0.0, 0.0, 0.0, 1.0)
    offset = (-15.0, 0.0)
    a = transformed_leader(VirtualLeader(lead.pose, lead.twist, ControlInput()), offset)
    fol = RobotState(a.pose, a.twist)
    u = formation_step_inputs(Topology.chain(2), [lead, fol], {1: offset}, lambda t: ControlInput(), DEFAULT_GAINS)
    assert u[1] == ControlInput(0.0, 0.0, 0.0)


def test_formation_error_metric():
    target = Pose(0.5, 1.0, 2.0)
    assert formation_error(target, target) == 0.0
    off = compose(target, Pose(0.2, 3.0, 4.0))
    assert formation_error(target, off, position_only=True) == pytest.approx(5.0, abs=1e-12)
    assert formation_error(target, off) > 0.2


def test_turning_leader_gives_bent_station():
    # offset behind a turning leader needs a rotated relative heading
    th = desired_attitude((-15, 15), Twist(0.1, 1, 0))
    assert th == pytest.approx(math.atan2(0.1 * -15, 1 - 0.1 * 15), abs=1e-15)
    assert desired_pose((0.0, 0.0), Twist(0.1, 1, 0)) == IDENTITY
