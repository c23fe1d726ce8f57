"""Formation tracking as consensus with an offset, transformed leader."""

from __future__ import annotations

import math
from typing import Callable, Mapping, Sequence

from .controllers import Gains, attitude_from_ratio
from .dynamics import ControlInput, RobotState
from .liegroup import LogBranch, Pose, Twist, adjoint_inv, compose, log_se2, relative
from .network import Topology, VirtualLeader, propagate_inputs

Offset = tuple[float, float]


def desired_attitude(offset: Offset, leader_twist: Twist) -> float:
    """Relative heading compatible with a rigid offset behind a nonholonomic leader."""
    xb, yb = offset
    w = leader_twist.omega
    return attitude_from_ratio(w * xb, leader_twist.vx - w * yb)


def desired_pose(offset: Offset, leader_twist: Twist) -> Pose:
    if offset[0] == 0.0 and offset[1] == 0.0:
        return Pose(0.0, 0.0, 0.0)
    return Pose(desired_attitude(offset, leader_twist), offset[0], offset[1])


def transformed_leader(vl: VirtualLeader, offset: Offset) -> VirtualLeader:
    """Shift a (virtual) leader by the desired offset.

    The offset pose is rebuilt from the leader's current twist, but the input is
    transported as if it were constant; its rate of change is not fed forward.
    """
    if offset[0] == 0.0 and offset[1] == 0.0:
        return vl
    gbar = desired_pose(offset, vl.twist)
    return VirtualLeader(
        compose(vl.pose, gbar),
        adjoint_inv(gbar, vl.twist),
        ControlInput(*adjoint_inv(gbar, vl.input.as_twist())),
    )


def formation_error(target: Pose, follower: Pose, position_only: bool = False) -> float:
    """``||log(g_a^-1 g_i)||``; with ``position_only`` just the position gap."""
    g = relative(target, follower)
    if position_only:
        return math.hypot(g.x, g.y)
    return log_se2(g).norm()


def formation_step_inputs(
    topology: Topology,
    states: Sequence[RobotState],
    offsets: Mapping[int, Offset],
    leader_input_fn: Callable[[float], ControlInput],
    gains: Gains,
    t: float = 0.0,
    branch: LogBranch = LogBranch.PlusPi,
) -> dict[int, ControlInput]:
    zero = (0.0, 0.0)
    return propagate_inputs(
        topology,
        states,
        leader_input_fn(t),
        lambda i, vl: transformed_leader(vl, offsets.get(i, zero)),
        gains,
        branch,
    )
