"""Stabilizers and the single-follower tracking law.

The follower is driven onto its leader by splitting the relative system
``g01 = g~01 g_e`` into a heading-alignment part (``g_e``, a pure rotation)
and an adjoint part ``g~01`` whose lateral velocity vanishes by
construction.  Each part gets its own stabilizer and the two are assembled
into a force/torque command with no lateral channel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .dynamics import ControlInput, RelativeState, RobotState, relative_state
from .liegroup import (
    ExpCoords,
    LogBranch,
    Pose,
    Twist,
    adjoint,
    adjoint_inv,
    compose,
    inverse,
    lie_bracket,
    log_se2,
    wrap_angle,
)

DEGENERATE_TOL = 1e-12


@dataclass(frozen=True)
class Gains:
    k_p: float = 1.0
    k_d: float = 2.0
    k: float = 1.0
    k_e: float = 5.0

    def __post_init__(self):
        for name in ("k_p", "k_d", "k", "k_e"):
            if not getattr(self, name) > 0:
                raise ValueError(f"gain {name} must be positive, got {getattr(self, name)}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.k_p, self.k_d, self.k, self.k_e)


DEFAULT_GAINS = Gains()


class TrackingContext(NamedTuple):
    relative: RelativeState
    leader_twist: Twist
    leader_input: ControlInput
    adjoint_attitude: float
    follower_heading_error: float
    branch: LogBranch = LogBranch.PlusPi


def bearing(qx: float, qy: float) -> float:
    """``beta = -arctan(qy / qx)`` on (-pi/2, pi/2]; zero at the origin.

    The single-argument range is deliberate: a target behind the robot
    (``qx < 0``) is reached by reversing, not by turning round.
    """
    if qx == 0.0 and qy == 0.0:
        return 0.0
    if qx < 0.0:
        return -math.atan2(-qy, -qx)
    return -math.atan2(qy, qx)


def attitude_from_ratio(num: float, den: float) -> float:
    """Four-quadrant lift of ``arctan(num / den)``; zero when both vanish."""
    if abs(num) < DEGENERATE_TOL and abs(den) < DEGENERATE_TOL:
        return 0.0
    a = math.atan2(num, den)
    return math.pi if a == -math.pi else a


def wrap_heading_error(e: float) -> float:
    # +-pi survives so the branch chosen by the log decides the turn direction
    if -math.pi <= e <= math.pi:
        return e
    return wrap_angle(e)


def nonholonomic_stabilizer(X: ExpCoords, twist: Twist, gains: Gains) -> ControlInput:
    beta = bearing(X.qx, X.qy)
    return ControlInput(
        -gains.k_p * (X.theta + gains.k * beta) - gains.k_d * twist.omega,
        -gains.k_p * X.qx - gains.k_d * twist.vx,
        0.0,
    )


def fully_actuated_stabilizer(
    g: Pose,
    twist: Twist,
    k_p: float,
    k_d: float,
    branch: LogBranch = LogBranch.PlusPi,
) -> ControlInput:
    """``u = -k_p log(g) - k_d xi``.  On the trace cut the ``branch`` default applies."""
    X = log_se2(g, branch)
    return ControlInput(
        -k_p * X.theta - k_d * twist.omega,
        -k_p * X.qx - k_d * twist.vx,
        -k_p * X.qy - k_d * twist.vy,
    )


def adjoint_attitude(rel: RelativeState, leader_twist: Twist) -> float:
    """Heading that puts the relative configuration on the adjoint orbit."""
    w0 = leader_twist.omega
    r = rel.pose
    return attitude_from_ratio(w0 * r.x, leader_twist.vx - w0 * r.y)


def adjoint_orbit_residual(theta: float, rel: RelativeState, leader_twist: Twist) -> float:
    w0 = leader_twist.omega
    r = rel.pose
    return (leader_twist.vx - w0 * r.y) * math.sin(theta) - w0 * r.x * math.cos(theta)


def tracking_context(
    leader: RobotState,
    leader_input: ControlInput,
    follower: RobotState,
    branch: LogBranch = LogBranch.PlusPi,
) -> TrackingContext:
    rel = relative_state(leader, follower)
    return context_from_relative(rel, leader.twist, leader_input, branch)


def context_from_relative(
    rel: RelativeState,
    leader_twist: Twist,
    leader_input: ControlInput,
    branch: LogBranch = LogBranch.PlusPi,
) -> TrackingContext:
    theta_adj = adjoint_attitude(rel, leader_twist)
    theta01 = log_se2(rel.pose, branch).theta
    return TrackingContext(
        rel, leader_twist, leader_input, theta_adj, wrap_heading_error(theta01 - theta_adj), branch
    )


def single_follower_tracking(ctx: TrackingContext, gains: Gains) -> ControlInput:
    g01, xi01 = ctx.relative
    X = log_se2(g01, ctx.branch)
    u0 = ctx.leader_input
    beta = bearing(X.qx, X.qy)
    c, s = math.cos(g01.theta), math.sin(g01.theta)
    u_theta = (
        -gains.k_e * ctx.follower_heading_error
        - gains.k_p * (X.theta + gains.k * beta)
        - gains.k_d * xi01.omega
        + u0.u_theta
    )
    u_x = (
        -gains.k_p * X.qx
        - gains.k_d * xi01.vx
        + (u0.u_x - u0.u_theta * g01.y) * c
        + u0.u_theta * g01.x * s
    )
    return ControlInput(u_theta, u_x, 0.0)


def follower_twist(ctx: TrackingContext) -> Twist:
    """Recover ``xi_1 = xi_01 + Ad_{g01^-1} xi_0``."""
    g01, xi01 = ctx.relative
    a = adjoint_inv(g01, ctx.leader_twist)
    return Twist(xi01.omega + a.omega, xi01.vx + a.vx, xi01.vy + a.vy)


def assembled_tracking_input(ctx: TrackingContext, gains: Gains) -> ControlInput:
    """Unreduced sum ``u_e + u~01 + Ad_{g01^-1} u_0 + [xi_1, xi_01]``.

    Kept for cross-checking :func:`single_follower_tracking`; it generally has
    a nonzero lateral component and must not be fed to a nonholonomic robot.
    """
    g01, xi01 = ctx.relative
    stab = nonholonomic_stabilizer(log_se2(g01, ctx.branch), xi01, gains)
    ff = adjoint_inv(g01, ctx.leader_input.as_twist())
    br = lie_bracket(follower_twist(ctx), xi01)
    return ControlInput(
        -gains.k_e * ctx.follower_heading_error + stab.u_theta + ff.omega + br.omega,
        stab.u_x + ff.vx + br.vx,
        stab.u_y + ff.vy + br.vy,
    )


def tracking_law_discrepancy(ctx: TrackingContext, gains: Gains) -> ControlInput:
    """Assembled form minus the reduced law; lateral entry included."""
    a = assembled_tracking_input(ctx, gains)
    b = single_follower_tracking(ctx, gains)
    return ControlInput(a.u_theta - b.u_theta, a.u_x - b.u_x, a.u_y - b.u_y)


class SubsystemDiagnostics(NamedTuple):
    g_adj: Pose
    g_e: Pose
    xi_adj: Twist
    xi_e: Twist


def subsystem_diagnostics(ctx: TrackingContext) -> SubsystemDiagnostics:
    """Factor the relative system into ``g01 = g~01 g_e`` with matching twists.

    The auxiliary robot shares the follower's position and takes the adjoint
    attitude; its velocity is chosen as ``Ad_{g_e} xi_1`` so that ``xi_e = 0``.
    """
    g01 = ctx.relative.pose
    g_adj = Pose(ctx.adjoint_attitude, g01.x, g01.y)
    g_e = compose(inverse(g_adj), g01)
    xi1 = follower_twist(ctx)
    xi_aux = adjoint(g_e, xi1)
    lead = adjoint_inv(g_adj, ctx.leader_twist)
    xi_adj = Twist(xi_aux.omega - lead.omega, xi_aux.vx - lead.vx, xi_aux.vy - lead.vy)
    back = adjoint_inv(g_e, xi_aux)
    xi_e = Twist(xi1.omega - back.omega, xi1.vx - back.vx, xi1.vy - back.vy)
    return SubsystemDiagnostics(g_adj, g_e, xi_adj, xi_e)
