"""Double-integrator dynamics on SE(2) and relative-system construction."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .liegroup import (
    ExpCoords,
    IDENTITY,
    Pose,
    Twist,
    ZERO_TWIST,
    adjoint_inv,
    coadjoint_matrix,
    compose,
    exp_se2,
    relative,
)

#: Tolerance on |vy| used to call a state nonholonomic.
CONSTRAINT_TOL = 1e-9
DEFAULT_DT = 1e-3


class ControlInput(NamedTuple):
    """Integrator-level input: ``xi_dot = u``."""

    u_theta: float = 0.0
    u_x: float = 0.0
    u_y: float = 0.0

    def as_twist(self) -> Twist:
        return Twist(self.u_theta, self.u_x, self.u_y)

    @classmethod
    def from_twist(cls, t: Twist) -> "ControlInput":
        return cls(t.omega, t.vx, t.vy)


ZERO_INPUT = ControlInput(0.0, 0.0, 0.0)


class RobotState(NamedTuple):
    pose: Pose = IDENTITY
    twist: Twist = ZERO_TWIST

    @classmethod
    def at(cls, theta=0.0, x=0.0, y=0.0, omega=0.0, vx=0.0, vy=0.0) -> "RobotState":
        return cls(Pose(theta, x, y), Twist(omega, vx, vy))


class RelativeState(NamedTuple):
    """Pose and twist of one robot seen from another (``g_ij``, ``xi_ij``)."""

    pose: Pose
    twist: Twist


@dataclass(frozen=True)
class InertiaParams:
    J: float = 1.0
    m: float = 1.0

    def __post_init__(self):
        if not (self.J > 0 and self.m > 0):
            raise ValueError(f"inertia must be positive, got J={self.J}, m={self.m}")

    def matrix(self) -> np.ndarray:
        return np.diag([self.J, self.m, self.m])


class NonholonomicViolation(ValueError):
    """A lateral input was commanded on a robot with no lateral channel."""


def relative_twist(g_ij: Pose, xi_i: Twist, xi_j: Twist) -> Twist:
    """``xi_j - Ad_{g_ij^-1} xi_i``."""
    a = adjoint_inv(g_ij, xi_i)
    return Twist(xi_j.omega - a.omega, xi_j.vx - a.vx, xi_j.vy - a.vy)


def relative_state(leader: RobotState, follower: RobotState) -> RelativeState:
    g = relative(leader.pose, follower.pose)
    return RelativeState(g, relative_twist(g, leader.twist, follower.twist))


def step(
    state: RobotState,
    u: ControlInput,
    dt: float,
    nonholonomic: bool = True,
) -> RobotState:
    """Advance one Lie-Euler step: velocity first, then ``g <- g exp(dt xi)``."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    tw = state.twist
    if nonholonomic:
        if u.u_y != 0.0:
            raise NonholonomicViolation(f"u_y={u.u_y!r} on a nonholonomic robot")
        xi = Twist(tw.omega + dt * u.u_theta, tw.vx + dt * u.u_x, tw.vy)
    else:
        xi = Twist(tw.omega + dt * u.u_theta, tw.vx + dt * u.u_x, tw.vy + dt * u.u_y)
    dg = exp_se2(ExpCoords(dt * xi.omega, dt * xi.vx, dt * xi.vy))
    return RobotState(compose(state.pose, dg), xi)


def recover_force(u: ControlInput, twist: Twist, params: InertiaParams) -> np.ndarray:
    """Physical torque/forces ``F = I u - ad_xi^T I xi``."""
    inertia = params.matrix()
    xi = np.array(twist, dtype=float)
    return inertia @ np.array(u, dtype=float) - coadjoint_matrix(twist).T @ inertia @ xi


def check_nonholonomic(state: RobotState, tol: float = CONSTRAINT_TOL) -> bool:
    return abs(state.twist.vy) <= tol


def lateral_velocity(state: RobotState) -> float:
    """World-frame form of the constraint: ``[-sin th, cos th] . p_dot``."""
    th = state.pose.theta
    c, s = math.cos(th), math.sin(th)
    vx, vy = state.twist.vx, state.twist.vy
    pdx, pdy = c * vx - s * vy, s * vx + c * vy
    return -s * pdx + c * pdy
