"""Closed-form SE(2) / se(2) algebra.

Poses are stored as ``(theta, x, y)`` with the heading wrapped to (-pi, pi];
the 3x3 homogeneous matrix is only built on demand.  Twists are ordered
``(omega, vx, vy)`` throughout, matching the body-velocity convention
``g^-1 g_dot``.
"""

from __future__ import annotations

import enum
import math
from collections import namedtuple
from typing import NamedTuple

import numpy as np

TWO_PI = 2.0 * math.pi

#: Below this |theta| the Jacobian terms switch to their Taylor expansions.
SERIES_THRESHOLD = 1e-4
#: |cos(theta) + 1| below this value puts a rotation on the log cut.
BRANCH_TOL = 1e-9


def wrap_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi].  Values already in range are returned untouched."""
    if -math.pi < theta <= math.pi:
        return theta
    r = math.remainder(theta, TWO_PI)
    if r <= -math.pi:
        r += TWO_PI
    elif r > math.pi:
        r -= TWO_PI
    return r


class Pose(namedtuple("Pose", "theta x y")):
    """SE(2) element: heading ``theta`` (rad) and planar position ``(x, y)`` (m)."""

    __slots__ = ()

    def __new__(cls, theta: float = 0.0, x: float = 0.0, y: float = 0.0):
        return super().__new__(cls, wrap_angle(float(theta)), float(x), float(y))

    @property
    def p(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def rotation(self) -> np.ndarray:
        return rotation_matrix(self.theta)

    def matrix(self) -> np.ndarray:
        c, s = math.cos(self.theta), math.sin(self.theta)
        return np.array([[c, -s, self.x], [s, c, self.y], [0.0, 0.0, 1.0]])

    @classmethod
    def from_matrix(cls, g: np.ndarray) -> "Pose":
        return cls(math.atan2(g[1, 0], g[0, 0]), g[0, 2], g[1, 2])


IDENTITY = Pose(0.0, 0.0, 0.0)


class Twist(NamedTuple):
    """se(2) element in vector form."""

    omega: float = 0.0
    vx: float = 0.0
    vy: float = 0.0

    def scaled(self, k: float) -> "Twist":
        return Twist(k * self.omega, k * self.vx, k * self.vy)

    def norm(self) -> float:
        return math.sqrt(self.omega * self.omega + self.vx * self.vx + self.vy * self.vy)


ZERO_TWIST = Twist(0.0, 0.0, 0.0)


class ExpCoords(NamedTuple):
    """Exponential coordinates ``(theta, qx, qy)`` of a pose."""

    theta: float = 0.0
    qx: float = 0.0
    qy: float = 0.0

    def norm(self) -> float:
        return math.sqrt(self.theta * self.theta + self.qx * self.qx + self.qy * self.qy)


class LogBranch(enum.Enum):
    """Which representative the logarithm returns for a half-turn rotation."""

    PlusPi = "plus"
    MinusPi = "minus"

    @classmethod
    def parse(cls, text: str) -> "LogBranch":
        key = text.strip().lower()
        for member in cls:
            if key in (member.value, member.name.lower(), "+pi" if member is cls.PlusPi else "-pi"):
                return member
        raise ValueError(f"unknown log branch {text!r} (expected 'plus' or 'minus')")


def rotation_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def compose(a: Pose, b: Pose) -> Pose:
    c, s = math.cos(a.theta), math.sin(a.theta)
    return Pose(a.theta + b.theta, a.x + c * b.x - s * b.y, a.y + s * b.x + c * b.y)


def inverse(g: Pose) -> Pose:
    c, s = math.cos(g.theta), math.sin(g.theta)
    return Pose(-g.theta, -(c * g.x + s * g.y), s * g.x - c * g.y)


def relative(a: Pose, b: Pose) -> Pose:
    """``a^-1 b`` without building the intermediate inverse."""
    c, s = math.cos(a.theta), math.sin(a.theta)
    dx, dy = b.x - a.x, b.y - a.y
    return Pose(b.theta - a.theta, c * dx + s * dy, -s * dx + c * dy)


def _sinc_terms(theta: float) -> tuple[float, float]:
    """Return ``sin(t)/t`` and ``(1 - cos(t))/t``."""
    if abs(theta) < SERIES_THRESHOLD:
        t2 = theta * theta
        return 1.0 - t2 / 6.0 + t2 * t2 / 120.0, theta * (0.5 - t2 / 24.0 + t2 * t2 / 720.0)
    return math.sin(theta) / theta, (1.0 - math.cos(theta)) / theta


def half_cot(theta: float) -> float:
    """``alpha(theta) = (theta/2) cot(theta/2)``, finite at zero."""
    if abs(theta) < SERIES_THRESHOLD:
        t2 = theta * theta
        return 1.0 - t2 / 12.0 - t2 * t2 / 720.0
    h = 0.5 * theta
    return h * math.cos(h) / math.sin(h)


def a_jacobian(theta: float) -> np.ndarray:
    a, b = _sinc_terms(theta)
    return np.array([[a, -b], [b, a]])


def a_jacobian_inv(theta: float) -> np.ndarray:
    al = half_cot(theta)
    h = 0.5 * theta
    return np.array([[al, h], [-h, al]])


def exp_se2(X: ExpCoords) -> Pose:
    a, b = _sinc_terms(X.theta)
    return Pose(X.theta, a * X.qx - b * X.qy, b * X.qx + a * X.qy)


def log_se2(g: Pose, branch: LogBranch = LogBranch.PlusPi) -> ExpCoords:
    """Exponential coordinates of ``g``.

    At a half-turn the rotation log is two-valued; ``branch`` picks the
    representative near +pi or -pi.  The translation is always
    ``A^-1(theta) p`` for whichever angle was chosen, so ``exp_se2`` of the
    result reproduces ``g`` on both branches.
    """
    theta = g.theta
    if abs(math.cos(theta) + 1.0) < BRANCH_TOL:
        if branch is LogBranch.PlusPi and theta < 0.0:
            theta += TWO_PI
        elif branch is LogBranch.MinusPi and theta > 0.0:
            theta -= TWO_PI
    al = half_cot(theta)
    h = 0.5 * theta
    return ExpCoords(theta, al * g.x + h * g.y, -h * g.x + al * g.y)


def adjoint(g: Pose, xi: Twist) -> Twist:
    """``Ad_g xi = g xi^ g^-1`` in vector form: ``(omega, R v - omega S p)``."""
    c, s = math.cos(g.theta), math.sin(g.theta)
    w = xi.omega
    return Twist(w, c * xi.vx - s * xi.vy + w * g.y, s * xi.vx + c * xi.vy - w * g.x)


def adjoint_inv(g: Pose, xi: Twist) -> Twist:
    """``Ad_{g^-1} xi = (omega, R^T (v + omega S p))``."""
    c, s = math.cos(g.theta), math.sin(g.theta)
    w = xi.omega
    ax = xi.vx - w * g.y
    ay = xi.vy + w * g.x
    return Twist(w, c * ax + s * ay, -s * ax + c * ay)


def lie_bracket(x: Twist, y: Twist) -> Twist:
    return Twist(0.0, -x.omega * y.vy + y.omega * x.vy, x.omega * y.vx - y.omega * x.vx)


def coadjoint_matrix(xi: Twist) -> np.ndarray:
    """Matrix of ``ad_xi`` in the ``(omega, vx, vy)`` basis."""
    return np.array(
        [[0.0, 0.0, 0.0], [xi.vy, 0.0, -xi.omega], [-xi.vx, xi.omega, 0.0]]
    )


def hat(xi) -> np.ndarray:
    w, vx, vy = xi
    return np.array([[0.0, -w, vx], [w, 0.0, vy], [0.0, 0.0, 0.0]])


def vee(m: np.ndarray) -> Twist:
    return Twist(float(m[1, 0]), float(m[0, 2]), float(m[1, 2]))
