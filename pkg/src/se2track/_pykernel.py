"""Pure-Python simulation loop over the library primitives.

Array contract shared with the compiled core (``_ckernel``):

``init``      (n, 5) float64   theta, x, y, omega, vx per node
``parent_ptr``/``parent_idx``  CSR parent lists, in configured order
``weight_ptr``/``weights``     CSR convex-combination weights
``order``     (n,) int64       root-first evaluation order
``offsets``   (n, 2) float64   desired formation offsets (ignored unless ``formation``)
``leader_u``  (nsteps+1, 2)    leader input (u_theta, u_x) sampled at k*dt
``gains``     (4,)             k_p, k_d, k, k_e

Returns ``(out, status, last)`` where ``out`` has shape (nsteps+1, n, NCOL),
``status`` is 0 or ``DIVERGED`` and ``last`` is the last filled row.
"""

from __future__ import annotations

import math

import numpy as np

from .controllers import Gains, context_from_relative, single_follower_tracking
from .dynamics import ControlInput, RelativeState, RobotState, relative_twist, step
from .formation import desired_attitude, transformed_leader
from .liegroup import LogBranch, Pose, Twist, log_se2, relative, wrap_angle
from .network import VirtualLeader, convex_input, convex_pose, convex_twist

COLUMNS = (
    "theta", "x", "y", "omega", "vx", "vy", "u_theta", "u_x",
    "err_pose", "err_twist", "err_pos", "root_err", "target_vy", "gbar_rate",
)
NCOL = len(COLUMNS)
DIVERGED = 1
DIVERGENCE_LIMIT = 1e9
STILL_TWIST = 1e-6


def _diverged(s: RobotState) -> bool:
    for v in (*s.pose, *s.twist):
        if not math.isfinite(v) or abs(v) > DIVERGENCE_LIMIT:
            return True
    return False


def simulate(init, parent_ptr, parent_idx, weight_ptr, weights, order, offsets,
             leader_u, gains, dt, nsteps, branch_minus, formation):
    n = init.shape[0]
    kp, kd, k, ke = (float(g) for g in gains)
    gains_obj = Gains(kp, kd, k, ke)
    branch = LogBranch.MinusPi if branch_minus else LogBranch.PlusPi
    parents = [[int(j) for j in parent_idx[parent_ptr[i]:parent_ptr[i + 1]]] for i in range(n)]
    wts = [[float(w) for w in weights[weight_ptr[i]:weight_ptr[i + 1]]] for i in range(n)]
    offs = [(float(offsets[i, 0]), float(offsets[i, 1])) for i in range(n)]
    order = [int(i) for i in order]
    root = order[0]

    states = [RobotState.at(*(float(v) for v in init[i])) for i in range(n)]
    out = np.zeros((nsteps + 1, n, NCOL))
    prev_gbar = [0.0] * n
    status, last = 0, nsteps

    for kstep in range(nsteps + 1):
        u0 = ControlInput(float(leader_u[kstep, 0]), float(leader_u[kstep, 1]), 0.0)
        inputs = {root: u0}
        row = out[kstep]
        for i in order[1:]:
            ps = parents[i]
            if len(ps) == 1:
                p = ps[0]
                vl = VirtualLeader(states[p].pose, states[p].twist, inputs[p])
            else:
                vl = VirtualLeader(
                    convex_pose([states[p].pose for p in ps], wts[i], branch),
                    convex_twist([states[p].twist for p in ps], wts[i]),
                    convex_input([inputs[p] for p in ps], wts[i]),
                )
            target = vl
            gbar = 0.0
            if formation:
                target = transformed_leader(vl, offs[i])
                if offs[i] != (0.0, 0.0):
                    gbar = wrap_angle(desired_attitude(offs[i], vl.twist))
            me = states[i]
            g = relative(target.pose, me.pose)
            rel = RelativeState(g, relative_twist(g, target.twist, me.twist))
            ctx = context_from_relative(rel, target.twist, target.input, branch)
            inputs[i] = single_follower_tracking(ctx, gains_obj)

            if formation and offs[i] != (0.0, 0.0) and target.twist.norm() < STILL_TWIST:
                row[i, 8] = math.hypot(g.x, g.y)
            else:
                row[i, 8] = log_se2(g, branch).norm()
            row[i, 9] = rel.twist.norm()
            row[i, 10] = math.hypot(g.x, g.y)
            row[i, 11] = log_se2(relative(states[root].pose, me.pose), branch).norm()
            row[i, 12] = target.twist.vy
            row[i, 13] = 0.0 if kstep == 0 else wrap_angle(gbar - prev_gbar[i]) / dt
            prev_gbar[i] = gbar

        for i in range(n):
            s = states[i]
            row[i, 0:6] = (*s.pose, *s.twist)
            row[i, 6] = inputs[i].u_theta
            row[i, 7] = inputs[i].u_x
        if kstep == nsteps:
            break
        for i in range(n):
            states[i] = step(states[i], inputs[i], dt)
            if _diverged(states[i]):
                status, last = DIVERGED, kstep
        if status:
            break
    return out, status, last
