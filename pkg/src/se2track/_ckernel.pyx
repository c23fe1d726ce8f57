# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled simulation loop.  Same contract as ``_pykernel.simulate``.

Every helper mirrors its Python counterpart operation for operation, so the
two backends agree to rounding on identical inputs.
"""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free
from libc.math cimport sin, cos, atan2, sqrt, hypot, remainder, fabs, isfinite, M_PI

cnp.import_array()

DEF NCOL = 14

cdef double PI = M_PI
cdef double TWO_PI = 2.0 * M_PI
cdef double SERIES_THRESHOLD = 1e-4
cdef double BRANCH_TOL = 1e-9
cdef double DEGENERATE_TOL = 1e-12
cdef double STILL_TWIST = 1e-6
cdef double DIVERGENCE_LIMIT = 1e9

cdef struct Pose:
    double th
    double x
    double y

cdef struct Tw:
    double w
    double vx
    double vy


cdef inline double wrap(double t) nogil:
    cdef double r
    if -PI < t <= PI:
        return t
    r = remainder(t, TWO_PI)
    if r <= -PI:
        r += TWO_PI
    elif r > PI:
        r -= TWO_PI
    return r


cdef inline void sinc_terms(double t, double* a, double* b) nogil:
    cdef double t2
    if fabs(t) < SERIES_THRESHOLD:
        t2 = t * t
        a[0] = 1.0 - t2 / 6.0 + t2 * t2 / 120.0
        b[0] = t * (0.5 - t2 / 24.0 + t2 * t2 / 720.0)
    else:
        a[0] = sin(t) / t
        b[0] = (1.0 - cos(t)) / t


cdef inline double half_cot(double t) nogil:
    cdef double t2, h
    if fabs(t) < SERIES_THRESHOLD:
        t2 = t * t
        return 1.0 - t2 / 12.0 - t2 * t2 / 720.0
    h = 0.5 * t
    return h * cos(h) / sin(h)


cdef inline Pose mkpose(double th, double x, double y) nogil:
    cdef Pose p
    p.th = wrap(th)
    p.x = x
    p.y = y
    return p


cdef inline Tw mktw(double w, double vx, double vy) nogil:
    cdef Tw t
    t.w = w
    t.vx = vx
    t.vy = vy
    return t


cdef inline Pose compose(Pose a, Pose b) nogil:
    cdef double c = cos(a.th), s = sin(a.th)
    return mkpose(a.th + b.th, a.x + c * b.x - s * b.y, a.y + s * b.x + c * b.y)


cdef inline Pose relative(Pose a, Pose b) nogil:
    cdef double c = cos(a.th), s = sin(a.th)
    cdef double dx = b.x - a.x, dy = b.y - a.y
    return mkpose(b.th - a.th, c * dx + s * dy, -s * dx + c * dy)


cdef inline Pose exp_se2(double th, double qx, double qy) nogil:
    cdef double a, b
    sinc_terms(th, &a, &b)
    return mkpose(th, a * qx - b * qy, b * qx + a * qy)


cdef inline Pose log_se2(Pose g, bint minus) nogil:
    # returned as (theta, qx, qy) packed in a Pose struct without wrapping
    cdef double th = g.th, al, h
    cdef Pose X
    if fabs(cos(th) + 1.0) < BRANCH_TOL:
        if not minus and th < 0.0:
            th += TWO_PI
        elif minus and th > 0.0:
            th -= TWO_PI
    al = half_cot(th)
    h = 0.5 * th
    X.th = th
    X.x = al * g.x + h * g.y
    X.y = -h * g.x + al * g.y
    return X


cdef inline double norm3(double a, double b, double c) nogil:
    return sqrt(a * a + b * b + c * c)


cdef inline Tw adjoint_inv(Pose g, Tw xi) nogil:
    cdef double c = cos(g.th), s = sin(g.th)
    cdef double w = xi.w
    cdef double ax = xi.vx - w * g.y
    cdef double ay = xi.vy + w * g.x
    return mktw(w, c * ax + s * ay, -s * ax + c * ay)


cdef inline Tw relative_twist(Pose g, Tw xi_i, Tw xi_j) nogil:
    cdef Tw a = adjoint_inv(g, xi_i)
    return mktw(xi_j.w - a.w, xi_j.vx - a.vx, xi_j.vy - a.vy)


cdef inline double attitude_from_ratio(double num, double den) nogil:
    if fabs(num) < DEGENERATE_TOL and fabs(den) < DEGENERATE_TOL:
        return 0.0
    cdef double a = atan2(num, den)
    return PI if a == -PI else a


cdef inline double bearing(double qx, double qy) nogil:
    if qx == 0.0 and qy == 0.0:
        return 0.0
    if qx < 0.0:
        return -atan2(-qy, -qx)
    return -atan2(qy, qx)


cdef inline double wrap_heading_error(double e) nogil:
    if -PI <= e <= PI:
        return e
    return wrap(e)


cdef inline void tracking_law(Pose tp, Tw ttw, double tuth, double tux,
                              Pose g, Tw xi01, double kp, double kd, double k, double ke,
                              bint minus, double* uth, double* ux) nogil:
    cdef double w0 = ttw.w
    cdef double theta_adj = attitude_from_ratio(w0 * g.x, ttw.vx - w0 * g.y)
    cdef Pose X = log_se2(g, minus)
    cdef double e = wrap_heading_error(X.th - theta_adj)
    cdef double beta = bearing(X.x, X.y)
    cdef double c = cos(g.th), s = sin(g.th)
    uth[0] = -ke * e - kp * (X.th + k * beta) - kd * xi01.w + tuth
    ux[0] = -kp * X.x - kd * xi01.vx + (tux - tuth * g.y) * c + tuth * g.x * s


def simulate(double[:, ::1] init, long[::1] parent_ptr, long[::1] parent_idx,
             long[::1] weight_ptr, double[::1] weights, long[::1] order,
             double[:, ::1] offsets, double[:, ::1] leader_u, double[::1] gains,
             double dt, long nsteps, bint branch_minus, bint formation):
    cdef Py_ssize_t n = init.shape[0]
    cdef double kp = gains[0], kd = gains[1], k = gains[2], ke = gains[3]
    out_arr = np.zeros((nsteps + 1, n, NCOL))
    cdef double[:, :, ::1] out = out_arr

    cdef Pose* pose = <Pose*> malloc(n * sizeof(Pose))
    cdef Tw* tw = <Tw*> malloc(n * sizeof(Tw))
    cdef double* uth = <double*> malloc(n * sizeof(double))
    cdef double* ux = <double*> malloc(n * sizeof(double))
    cdef double* prev_gbar = <double*> malloc(n * sizeof(double))

    cdef Py_ssize_t i, j, oi, kstep, p, np_, wp
    cdef long root = order[0], status = 0, last = nsteps
    cdef Pose vp, tp, g, X, gbar_pose
    cdef Tw vt, ttw, xi01, me_tw, a
    cdef double vuth, vux, tuth, tux, lam, gbar, ox, oy, wx
    cdef double num, den

    try:
        for i in range(n):
            pose[i] = mkpose(init[i, 0], init[i, 1], init[i, 2])
            tw[i] = mktw(init[i, 3], init[i, 4], 0.0)
            prev_gbar[i] = 0.0
        with nogil:
            for kstep in range(nsteps + 1):
                uth[root] = leader_u[kstep, 0]
                ux[root] = leader_u[kstep, 1]
                for oi in range(1, n):
                    i = order[oi]
                    np_ = parent_ptr[i + 1] - parent_ptr[i]
                    p = parent_idx[parent_ptr[i]]
                    vp = pose[p]
                    vt = tw[p]
                    vuth = uth[p]
                    vux = ux[p]
                    wx = 0.0
                    if np_ > 1:
                        wp = weight_ptr[i]
                        for j in range(1, np_):
                            p = parent_idx[parent_ptr[i] + j]
                            lam = weights[wp + j - 1]
                            X = log_se2(relative(vp, pose[p]), branch_minus)
                            vp = compose(vp, exp_se2(lam * X.th, lam * X.x, lam * X.y))
                        # twist and input recursions run separately, as in Python
                        vt = tw[parent_idx[parent_ptr[i]]]
                        vuth = uth[parent_idx[parent_ptr[i]]]
                        vux = ux[parent_idx[parent_ptr[i]]]
                        for j in range(1, np_):
                            p = parent_idx[parent_ptr[i] + j]
                            lam = weights[wp + j - 1]
                            vt.w = (1.0 - lam) * vt.w + lam * tw[p].w
                            vt.vx = (1.0 - lam) * vt.vx + lam * tw[p].vx
                            vt.vy = (1.0 - lam) * vt.vy + lam * tw[p].vy
                            vuth = (1.0 - lam) * vuth + lam * uth[p]
                            vux = (1.0 - lam) * vux + lam * ux[p]
                            wx = (1.0 - lam) * wx + lam * 0.0

                    tp = vp
                    ttw = vt
                    tuth = vuth
                    tux = vux
                    gbar = 0.0
                    if formation:
                        ox = offsets[i, 0]
                        oy = offsets[i, 1]
                        if not (ox == 0.0 and oy == 0.0):
                            num = vt.w * ox
                            den = vt.vx - vt.w * oy
                            gbar = wrap(attitude_from_ratio(num, den))
                            gbar_pose = mkpose(gbar, ox, oy)
                            tp = compose(vp, gbar_pose)
                            ttw = adjoint_inv(gbar_pose, vt)
                            a = adjoint_inv(gbar_pose, mktw(vuth, vux, wx))
                            tuth = a.w
                            tux = a.vx

                    me_tw = tw[i]
                    g = relative(tp, pose[i])
                    xi01 = relative_twist(g, ttw, me_tw)
                    tracking_law(tp, ttw, tuth, tux, g, xi01, kp, kd, k, ke,
                                 branch_minus, &uth[i], &ux[i])

                    if (formation and (offsets[i, 0] != 0.0 or offsets[i, 1] != 0.0)
                            and norm3(ttw.w, ttw.vx, ttw.vy) < STILL_TWIST):
                        out[kstep, i, 8] = hypot(g.x, g.y)
                    else:
                        X = log_se2(g, branch_minus)
                        out[kstep, i, 8] = norm3(X.th, X.x, X.y)
                    out[kstep, i, 9] = norm3(xi01.w, xi01.vx, xi01.vy)
                    out[kstep, i, 10] = hypot(g.x, g.y)
                    X = log_se2(relative(pose[root], pose[i]), branch_minus)
                    out[kstep, i, 11] = norm3(X.th, X.x, X.y)
                    out[kstep, i, 12] = ttw.vy
                    if kstep == 0:
                        out[kstep, i, 13] = 0.0
                    else:
                        out[kstep, i, 13] = wrap(gbar - prev_gbar[i]) / dt
                    prev_gbar[i] = gbar

                for i in range(n):
                    out[kstep, i, 0] = pose[i].th
                    out[kstep, i, 1] = pose[i].x
                    out[kstep, i, 2] = pose[i].y
                    out[kstep, i, 3] = tw[i].w
                    out[kstep, i, 4] = tw[i].vx
                    out[kstep, i, 5] = tw[i].vy
                    out[kstep, i, 6] = uth[i]
                    out[kstep, i, 7] = ux[i]
                if kstep == nsteps:
                    break
                for i in range(n):
                    tw[i].w = tw[i].w + dt * uth[i]
                    tw[i].vx = tw[i].vx + dt * ux[i]
                    pose[i] = compose(pose[i], exp_se2(dt * tw[i].w, dt * tw[i].vx, dt * tw[i].vy))
                    if not (isfinite(pose[i].th) and isfinite(pose[i].x) and isfinite(pose[i].y)
                            and isfinite(tw[i].w) and isfinite(tw[i].vx) and isfinite(tw[i].vy)) \
                            or fabs(pose[i].x) > DIVERGENCE_LIMIT or fabs(pose[i].y) > DIVERGENCE_LIMIT \
                            or fabs(tw[i].w) > DIVERGENCE_LIMIT or fabs(tw[i].vx) > DIVERGENCE_LIMIT:
                        status = 1
                        last = kstep
                if status:
                    break
    finally:
        free(pose)
        free(tw)
        free(uth)
        free(ux)
        free(prev_gbar)
    return out_arr, status, last
