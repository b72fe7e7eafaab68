# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled propagation kernels (hot loops of the eigenvalue search).

Twin of _kernels_py: classical fourth-order one-step integration of the
(value, derivative) reformulation, collapsed to the exact per-step linear map
for the scalar case and kept in four-stage form for the matrix case.  The
scalar expressions mirror the pure-Python backend token for token so both
backends produce identical trajectories (the extension is built with
-ffp-contract=off for this reason).
"""

import numpy as np

from libc.math cimport fabs

BACKEND = "compiled"

DIVERGENCE_LIMIT = 1e150


cdef inline double _clamp(double x, double prev, double limit) noexcept nogil:
    if x != x:  # NaN
        return prev
    if x > limit:
        return limit
    if x < -limit:
        return -limit
    return x


def propagate_scalar(double[::1] g_fine, double m_energy, double h,
                     double y0, double dy0, double[::1] y_out,
                     double limit=DIVERGENCE_LIMIT):
    """Propagate y'' = (g(r) - m*E) y; fill y_out, return divergence index or -1."""
    cdef Py_ssize_t n = y_out.shape[0]
    cdef Py_ssize_t i, j
    cdef double me = m_energy
    cdef double h2 = h * h
    cdef double fl, fm, fr, a, b, c, d
    cdef double y = y0
    cdef double v = dy0
    cdef double yn, vn, yc
    cdef Py_ssize_t div = -1
    with nogil:
        y_out[0] = y
        for i in range(n - 1):
            fl = g_fine[2 * i] - me
            fm = g_fine[2 * i + 1] - me
            fr = g_fine[2 * i + 2] - me
            a = 1.0 + (h2 / 6.0) * (fl + 2.0 * fm) + ((h2 * h2) / 24.0) * (fl * fm)
            b = h + ((h2 * h) / 6.0) * fm
            c = (h / 6.0) * (fl + 4.0 * fm + fr) + ((h2 * h) / 12.0) * (fm * (fl + fr))
            d = 1.0 + (h2 / 6.0) * (2.0 * fm + fr) + ((h2 * h2) / 24.0) * (fr * fm)
            yn = a * y + b * v
            vn = c * y + d * v
            y = yn
            v = vn
            if not (fabs(y) <= limit and fabs(v) <= limit):
                div = i + 1
                yc = _clamp(y, y_out[i], limit)
                for j in range(i + 1, n):
                    y_out[j] = yc
                break
            y_out[i + 1] = y
    return div


cdef inline void _mat_apply(double[:, :, ::1] g, Py_ssize_t idx, double me,
                            double[:, ::1] x, double[:, ::1] out,
                            Py_ssize_t nc) noexcept nogil:
    # out = (g[idx] - me*I) @ x
    cdef Py_ssize_t a, b, k
    cdef double s
    for a in range(nc):
        for b in range(nc):
            s = 0.0
            for k in range(nc):
                s = s + g[idx, a, k] * x[k, b]
            out[a, b] = s - me * x[a, b]


cdef double _det_small(double[:, ::1] u, double[:, ::1] scratch,
                       Py_ssize_t nc) noexcept nogil:
    cdef Py_ssize_t i, j, k, piv
    cdef double best, factor, det
    if nc == 1:
        return u[0, 0]
    if nc == 2:
        return u[0, 0] * u[1, 1] - u[0, 1] * u[1, 0]
    if nc == 3:
        return (u[0, 0] * (u[1, 1] * u[2, 2] - u[1, 2] * u[2, 1])
                - u[0, 1] * (u[1, 0] * u[2, 2] - u[1, 2] * u[2, 0])
                + u[0, 2] * (u[1, 0] * u[2, 1] - u[1, 1] * u[2, 0]))
    # partial-pivot elimination on a copy
    for i in range(nc):
        for j in range(nc):
            scratch[i, j] = u[i, j]
    det = 1.0
    for k in range(nc):
        piv = k
        best = fabs(scratch[k, k])
        for i in range(k + 1, nc):
            if fabs(scratch[i, k]) > best:
                best = fabs(scratch[i, k])
                piv = i
        if best == 0.0:
            return 0.0
        if piv != k:
            det = -det
            for j in range(nc):
                factor = scratch[k, j]
                scratch[k, j] = scratch[piv, j]
                scratch[piv, j] = factor
        det = det * scratch[k, k]
        for i in range(k + 1, nc):
            factor = scratch[i, k] / scratch[k, k]
            for j in range(k + 1, nc):
                scratch[i, j] = scratch[i, j] - factor * scratch[k, j]
    return det


def det_along_raw(double[:, :, ::1] traj, double[::1] det_out):
    """Fill det_out with det U(r_i); entries may be non-finite on blow-up."""
    cdef Py_ssize_t n = traj.shape[0]
    cdef Py_ssize_t nc = traj.shape[1]
    cdef Py_ssize_t i
    scratch_arr = np.empty((nc, nc))
    cdef double[:, ::1] scratch = scratch_arr
    with nogil:
        for i in range(n):
            det_out[i] = _det_small(traj[i], scratch, nc)


def propagate_coupled(double[:, :, ::1] g_fine, double m_energy, double h,
                      double[:, ::1] u0, double[:, ::1] du0,
                      double[:, :, ::1] traj_out, double[::1] det_out,
                      bint store_traj=True, double limit=DIVERGENCE_LIMIT):
    """Propagate U'' = (G(r) - m*E) U; fill det_out (+ traj_out), return div index."""
    cdef Py_ssize_t n = det_out.shape[0]
    cdef Py_ssize_t nc = g_fine.shape[1]
    cdef Py_ssize_t i, a, b, j
    cdef double me = m_energy
    cdef double h2 = h * h
    cdef double dv
    cdef bint bad
    cdef Py_ssize_t div = -1

    scratch_arr = np.empty((9, nc, nc))
    cdef double[:, ::1] u = scratch_arr[0]
    cdef double[:, ::1] w = scratch_arr[1]
    cdef double[:, ::1] kw1 = scratch_arr[2]
    cdef double[:, ::1] kw2 = scratch_arr[3]
    cdef double[:, ::1] kw3 = scratch_arr[4]
    cdef double[:, ::1] kw4 = scratch_arr[5]
    cdef double[:, ::1] t = scratch_arr[6]
    cdef double[:, ::1] uprev = scratch_arr[7]
    cdef double[:, ::1] dscratch = scratch_arr[8]

    with nogil:
        for a in range(nc):
            for b in range(nc):
                u[a, b] = u0[a, b]
                w[a, b] = du0[a, b]
        if store_traj:
            for a in range(nc):
                for b in range(nc):
                    traj_out[0, a, b] = u[a, b]
        det_out[0] = _det_small(u, dscratch, nc)
        for i in range(n - 1):
            for a in range(nc):
                for b in range(nc):
                    uprev[a, b] = u[a, b]
            _mat_apply(g_fine, 2 * i, me, u, kw1, nc)
            for a in range(nc):
                for b in range(nc):
                    t[a, b] = u[a, b] + 0.5 * h * w[a, b]
            _mat_apply(g_fine, 2 * i + 1, me, t, kw2, nc)
            for a in range(nc):
                for b in range(nc):
                    t[a, b] = u[a, b] + 0.5 * h * w[a, b] + 0.25 * h2 * kw1[a, b]
            _mat_apply(g_fine, 2 * i + 1, me, t, kw3, nc)
            for a in range(nc):
                for b in range(nc):
                    t[a, b] = u[a, b] + h * w[a, b] + 0.5 * h2 * kw2[a, b]
            _mat_apply(g_fine, 2 * i + 2, me, t, kw4, nc)
            bad = 0
            for a in range(nc):
                for b in range(nc):
                    u[a, b] = u[a, b] + h * w[a, b] + (h2 / 6.0) * (kw1[a, b] + kw2[a, b] + kw3[a, b])
                    w[a, b] = w[a, b] + (h / 6.0) * (kw1[a, b] + 2.0 * kw2[a, b] + 2.0 * kw3[a, b] + kw4[a, b])
            for a in range(nc):
                for b in range(nc):
                    if not (fabs(u[a, b]) <= limit and fabs(w[a, b]) <= limit):
                        bad = 1
            if bad:
                div = i + 1
                for a in range(nc):
                    for b in range(nc):
                        u[a, b] = _clamp(u[a, b], uprev[a, b], limit)
                dv = _det_small(u, dscratch, nc)
                for j in range(i + 1, n):
                    det_out[j] = dv
                    if store_traj:
                        for a in range(nc):
                            for b in range(nc):
                                traj_out[j, a, b] = u[a, b]
                break
            if store_traj:
                for a in range(nc):
                    for b in range(nc):
                        traj_out[i + 1, a, b] = u[a, b]
            det_out[i + 1] = _det_small(u, dscratch, nc)
    return div
