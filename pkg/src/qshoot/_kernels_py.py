"""Pure-Python propagation kernels (fallback twin of the compiled module).

Both kernel backends integrate linear second-order systems with the classical
fourth-order one-step method on the (value, derivative) reformulation.  For a
linear right-hand side y'' = f(r) y the four-stage update collapses to an
exact per-step 2x2 map

    y_{i+1} = a*y_i + b*v_i        a = 1 + (h^2/6)(fL + 2 fM) + (h^4/24) fL fM
    v_{i+1} = c*y_i + d*v_i        b = h + (h^3/6) fM
                                   c = (h/6)(fL + 4 fM + fR) + (h^3/12) fM (fL + fR)
                                   d = 1 + (h^2/6)(2 fM + fR) + (h^4/24) fR fM

with fL, fM, fR the coefficient sampled at the left node, the midpoint and the
right node of the step.  The matrix case keeps the four-stage form with the
same sample points.  Expression order is kept identical between the two
backends so results agree to the last bits.

Coefficient arrays are sampled on the half-step ("fine") grid: index 2i is
mesh node i, index 2i+1 the midpoint of step i.
"""

import numpy as np

BACKEND = "python"

#: |y| (or any matrix entry) beyond this marks the divergence index.
DIVERGENCE_LIMIT = 1e150


def _clamp(x, prev, limit):
    if x != x:  # NaN
        return prev
    if x > limit:
        return limit
    if x < -limit:
        return -limit
    return x


def propagate_scalar(g_fine, m_energy, h, y0, dy0, y_out, limit=DIVERGENCE_LIMIT):
    """Propagate y'' = (g(r) - m*E) y across the mesh.

    g_fine holds l(l+1)/r^2 + m*V(r) on the fine grid (2*n_points - 1 values).
    Fills y_out (length n_points) and returns the divergence index, or -1 if
    the trajectory stayed within bounds.  Values beyond the divergence index
    are held at the clamped divergence value.
    """
    n = y_out.shape[0]
    f = np.asarray(g_fine, dtype=np.float64) - m_energy
    fl = f[0:-2:2]
    fm = f[1::2]
    fr = f[2::2]
    h2 = h * h
    ca = 1.0 + (h2 / 6.0) * (fl + 2.0 * fm) + ((h2 * h2) / 24.0) * (fl * fm)
    cb = h + ((h2 * h) / 6.0) * fm
    cc = (h / 6.0) * (fl + 4.0 * fm + fr) + ((h2 * h) / 12.0) * (fm * (fl + fr))
    cd = 1.0 + (h2 / 6.0) * (2.0 * fm + fr) + ((h2 * h2) / 24.0) * (fr * fm)
    a = ca.tolist()
    b = cb.tolist()
    c = cc.tolist()
    d = cd.tolist()

    ys = [0.0] * n
    y = float(y0)
    v = float(dy0)
    ys[0] = y
    div = -1
    for i in range(n - 1):
        y, v = a[i] * y + b[i] * v, c[i] * y + d[i] * v
        if not (abs(y) <= limit and abs(v) <= limit):
            div = i + 1
            yc = _clamp(y, ys[i], limit)
            for j in range(i + 1, n):
                ys[j] = yc
            break
        ys[i + 1] = y
    y_out[:] = ys
    return div


def _det_closed(traj):
    """Determinant per mesh point; closed form up to 3x3, LAPACK beyond."""
    n_ch = traj.shape[1]
    if n_ch == 1:
        return traj[:, 0, 0].copy()
    if n_ch == 2:
        return traj[:, 0, 0] * traj[:, 1, 1] - traj[:, 0, 1] * traj[:, 1, 0]
    if n_ch == 3:
        a, b, c = traj[:, 0, 0], traj[:, 0, 1], traj[:, 0, 2]
        d, e, f = traj[:, 1, 0], traj[:, 1, 1], traj[:, 1, 2]
        g, hh, i = traj[:, 2, 0], traj[:, 2, 1], traj[:, 2, 2]
        return a * (e * i - f * hh) - b * (d * i - f * g) + c * (d * hh - e * g)
    with np.errstate(all="ignore"):
        return np.linalg.det(traj)


def det_along_raw(traj, det_out):
    """Fill det_out with det U(r_i); may contain non-finite entries on blow-up."""
    det_out[:] = _det_closed(np.asarray(traj))


def propagate_coupled(g_fine, m_energy, h, u0, du0, traj_out, det_out,
                      store_traj=True, limit=DIVERGENCE_LIMIT):
    """Propagate U'' = (G(r) - m*E) U column-wise; G holds m*V(r) matrices.

    g_fine has shape (2*n_points - 1, N, N).  Fills det_out with det U(r_i)
    (and traj_out with U(r_i) when store_traj) and returns the divergence
    index or -1.  Entries beyond the divergence index are held constant.
    """
    n = det_out.shape[0]
    n_ch = g_fine.shape[1]
    eye = np.eye(n_ch)
    with np.errstate(all="ignore"):
        ml = g_fine[0:-2:2] - m_energy * eye
        mm = g_fine[1::2] - m_energy * eye
        mr = g_fine[2::2] - m_energy * eye
        p = mm @ ml
        q = mr @ mm
        h2 = h * h
        h3 = h2 * h
        h4 = h2 * h2
        step = np.empty((n - 1, 2 * n_ch, 2 * n_ch))
        step[:, :n_ch, :n_ch] = eye + (h2 / 6.0) * (ml + 2.0 * mm) + (h4 / 24.0) * p
        step[:, :n_ch, n_ch:] = h * eye + (h3 / 6.0) * mm
        step[:, n_ch:, :n_ch] = (h / 6.0) * (ml + 4.0 * mm + mr) + (h3 / 12.0) * (p + q)
        step[:, n_ch:, n_ch:] = eye + (h2 / 6.0) * (2.0 * mm + mr) + (h4 / 24.0) * q

        traj = np.empty((n, n_ch, n_ch))
        z = np.empty((2 * n_ch, n_ch))
        z[:n_ch] = u0
        z[n_ch:] = du0
        traj[0] = z[:n_ch]
        div = -1
        for i in range(n - 1):
            z = step[i] @ z
            if not np.all(np.abs(z) <= limit):
                div = i + 1
                u = z[:n_ch]
                clamped = np.where(np.isnan(u), traj[i], np.clip(u, -limit, limit))
                traj[i + 1:] = clamped
                break
            traj[i + 1] = z[:n_ch]
        det_along_raw(traj, det_out)
        if div >= 0:
            det_out[div:] = det_out[div]
    if store_traj:
        traj_out[:] = traj
    return div
