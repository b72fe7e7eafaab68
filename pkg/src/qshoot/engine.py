"""Radial engine: fixed-step propagation, node counting, tails, quadrature.

The second-order equations are integrated with a classical fourth-order
one-step scheme on a uniform mesh (see the kernel modules); the same
machinery serves the scalar equation

    y'' = [ l(l+1)/r^2 + m (V(r) - E) ] y

and the N-channel system

    U'' = m (V(r) U - E U)

where the matrix potential carries its own centrifugal entries.  Potentials
are sampled once per problem on the half-step grid, so energy scans pay only
for the propagation loop.
"""

from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import DomainError

DIVERGENCE_LIMIT = backend.DIVERGENCE_LIMIT


@dataclass(frozen=True)
class RadialMesh:
    """Uniform grid on [r_min, r_max] with n_points nodes."""

    r_min: float
    r_max: float
    n_points: int

    def __post_init__(self):
        if not (self.r_min > 0.0):
            raise ValueError("r_min must be positive, got %r" % (self.r_min,))
        if not (self.r_max > self.r_min):
            raise ValueError("r_max must exceed r_min")
        if self.n_points < 16:
            raise ValueError("n_points must be at least 16, got %d" % self.n_points)

    @property
    def h(self):
        return (self.r_max - self.r_min) / (self.n_points - 1)

    def points(self):
        """Mesh nodes r_i."""
        return np.linspace(self.r_min, self.r_max, self.n_points)

    def fine_points(self):
        """Nodes plus step midpoints (2*n_points - 1 values, spacing h/2)."""
        return np.linspace(self.r_min, self.r_max, 2 * self.n_points - 1)


class RadialFunction:
    """A real function sampled on a RadialMesh.

    divergence_index marks where propagation was clamped (None if the
    trajectory stayed within bounds); values beyond it are held constant.
    """

    def __init__(self, mesh, values, divergence_index=None):
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (mesh.n_points,):
            raise ValueError("expected %d values, got shape %r"
                             % (mesh.n_points, values.shape))
        if not np.isfinite(values).all():
            raise ValueError("radial function values must be finite")
        self.mesh = mesh
        self.values = values
        self.divergence_index = divergence_index

    def last_valid_index(self):
        return self.divergence_index if self.divergence_index is not None \
            else self.mesh.n_points - 1


class ChannelTrajectory:
    """N linearly independent coupled solutions: one N x N matrix per node."""

    def __init__(self, mesh, matrices, divergence_index=None):
        matrices = np.asarray(matrices, dtype=np.float64)
        if matrices.ndim != 3 or matrices.shape[0] != mesh.n_points \
                or matrices.shape[1] != matrices.shape[2]:
            raise ValueError("expected (n_points, N, N) matrices, got %r"
                             % (matrices.shape,))
        if matrices.shape[1] < 1:
            raise ValueError("need at least one channel")
        self.mesh = mesh
        self.matrices = matrices
        self.n_channels = matrices.shape[1]
        self.divergence_index = divergence_index

    def last_valid_index(self):
        return self.divergence_index if self.divergence_index is not None \
            else self.mesh.n_points - 1


def mesh_integral(values, h):
    """Composite Simpson on the uniform mesh; trapezoid when the point count is even."""
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[0]
    if n < 2:
        raise ValueError("need at least two samples")
    if n % 2 == 1:
        s = values[0] + values[-1] + 4.0 * values[1:-1:2].sum() + 2.0 * values[2:-1:2].sum()
        return float(s * h / 3.0)
    return float((values[0] + values[-1]) * 0.5 * h + values[1:-1].sum() * h)


def _eval_scalar_many(potential, r):
    if hasattr(potential, "eval_many"):
        vals = potential.eval_many(r)
    else:
        vals = np.array([float(potential(float(x))) for x in r])
    vals = np.asarray(vals, dtype=np.float64)
    if not np.isfinite(vals).all():
        raise DomainError("potential produced non-finite values on the mesh")
    return vals


def _eval_matrix_many(potential, r):
    if hasattr(potential, "eval_many"):
        mats = np.asarray(potential.eval_many(r), dtype=np.float64)
    else:
        mats = np.array([np.asarray(potential(float(x)), dtype=np.float64) for x in r])
    if mats.ndim != 3 or mats.shape[0] != len(r) or mats.shape[1] != mats.shape[2]:
        raise ValueError("matrix potential must evaluate to (N, N) per point")
    if not np.isfinite(mats).all():
        raise DomainError("matrix potential produced non-finite values on the mesh")
    return mats


def scalar_coefficient(potential, l, m, mesh):
    """Sample g(r) = l(l+1)/r^2 + m V(r) on the fine grid (energy-independent)."""
    rf = mesh.fine_points()
    v = _eval_scalar_many(potential, rf)
    ll = float(l * (l + 1))
    return ll / (rf * rf) + m * v


def matrix_coefficient(potential, m, mesh):
    """Sample G(r) = m V(r) on the fine grid; centrifugal terms live inside V."""
    rf = mesh.fine_points()
    return np.ascontiguousarray(m * _eval_matrix_many(potential, rf))


def propagate_scalar_sampled(g_fine, energy, m, mesh, y0, dy0,
                             limit=DIVERGENCE_LIMIT):
    """Hot path: propagate for one energy from a pre-sampled coefficient."""
    y = np.empty(mesh.n_points)
    div = backend.propagate_scalar(np.ascontiguousarray(g_fine), m * energy,
                                   mesh.h, y0, dy0, y, limit)
    return RadialFunction(mesh, y, None if div < 0 else int(div))


def propagate_radial(potential, energy, l, m, mesh, y0, dy0):
    """Integrate the scalar equation outward from (y0, dy0) at r_min."""
    if m <= 0.0:
        raise ValueError("mass must be positive")
    if l < 0:
        raise ValueError("angular momentum must be non-negative")
    g = scalar_coefficient(potential, l, m, mesh)
    return propagate_scalar_sampled(g, energy, m, mesh, y0, dy0)


def _sanitize_det(det, limit):
    # Determinants of clamped trajectories can overflow for N >= 3; keep the
    # sign information that node counting needs and drop the rest.
    bad = ~np.isfinite(det)
    if bad.any():
        det[bad & (det == np.inf)] = limit
        det[bad & (det == -np.inf)] = -limit
        det[~np.isfinite(det)] = 0.0


def propagate_coupled_sampled(g_fine, energy, m, mesh, u0, du0,
                              store_traj=True, limit=DIVERGENCE_LIMIT):
    """Propagate all channels for one energy from a pre-sampled coefficient.

    Returns (trajectory or None, determinant RadialFunction).  N = 1 runs
    through the scalar kernel, so it reproduces propagate_radial exactly.
    """
    n = mesh.n_points
    n_ch = g_fine.shape[1]
    u0 = np.ascontiguousarray(u0, dtype=np.float64)
    du0 = np.ascontiguousarray(du0, dtype=np.float64)
    if u0.shape != (n_ch, n_ch) or du0.shape != (n_ch, n_ch):
        raise ValueError("initial matrices must be (N, N)")
    det = np.empty(n)
    if n_ch == 1:
        y = np.empty(n)
        div = backend.propagate_scalar(np.ascontiguousarray(g_fine[:, 0, 0]),
                                       m * energy, mesh.h,
                                       float(u0[0, 0]), float(du0[0, 0]), y, limit)
        det[:] = y
        traj_arr = y.reshape(n, 1, 1).copy() if store_traj else None
    else:
        traj_arr = np.empty((n, n_ch, n_ch)) if store_traj else np.empty((1, n_ch, n_ch))
        div = backend.propagate_coupled(np.ascontiguousarray(g_fine), m * energy,
                                        mesh.h, u0, du0, traj_arr, det,
                                        store_traj, limit)
        if not store_traj:
            traj_arr = None
    _sanitize_det(det, limit)
    div = None if div < 0 else int(div)
    traj = ChannelTrajectory(mesh, traj_arr, div) if traj_arr is not None else None
    return traj, RadialFunction(mesh, det, div)


def propagate_coupled(potential, energy, m, mesh, u0=None, du0=None):
    """Integrate the N-channel system; columns are independent solutions.

    Default initial data are U(r_min) = r_min * I, U'(r_min) = I.
    """
    if m <= 0.0:
        raise ValueError("mass must be positive")
    g = matrix_coefficient(potential, m, mesh)
    n_ch = g.shape[1]
    if u0 is None:
        u0 = mesh.r_min * np.eye(n_ch)
    if du0 is None:
        du0 = np.eye(n_ch)
    traj, _ = propagate_coupled_sampled(g, energy, m, mesh, u0, du0)
    return traj


def det_along(trajectory):
    """Determinant of U(r) at each mesh point, as a RadialFunction."""
    det = np.empty(trajectory.mesh.n_points)
    backend.det_along_raw(np.ascontiguousarray(trajectory.matrices), det)
    _sanitize_det(det, DIVERGENCE_LIMIT)
    return RadialFunction(trajectory.mesh, det, trajectory.divergence_index)


def count_nodes(f, i_stop=None):
    """Strict sign changes among the nonzero samples of f.values[:i_stop+1].

    Samples that are exactly zero are skipped (a zero is one node, not two).
    i_stop defaults to the divergence index when the function has one.
    """
    n = f.mesh.n_points
    if i_stop is None:
        i_stop = f.last_valid_index()
    if not (0 < i_stop < n):
        raise ValueError("i_stop must lie in (0, n_points)")
    s = np.sign(f.values[:i_stop + 1])
    s = s[s != 0.0]
    if s.shape[0] < 2:
        return 0
    return int(np.count_nonzero(s[1:] != s[:-1]))


def find_truncation_index(f, i_start=None):
    """Index of the tail minimum of |y|: the point after which |y| grows
    monotonically toward the divergence index (or the mesh end).

    Found by walking backward from the divergence point while |y| keeps
    decreasing; for a strictly decaying tail this is the last mesh point.
    i_start, when given, bounds the search from below (e.g. the outermost
    classical turning point).
    """
    vals = np.abs(f.values)
    if not vals.any():
        raise ValueError("function is identically zero")
    j = f.last_valid_index()
    lo = 0 if i_start is None else int(i_start)
    while j > lo and vals[j - 1] < vals[j]:
        j -= 1
    return j


def normalize(f, i_trunc=None):
    """Zero the tail beyond i_trunc and rescale so the squared integral is 1."""
    if i_trunc is None:
        i_trunc = find_truncation_index(f)
    vals = f.values.copy()
    vals[i_trunc + 1:] = 0.0
    nrm2 = mesh_integral(vals * vals, f.mesh.h)
    if nrm2 <= 0.0:
        raise ValueError("cannot normalize a zero-norm function")
    return RadialFunction(f.mesh, vals / np.sqrt(nrm2))


def integrate_product(f, w, g):
    """Quadrature of f(r) * w(r) * g(r) over the mesh; w=None means weight 1."""
    if f.mesh != g.mesh:
        raise ValueError("functions live on different meshes")
    prod = f.values * g.values
    if w is not None:
        prod = prod * _eval_scalar_many(w, f.mesh.points())
    return mesh_integral(prod, f.mesh.h)
