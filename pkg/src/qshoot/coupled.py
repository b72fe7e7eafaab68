"""N-channel eigenvalue search via node counting on det U(r).

The nodal theorem extends to coupled systems: with U(r) built from N
linearly independent solutions (columns), the number of nodes of det U(r)
equals the radial excitation number.  The search machinery is the scalar
one, driven by the determinant's node count; the physical solution is the
column combination that stays bounded, extracted as the direction that
minimizes |U(r_match) c| at the tail matching point.
"""

from dataclasses import dataclass

import numpy as np

from . import engine
from .errors import ConvergenceError
from .shooting import _bisect_transition, _scan_for_transition


@dataclass(frozen=True)
class CoupledProblem:
    potential: object
    l: int
    m: float
    mesh: engine.RadialMesh

    def __post_init__(self):
        if self.m <= 0.0:
            raise ValueError("mass must be positive")

    @property
    def n_channels(self):
        n = getattr(self.potential, "n_channels", None)
        if n is None:
            n = np.asarray(self.potential(self.mesh.r_min)).shape[0]
        return int(n)


class CoupledSolution:
    """A converged coupled bound state.

    components are the N channel wavefunctions of the physical combination,
    jointly normalized: sum_j integral(u_j^2) = 1.  mixing is the unit vector
    of column weights that combination used.
    """

    def __init__(self, n, l, energy, components, mixing, truncation_index,
                 tail_residual, bisections):
        self.n = n
        self.l = l
        self.energy = energy
        self.components = components
        self.mixing = mixing
        self.truncation_index = truncation_index
        self.tail_residual = tail_residual
        self.bisections = bisections


def series_initial_data(potential, m, mesh):
    """Regular-solution initial columns at r_min.

    Near the origin the system is governed by the indicial matrix
    A = lim r^2 m V(r); each eigenpair (lambda, w) of A admits a regular
    solution w r^alpha with alpha = (1 + sqrt(1 + 4 lambda))/2.  Seeding the
    columns with these directions keeps the bounded (inadmissible-free)
    solution subspace, which the det-node theorem requires.  For potentials
    without a centrifugal 1/r^2 core this reduces to U0 = r_min I, dU0 = I.
    """
    r0 = mesh.r_min
    a = m * np.asarray(potential(r0), dtype=np.float64) * r0 * r0
    lam, w = np.linalg.eigh(0.5 * (a + a.T))
    alpha = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * np.maximum(lam, -0.25)))
    u0 = w * r0 ** alpha
    du0 = w * (alpha * r0 ** (alpha - 1.0))
    return u0, du0


def _smallest_direction_2x2(u):
    # right singular direction of the smaller singular value, closed form
    p = u[0, 0] * u[0, 0] + u[1, 0] * u[1, 0]
    q = u[0, 0] * u[0, 1] + u[1, 0] * u[1, 1]
    s = u[0, 1] * u[0, 1] + u[1, 1] * u[1, 1]
    lam = 0.5 * ((p + s) - np.sqrt((p - s) ** 2 + 4.0 * q * q))
    v1 = np.array([q, lam - p])
    v2 = np.array([lam - s, q])
    v = v1 if np.dot(v1, v1) >= np.dot(v2, v2) else v2
    nrm = np.sqrt(np.dot(v, v))
    if nrm == 0.0:
        # isotropic singular values: any direction is minimal
        return np.array([1.0, 0.0])
    return v / nrm


def extract_combination(trajectory, i_match):
    """Unit column-weight vector minimizing |U(r_match) c|.

    This is the right singular direction of the smallest singular value of
    U(i_match); its sign is fixed so the largest-magnitude entry is positive.
    """
    u = np.asarray(trajectory.matrices[i_match], dtype=np.float64)
    if not u.any():
        raise ValueError("U(r_match) is identically zero")
    if u.shape[0] == 2:
        c = _smallest_direction_2x2(u)
    else:
        _, _, vt = np.linalg.svd(u)
        c = vt[-1]
    if c[np.argmax(np.abs(c))] < 0.0:
        c = -c
    return c


def solve_coupled(problem, cfg, n):
    """Find the n-th coupled bound state via det-node counting."""
    mesh = problem.mesh
    g = engine.matrix_coefficient(problem.potential, problem.m, mesh)
    n_ch = g.shape[1]
    u0, du0 = series_initial_data(problem.potential, problem.m, mesh)

    def count_at(energy):
        _, det = engine.propagate_coupled_sampled(g, energy, problem.m, mesh,
                                                  u0, du0, store_traj=False)
        return engine.count_nodes(det)

    lo, hi = _scan_for_transition(count_at, cfg, n)
    lo, hi, iterations = _bisect_transition(count_at, lo, hi, n, cfg)
    energy = 0.5 * (lo + hi)

    traj, det = engine.propagate_coupled_sampled(g, lo, problem.m, mesh,
                                                 u0, du0, store_traj=True)
    if engine.count_nodes(det) != n:
        raise ConvergenceError(
            "det trajectory at converged energy has %d nodes, wanted %d"
            % (engine.count_nodes(det), n), best=(lo, hi))
    i_trunc = engine.find_truncation_index(det)
    mixing = extract_combination(traj, i_trunc)

    u = traj.matrices @ mixing  # (n_points, N) physical combination
    u[i_trunc + 1:] = 0.0
    norm2 = sum(engine.mesh_integral(u[:, j] * u[:, j], mesh.h)
                for j in range(n_ch))
    if norm2 <= 0.0:
        raise ValueError("physical combination has zero norm")
    u /= np.sqrt(norm2)
    components = [engine.RadialFunction(mesh, np.ascontiguousarray(u[:, j]))
                  for j in range(n_ch)]
    tail = float(np.sqrt(np.sum(u[i_trunc] ** 2)))
    return CoupledSolution(n, problem.l, energy, components, mixing, i_trunc,
                           tail, iterations)
