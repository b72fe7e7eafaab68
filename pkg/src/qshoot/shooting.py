"""Single-channel eigenvalue search by shooting.

The node count of the outward-propagated trajectory is a non-decreasing step
function of the trial energy: it equals the number of eigenvalues below E.
The search walks E upward until the count jumps past the requested n, then
bisects that bracket down to tolerance.  Only the node-count transition is
used for the search; the tail residual is reported as a quality diagnostic.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import engine
from .errors import BracketError, ConvergenceError
from .potentials import Cornell


@dataclass(frozen=True)
class ShootingProblem:
    potential: object
    l: int
    m: float
    mesh: engine.RadialMesh

    def __post_init__(self):
        if self.m <= 0.0:
            raise ValueError("mass must be positive")
        if self.l < 0:
            raise ValueError("angular momentum must be non-negative")


@dataclass(frozen=True)
class ShootingConfig:
    e_min: float
    e_max: float
    scan_step: float = 0.05
    bisect_tol: float = 1e-9
    max_bisect: int = 200

    def __post_init__(self):
        if not self.e_min < self.e_max:
            raise ValueError("e_min must be below e_max")
        if self.scan_step <= 0.0:
            raise ValueError("scan_step must be positive")
        if self.bisect_tol <= 0.0:
            raise ValueError("bisect_tol must be positive")


class EigenSolution:
    """A converged bound state: eigenvalue plus normalized wavefunction."""

    def __init__(self, n, l, energy, wavefunction, truncation_index,
                 tail_residual, bisections):
        self.n = n
        self.l = l
        self.energy = energy
        self.wavefunction = wavefunction
        self.truncation_index = truncation_index
        self.tail_residual = tail_residual
        self.bisections = bisections


def default_mesh(potential, m, r_min=1e-5, n_points=20001):
    """Default grid: [1e-5, 30/sqrt(k/m)] for a confining Cornell, else [1e-5, 30]."""
    if isinstance(potential, Cornell) and potential.k > 0.0:
        r_max = 30.0 / np.sqrt(potential.k / m)
    else:
        r_max = 30.0
    return engine.RadialMesh(r_min, r_max, n_points)


def series_start(l, r_min):
    """Regular-solution initial data y ~ r^(l+1) at the inner mesh edge."""
    return r_min ** (l + 1), (l + 1) * r_min ** l


def _scan_energies(cfg):
    n_steps = int(np.ceil((cfg.e_max - cfg.e_min) / cfg.scan_step))
    es = [cfg.e_min + i * cfg.scan_step for i in range(n_steps + 1)]
    es[-1] = min(es[-1], cfg.e_max)
    if es[-1] < cfg.e_max:
        es.append(cfg.e_max)
    return es


def _thread_count():
    try:
        return max(1, int(os.environ.get("QSHOOT_THREADS", "1")))
    except ValueError:
        return 1


def _scan_for_transition(count_at, cfg, n):
    """First (E_lo, E_hi) probe pair where the count crosses from <= n to >= n+1.

    Probes are evaluated in chunks (QSHOOT_THREADS wide); the reported bracket
    is always the lowest transition, independent of scheduling.
    """
    energies = _scan_energies(cfg)
    threads = _thread_count()
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        prev_e = None
        prev_count = None
        for start in range(0, len(energies), max(threads, 1)):
            chunk = energies[start:start + max(threads, 1)]
            if pool is not None:
                counts = list(pool.map(count_at, chunk))
            else:
                counts = [count_at(e) for e in chunk]
            for e, c in zip(chunk, counts):
                if prev_count is None:
                    if c > n:
                        raise BracketError(
                            "node count already %d at E_min=%g; eigenvalue %d "
                            "lies below the scan window" % (c, cfg.e_min, n))
                elif prev_count <= n < c:
                    return prev_e, e
                prev_e, prev_count = e, c
    finally:
        if pool is not None:
            pool.shutdown(wait=False)
    raise BracketError("eigenvalue not bracketed: no node-count transition "
                       "past n=%d in [%g, %g]" % (n, cfg.e_min, cfg.e_max))


def _bisect_transition(count_at, lo, hi, n, cfg):
    """Shrink [lo, hi] around the count transition to bisect_tol."""
    iterations = 0
    while hi - lo > cfg.bisect_tol:
        if iterations >= cfg.max_bisect:
            raise ConvergenceError(
                "bisection cap %d reached; best bracket [%.12g, %.12g]"
                % (cfg.max_bisect, lo, hi), best=(lo, hi))
        mid = 0.5 * (lo + hi)
        if count_at(mid) >= n + 1:
            hi = mid
        else:
            lo = mid
        iterations += 1
    return lo, hi, iterations


def _scalar_counter(problem):
    g = engine.scalar_coefficient(problem.potential, problem.l, problem.m,
                                  problem.mesh)
    y0, dy0 = series_start(problem.l, problem.mesh.r_min)

    def count_at(energy):
        f = engine.propagate_scalar_sampled(g, energy, problem.m, problem.mesh,
                                            y0, dy0)
        return engine.count_nodes(f)

    def propagate(energy):
        return engine.propagate_scalar_sampled(g, energy, problem.m,
                                               problem.mesh, y0, dy0)

    return count_at, propagate


def bracket_transition(problem, cfg, n):
    """Scan [e_min, e_max] for the bracket where the node count jumps past n."""
    count_at, _ = _scalar_counter(problem)
    return _scan_for_transition(count_at, cfg, n)


def solve_eigen(problem, cfg, n):
    """Find the n-node bound state: bracket, bisect, truncate, normalize."""
    count_at, propagate = _scalar_counter(problem)
    lo, hi = _scan_for_transition(count_at, cfg, n)
    lo, hi, iterations = _bisect_transition(count_at, lo, hi, n, cfg)
    energy = 0.5 * (lo + hi)
    f = propagate(lo)  # the <= n side of the transition carries exactly n nodes
    if engine.count_nodes(f) != n:
        raise ConvergenceError(
            "trajectory at converged energy has %d nodes, wanted %d"
            % (engine.count_nodes(f), n), best=(lo, hi))
    i_trunc = engine.find_truncation_index(f)
    wavefunction = engine.normalize(f, i_trunc)
    tail = float(abs(wavefunction.values[i_trunc]))
    return EigenSolution(n, problem.l, energy, wavefunction, i_trunc, tail,
                         iterations)
