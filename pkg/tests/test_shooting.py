import os

import numpy as np
import pytest

import qshoot as qs
from qshoot import engine
from qshoot.errors import BracketError


CORNELL = qs.Cornell(0.1, 0.5)


def cornell_problem(n_points=20001):
    mesh = qs.default_mesh(CORNELL, 1.0, n_points=n_points)
    return qs.ShootingProblem(CORNELL, l=1, m=1.0, mesh=mesh)


CFG = qs.ShootingConfig(e_min=0.01, e_max=20.0)


class TestBracket:
    def test_contains_first_eigenvalue(self):
        lo, hi = qs.bracket_transition(cornell_problem(8001), CFG, 0)
        assert lo <= 2.15789 <= hi
        assert hi - lo <= CFG.scan_step + 1e-12

    def test_bracket_contract(self):
        problem = cornell_problem(8001)
        n = 1
        lo, hi = qs.bracket_transition(problem, CFG, n)
        g = engine.scalar_coefficient(problem.potential, problem.l, problem.m,
                                      problem.mesh)
        from qshoot.shooting import series_start
        y0, dy0 = series_start(problem.l, problem.mesh.r_min)
        c_lo = engine.count_nodes(engine.propagate_scalar_sampled(
            g, lo, problem.m, problem.mesh, y0, dy0))
        c_hi = engine.count_nodes(engine.propagate_scalar_sampled(
            g, hi, problem.m, problem.mesh, y0, dy0))
        assert c_lo <= n < c_hi

    def test_no_transition_in_window(self):
        with pytest.raises(BracketError):
            qs.bracket_transition(cornell_problem(8001),
                                  qs.ShootingConfig(0.1, 0.2), 20)

    def test_window_above_eigenvalue(self):
        # all levels up to n=0 lie below 3.0: count at e_min already exceeds 0
        with pytest.raises(BracketError):
            qs.bracket_transition(cornell_problem(8001),
                                  qs.ShootingConfig(3.0, 4.0), 0)

    def test_parallel_scan_matches_serial(self):
        problem = cornell_problem(8001)
        serial = qs.bracket_transition(problem, CFG, 2)
        os.environ["QSHOOT_THREADS"] = "4"
        try:
            parallel = qs.bracket_transition(problem, CFG, 2)
        finally:
            del os.environ["QSHOOT_THREADS"]
        assert serial == parallel


class TestSolveEigen:
    def test_cornell_ground_state(self):
        sol = qs.solve_eigen(cornell_problem(), CFG, 0)
        assert sol.energy == pytest.approx(2.15789, rel=5e-4)
        assert sol.n == 0
        assert engine.count_nodes(sol.wavefunction, sol.truncation_index) == 0

    def test_node_counts_match_request(self):
        problem = cornell_problem(8001)
        for n in (0, 1, 2):
            sol = qs.solve_eigen(problem, CFG, n)
            assert engine.count_nodes(sol.wavefunction, sol.truncation_index) == n

    def test_oscillator_spectrum(self):
        # V = r^2/4 with m=1: E = 2n + l + 3/2
        mesh = qs.RadialMesh(1e-5, 30.0, 20001)
        for l in (0, 2):
            problem = qs.ShootingProblem(qs.PowerLaw(0.25, 2.0), l, 1.0, mesh)
            for n in (0, 3):
                sol = qs.solve_eigen(problem, qs.ShootingConfig(0.1, 20.0), n)
                assert sol.energy == pytest.approx(2 * n + l + 1.5, abs=1e-4)

    def test_hydrogen_like_spectrum(self):
        # V = -1/r with m=1: E = -1/(4 (n+l+1)^2)
        mesh = qs.RadialMesh(1e-5, 200.0, 50001)
        cfg = qs.ShootingConfig(-0.3, -0.001, scan_step=0.002)
        for l in (0, 1):
            problem = qs.ShootingProblem(qs.Coulomb(-1.0), l, 1.0, mesh)
            for n in (0, 2):
                sol = qs.solve_eigen(problem, cfg, n)
                assert sol.energy == pytest.approx(-0.25 / (n + l + 1) ** 2,
                                                   abs=1e-5)

    def test_unit_norm_and_tail(self):
        sol = qs.solve_eigen(cornell_problem(), CFG, 1)
        w = sol.wavefunction
        assert abs(engine.integrate_product(w, None, w) - 1.0) < 1e-10
        assert sol.tail_residual == abs(w.values[sol.truncation_index])
        assert sol.tail_residual < 1e-3

    def test_orthogonality_same_l(self):
        problem = cornell_problem()
        sols = [qs.solve_eigen(problem, CFG, n) for n in (0, 1, 2)]
        for i in range(3):
            for j in range(i + 1, 3):
                overlap = engine.integrate_product(sols[i].wavefunction, None,
                                                   sols[j].wavefunction)
                assert abs(overlap) < 1e-5


class TestBisectionCap:
    def test_cap_carries_best_bracket(self):
        from qshoot.errors import ConvergenceError
        cfg = qs.ShootingConfig(0.01, 20.0, bisect_tol=1e-15, max_bisect=3)
        with pytest.raises(ConvergenceError) as err:
            qs.solve_eigen(cornell_problem(4001), cfg, 0)
        lo, hi = err.value.best
        assert lo < 2.158 < hi


class TestStability:
    def test_larger_box_leaves_eigenvalue_fixed(self):
        # grow the domain 25% at fixed step: E moves by less than 10*bisect_tol
        base = qs.default_mesh(CORNELL, 1.0)
        grown = qs.RadialMesh(base.r_min, base.r_min + (base.r_max - base.r_min) * 1.25,
                              int((base.n_points - 1) * 1.25) + 1)
        for n in (0, 1, 2, 20):
            e1 = qs.solve_eigen(qs.ShootingProblem(CORNELL, 1, 1.0, base), CFG, n).energy
            e2 = qs.solve_eigen(qs.ShootingProblem(CORNELL, 1, 1.0, grown), CFG, n).energy
            assert abs(e1 - e2) < 10.0 * CFG.bisect_tol

    def test_mesh_refinement(self):
        e1 = qs.solve_eigen(cornell_problem(20001), CFG, 0).energy
        e2 = qs.solve_eigen(cornell_problem(40001), CFG, 0).energy
        assert abs(e1 - e2) < 1e-5


class TestDefaults:
    def test_default_mesh_confining(self):
        mesh = qs.default_mesh(CORNELL, 1.0)
        assert mesh.r_max == pytest.approx(30.0 / np.sqrt(0.5))
        assert mesh.n_points == 20001

    def test_default_mesh_non_confining(self):
        assert qs.default_mesh(qs.Coulomb(-1.0), 1.0).r_max == 30.0

    def test_config_validation(self):
        with pytest.raises(ValueError):
            qs.ShootingConfig(e_min=2.0, e_max=1.0)
        with pytest.raises(ValueError):
            qs.ShootingConfig(e_min=0.0, e_max=1.0, scan_step=-0.1)
        with pytest.raises(ValueError):
            qs.ShootingProblem(CORNELL, l=1, m=-1.0,
                               mesh=qs.RadialMesh(1e-5, 30.0, 101))
