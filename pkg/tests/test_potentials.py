import numpy as np
import pytest

import qshoot as qs
from qshoot.errors import DomainError, RangeError
from qshoot.potentials import eval_matrix, eval_scalar, eval_tabulated


class TestScalarEval:
    def test_cornell_values(self):
        assert eval_scalar(qs.Cornell(0.0, 1.0), 2.0) == pytest.approx(2.0)
        assert eval_scalar(qs.Cornell(0.1, 0.5), 1.0) == pytest.approx(0.6)

    def test_log_channel(self):
        assert eval_scalar(qs.LogChannel(2.0, 0.1), 1.0) == pytest.approx(np.log(2.1))

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            eval_scalar(qs.Cornell(0.1, 0.5), 0.0)
        with pytest.raises(DomainError):
            eval_scalar(qs.Cornell(0.1, 0.5), -1.0)
        with pytest.raises(DomainError):
            eval_scalar(qs.LogChannel(-5.0, 0.1), 1.0)

    def test_non_finite_params_rejected(self):
        with pytest.raises(ValueError):
            qs.Cornell(0.1, float("inf"))
        with pytest.raises(ValueError):
            qs.ScaledPotential(float("nan"), qs.Cornell(0.1, 0.5))

    def test_eval_many_matches_pointwise(self, rng):
        pot = qs.Cornell(0.1, 0.5)
        r = rng.uniform(0.01, 30.0, size=64)
        np.testing.assert_array_equal(pot.eval_many(r),
                                      [eval_scalar(pot, x) for x in r])


class TestCombinators:
    def test_sum_is_exact(self, rng):
        p, q = qs.Cornell(0.1, 0.5), qs.LogChannel(2.0, 0.1)
        s = qs.SumPotential((p, q))
        for r in rng.uniform(0.1, 20.0, size=32):
            assert eval_scalar(s, r) == eval_scalar(p, r) + eval_scalar(q, r)

    def test_scaled_is_exact(self, rng):
        p = qs.Cornell(0.1, 0.5)
        s = qs.ScaledPotential(2.5, p)
        for r in rng.uniform(0.1, 20.0, size=32):
            assert eval_scalar(s, r) == 2.5 * eval_scalar(p, r)

    def test_operator_sugar(self):
        p = qs.Cornell(0.1, 0.5) + qs.Coulomb(0.01)
        assert eval_scalar(p, 2.0) == pytest.approx(0.05 + 1.0 + 0.005)
        q = 3.0 * qs.Coulomb(1.0)
        assert eval_scalar(q, 2.0) == pytest.approx(1.5)


class TestTabulated:
    def test_exact_at_knots(self):
        t = qs.Tabulated([(1.0, 0.0), (2.0, 5.0), (3.0, 4.0)])
        assert eval_scalar(t, 2.0) == 5.0

    def test_midpoint(self):
        assert eval_tabulated([(1.0, 0.0), (3.0, 4.0)], 2.0) == pytest.approx(2.0)

    def test_range_errors(self):
        t = qs.Tabulated([(1.0, 0.0), (3.0, 4.0)])
        with pytest.raises(RangeError):
            eval_scalar(t, 0.5)
        with pytest.raises(RangeError):
            eval_scalar(t, 3.5)

    def test_validation(self):
        with pytest.raises(ValueError):
            qs.Tabulated([(1.0, 0.0)])
        with pytest.raises(ValueError):
            qs.Tabulated([(1.0, 0.0), (1.0, 1.0)])
        with pytest.raises(ValueError):
            qs.Tabulated([(2.0, 0.0), (1.0, 1.0)])

    def test_dense_tabulation_tracks_cornell(self):
        # log-spaced knots keep the linear-interpolation error bound
        # h(r)^2/8 * |V''(r)| below 1e-6 down to the 1/r core
        pot = qs.Cornell(0.1, 0.5)
        knots = np.geomspace(0.01, 30.0, 100001)
        tab = qs.Tabulated(list(zip(knots, pot.eval_many(knots))))
        r = np.geomspace(0.011, 29.99, 5000)
        assert np.abs(tab.eval_many(r) - pot.eval_many(r)).max() < 1e-6


class TestCsvLoading:
    def test_header_and_values(self, tmp_path):
        path = tmp_path / "table.csv"
        path.write_text("r,V\n1.0,0.0\n2.0,1.5\n3.0,4.0\n")
        t = qs.load_tabulated_csv(str(path))
        assert eval_scalar(t, 2.0) == pytest.approx(1.5)

    def test_no_header(self, tmp_path):
        path = tmp_path / "table.csv"
        path.write_text("1.0,0.0\n2.0,1.5\n")
        t = qs.load_tabulated_csv(str(path))
        assert eval_scalar(t, 1.5) == pytest.approx(0.75)

    def test_non_ascending_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("2.0,0.0\n1.0,1.5\n")
        with pytest.raises(ValueError):
            qs.load_tabulated_csv(str(path))

    def test_bad_row_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1.0,0.0\n2.0,oops\n")
        with pytest.raises(ValueError):
            qs.load_tabulated_csv(str(path))


class TestMatrixPotentials:
    def test_hybrid_log_values(self):
        pot = qs.HybridLog(a0=1.0, b0=0.5, a1=2.0, b1=0.1, l=1, m=1.0)
        got = eval_matrix(pot, 1.0)
        root8 = 2.0 * np.sqrt(2.0)
        expected = np.array([[4.0 + np.log(1.5), -root8],
                             [-root8, 2.0 + np.log(2.1)]])
        np.testing.assert_allclose(got, expected, rtol=1e-14)

    def test_l_zero_is_diagonal(self):
        pot = qs.HybridLog(a0=1.0, b0=0.5, a1=2.0, b1=0.1, l=0, m=1.0)
        got = eval_matrix(pot, 0.7)
        assert got[0, 1] == 0.0
        assert got[1, 0] == 0.0

    def test_symmetry_random(self, rng):
        for _ in range(100):
            l = int(rng.integers(0, 5))
            r = float(rng.uniform(0.01, 40.0))
            pot = qs.HybridLog(a0=1.0, b0=0.5, a1=2.0, b1=0.1, l=l, m=1.0)
            v = eval_matrix(pot, r)
            assert v[0, 1] == v[1, 0]

    def test_domain_error(self):
        pot = qs.HybridLog(a0=1.0, b0=0.5, a1=2.0, b1=0.1, l=1, m=1.0)
        with pytest.raises(DomainError):
            eval_matrix(pot, 0.0)

    def test_diagonal_plus_coupling_symmetric(self, rng):
        def coupling(r):
            return np.array([[0.0, 0.3 / r], [0.3 / r, 0.0]])

        pot = qs.DiagonalPlusCoupling((qs.Constant(1.0), qs.Constant(2.0)), coupling)
        for r in rng.uniform(0.1, 10.0, size=16):
            v = eval_matrix(pot, float(r))
            np.testing.assert_array_equal(v, v.T)
