import io
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path

import numpy as np
import pytest

from qshoot import engine
from qshoot.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run_cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = main(list(argv))
    return code, out.getvalue(), err.getvalue()


def report_dict(text):
    out = {}
    for line in text.splitlines():
        if " = " in line:
            key, _, value = line.partition(" = ")
            out[key] = value
    return out


class TestSolve:
    def test_reference_eigenvalue_n1(self):
        code, out, err = run_cli("solve", "--config", str(CONFIGS / "cornell.cfg"),
                                 "--n", "1")
        assert code == 0, err
        rep = report_dict(out)
        assert float(rep["eigenvalue"]) == pytest.approx(3.10952, rel=5e-4)
        assert rep["nodes"] == "1"

    def test_invalid_mesh_exits_1(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("[potential]\nkind = cornell\na = 0.1\nk = 0.5\n"
                       "[mesh]\nr_min = 10.0\nr_max = 1.0\nn_points = 100\n")
        code, _, err = run_cli("solve", "--config", str(cfg))
        assert code == 1
        assert err

    def test_no_eigenvalue_exits_2(self, tmp_path):
        cfg = tmp_path / "narrow.cfg"
        cfg.write_text("[potential]\nkind = cornell\na = 0.1\nk = 0.5\n"
                       "[problem]\nl = 1\n"
                       "[search]\ne_min = 0.1\ne_max = 0.2\n")
        code, _, err = run_cli("solve", "--config", str(cfg), "--n", "20")
        assert code == 2

    def test_missing_config_exits_1(self):
        code, _, _ = run_cli("solve", "--config", "/does/not/exist.cfg")
        assert code == 1

    def test_unknown_flag_exits_1(self):
        code, _, _ = run_cli("solve", "--bogus")
        assert code == 1

    def test_missing_plugin_exits_3(self, tmp_path):
        cfg = tmp_path / "plug.cfg"
        cfg.write_text("[potential]\nkind = plugin\nlibrary = /none.so\n"
                       "manifest = /none.manifest\n")
        code, _, _ = run_cli("solve", "--config", str(cfg))
        assert code == 3

    def test_non_convergence_exits_4(self, tmp_path):
        cfg = tmp_path / "capped.cfg"
        cfg.write_text("[potential]\nkind = cornell\na = 0.1\nk = 0.5\n"
                       "[problem]\nl = 1\n"
                       "[mesh]\nr_min = 1e-5\nr_max = 42.0\nn_points = 4001\n"
                       "[search]\ne_min = 0.01\ne_max = 20.0\n"
                       "bisect_tol = 1e-15\nmax_bisect = 3\n")
        code, _, err = run_cli("solve", "--config", str(cfg))
        assert code == 4
        assert err


class TestCoupled:
    def test_hybrid_regression(self):
        code, out, err = run_cli("coupled", "--config", str(CONFIGS / "hybrid.cfg"),
                                 "--n", "0")
        assert code == 0, err
        rep = report_dict(out)
        assert float(rep["eigenvalue"]) == pytest.approx(1.01727, rel=5e-4)


class TestEmission:
    def test_csv_roundtrip_and_determinism(self, tmp_path):
        out1 = tmp_path / "wf1.csv"
        out2 = tmp_path / "wf2.csv"
        args = ("solve", "--config", str(CONFIGS / "cornell.cfg"), "--n", "0")
        assert run_cli(*args, "--out", str(out1))[0] == 0
        assert run_cli(*args, "--out", str(out2))[0] == 0
        assert out1.read_bytes() == out2.read_bytes()

        lines = out1.read_text().splitlines()
        assert lines[0] == "r,y"
        assert len(lines) == 1 + 20001
        data = np.loadtxt(str(out1), delimiter=",", skiprows=1)
        h = data[1, 0] - data[0, 0]
        norm = engine.mesh_integral(data[:, 1] ** 2, h)
        assert abs(norm - 1.0) < 1e-8

    def test_coupled_csv_three_columns(self, tmp_path):
        out = tmp_path / "uf.csv"
        code, _, err = run_cli("coupled", "--config", str(CONFIGS / "hybrid.cfg"),
                               "--n", "0", "--out", str(out))
        assert code == 0, err
        lines = out.read_text().splitlines()
        assert lines[0] == "r,u1,u2"
        assert len(lines[1].split(",")) == 3

    def test_svg_written(self, tmp_path):
        out = tmp_path / "wf.csv"
        code, _, _ = run_cli("solve", "--config", str(CONFIGS / "cornell.cfg"),
                             "--n", "0", "--out", str(out), "--svg")
        assert code == 0
        svg = Path(str(out) + ".svg").read_text()
        assert svg.startswith("<svg")
        assert "<polyline" in svg

    def test_svg_requires_out(self):
        code, _, _ = run_cli("solve", "--config", str(CONFIGS / "cornell.cfg"),
                             "--svg")
        assert code == 1


class TestSpectrumCommand:
    def test_mass_breakdown(self):
        code, out, err = run_cli("spectrum", "--config",
                                 str(CONFIGS / "spectrum.cfg"))
        assert code == 0, err
        rep = report_dict(out)
        assert float(rep["lo"]) == pytest.approx(2.0 + 2.15789, rel=1e-4)
        total = (float(rep["lo"]) + float(rep["nlo"]) + float(rep["nnlo_diag"])
                 + float(rep["nnlo_sum"]))
        assert float(rep["mass"]) == pytest.approx(total, rel=1e-14)


class TestFitCommand:
    def test_fit_runs(self):
        code, out, err = run_cli("fit", "--config", str(CONFIGS / "fit.cfg"))
        assert code == 0, err
        rep = report_dict(out)
        assert float(rep["a"]) == pytest.approx(0.1, abs=5e-3)
        assert float(rep["k"]) == pytest.approx(0.5, abs=5e-3)
        assert float(rep["m"]) == pytest.approx(1.0, abs=5e-3)


class TestScan:
    def test_staircase(self, tmp_path):
        cfg = tmp_path / "scan.cfg"
        cfg.write_text("[potential]\nkind = power\nc = 0.25\np = 2.0\n"
                       "[mesh]\nr_min = 1e-5\nr_max = 20.0\nn_points = 4001\n"
                       "[search]\ne_min = 1.0\ne_max = 4.0\nscan_step = 0.5\n")
        code, out, _ = run_cli("scan", "--config", str(cfg))
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "E,nodes"
        counts = [int(row.split(",")[1]) for row in lines[1:]]
        assert counts == sorted(counts)
        assert counts[0] == 0 and counts[-1] == 2  # levels at 3/2 and 7/2


class TestCall:
    def test_call_plugin(self, test_plugin_paths):
        lib, man = test_plugin_paths
        code, out, err = run_cli("call", "--plugin", lib, "--manifest", man,
                                 "answer", "0")
        assert code == 0, err
        assert out.strip() == "[42]"

    def test_call_mixed(self, test_plugin_paths):
        lib, man = test_plugin_paths
        code, out, _ = run_cli("call", "--plugin", lib, "--manifest", man,
                               "mixed", "3", "2.0,5.0")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "[126]"
        assert lines[1] == "[10.0, -3.0]"

    def test_call_shape_error_exits_3(self, test_plugin_paths):
        lib, man = test_plugin_paths
        code, _, err = run_cli("call", "--plugin", lib, "--manifest", man,
                               "answer", "0,1")
        assert code == 3
        assert err


class TestBench:
    def test_default_bench(self):
        code, out, err = run_cli("bench")
        assert code == 0, err
        rows = [line for line in out.splitlines() if line
                and line[0].isdigit()]
        assert len(rows) == 4
        energies = {int(r.split(",")[0]): float(r.split(",")[1]) for r in rows}
        for n, ref in ((0, 2.15789), (1, 3.10952), (2, 3.93850), (20, 13.5995)):
            assert energies[n] == pytest.approx(ref, rel=5e-4)

    def test_halved_density_stays_close(self, tmp_path):
        cfg = tmp_path / "half.cfg"
        cfg.write_text("[mesh]\nn_points = 10001\n")
        code, out, _ = run_cli("bench", "--config", str(cfg))
        assert code == 0
        rows = [line for line in out.splitlines() if line and line[0].isdigit()]
        energies = {int(r.split(",")[0]): float(r.split(",")[1]) for r in rows}
        for n, ref in ((0, 2.15789), (1, 3.10952), (2, 3.93850), (20, 13.5995)):
            assert abs(energies[n] - ref) / ref < 1e-3


class TestExampleConfigs:
    def test_all_example_configs_run_clean(self):
        import time
        t0 = time.perf_counter()
        jobs = [("solve", "cornell.cfg"), ("coupled", "hybrid.cfg"),
                ("solve", "oscillator.cfg"), ("spectrum", "spectrum.cfg"),
                ("fit", "fit.cfg")]
        for command, name in jobs:
            code, _, err = run_cli(command, "--config", str(CONFIGS / name))
            assert code == 0, "%s %s failed: %s" % (command, name, err)
        assert time.perf_counter() - t0 < 60.0
