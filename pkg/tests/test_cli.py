"""End-to-end tests of the command-line harness."""

import json
import math
import os

import numpy as np
import pytest

from greenlab.cli import main
from greenlab.geometry import PointConfiguration, flat_torus, grid_torus, sphere


def write(path, text):
    path.write_text(text)
    return str(path)


def t1_points_csv(path, xs):
    cfg = PointConfiguration(flat_torus(1), np.asarray(xs, dtype=float)[:, None])
    cfg.save_csv(path)
    return str(path)


class TestEnergy:
    def test_two_point_t1(self, tmp_path):
        pts = t1_points_csv(tmp_path / "p.csv", [0.0, 0.5])
        out = tmp_path / "out.json"
        ini = write(tmp_path / "c.ini", "[energy]\nmanifold=torus\ndim=1\n")
        rc = main(["energy", "--config", ini, "--points", pts, "--out", str(out)])
        assert rc == 0
        report = json.loads(out.read_text())
        assert abs(report["total"] - (-1.0 / 12.0)) < 1e-12
        assert report["version"]

    def test_single_point_zero(self, tmp_path, capsys):
        pts = t1_points_csv(tmp_path / "p.csv", [0.25])
        ini = write(tmp_path / "c.ini", "[energy]\nmanifold=torus\ndim=1\n")
        assert main(["energy", "--config", ini, "--points", pts]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["total"] == 0.0

    def test_duplicate_coulomb_exit3(self, tmp_path):
        x = np.zeros((2, 4))
        x[:, 0] = 1.0
        cfg = PointConfiguration(sphere(3), x)
        p = tmp_path / "dup.csv"
        cfg.save_csv(p)
        ini = write(tmp_path / "c.ini",
                    "[energy]\nmanifold=sphere\ndim=3\nkernel=coulomb\n")
        assert main(["energy", "--config", ini, "--points", str(p)]) == 3

    def test_missing_config_exit2(self, tmp_path):
        assert main(["energy", "--config", str(tmp_path / "nope.ini")]) == 2

    def test_unknown_kernel_exit2(self, tmp_path):
        ini = write(tmp_path / "c.ini", "[energy]\nkernel=yukawa\n")
        assert main(["energy", "--config", ini]) == 2


class TestW2:
    def test_grid_t1_closed_form(self, tmp_path, capsys):
        p = tmp_path / "g.csv"
        grid_torus(16, 1).save_csv(p)
        ini = write(tmp_path / "c.ini", "[w2]\nmanifold=torus\ndim=1\n")
        assert main(["w2", "--config", ini, "--points", str(p)]) == 0
        report = json.loads(capsys.readouterr().out)
        assert abs(report["value"] - 1.0 / (2.0 * math.sqrt(3.0) * 16)) < 1e-10
        assert report["method"] == "circle-exact"

    def test_t2_network_flow(self, tmp_path, capsys):
        ini = write(tmp_path / "c.ini",
                    "[w2]\nmanifold=torus\ndim=2\nn=9\nseed=3\n"
                    "solver=network-flow\nquadrature_m=400\n")
        assert main(["w2", "--config", ini]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["value"] > 0.0 and report["error_bound"] > 0.0


class TestDiaphony:
    def test_grid_closed_forms(self, tmp_path, capsys):
        ini = write(tmp_path / "c.ini", "[diaphony]\ngenerator=grid\nn=32\n"
                                        "truncation=32768\n")
        assert main(["diaphony", "--config", ini]) == 0
        report = json.loads(capsys.readouterr().out)
        ref = 1.0 / (2.0 * math.sqrt(3.0) * 32)
        assert abs(report["diaphony"] - ref) < 1e-8
        assert abs(report["w2"] - ref) < 1e-10
        assert abs(report["diaphony_squared"] - report["green_cross_value"]) < 1e-8

    def test_single_point(self, tmp_path, capsys):
        pts = t1_points_csv(tmp_path / "p.csv", [0.0])
        ini = write(tmp_path / "c.ini", "[diaphony]\ntruncation=20000\n")
        assert main(["diaphony", "--config", ini, "--points", pts]) == 0
        report = json.loads(capsys.readouterr().out)
        assert abs(report["diaphony_squared"] - 1.0 / 12.0) < 1e-8
        assert abs(report["star_discrepancy"] - 1.0) < 1e-12

    def test_kronecker_chain(self, tmp_path, capsys):
        ini = write(tmp_path / "c.ini", "[diaphony]\ngenerator=kronecker\nn=144\n")
        assert main(["diaphony", "--config", ini]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["ratio_w2_over_diaphony"] <= 2.0
        assert report["w1"] <= report["star_discrepancy"] + 1e-12


class TestMinimize:
    def test_artifacts_written(self, tmp_path):
        ini = write(tmp_path / "c.ini",
                    "[minimize]\nmanifold=torus\ndim=1\nn=4\nmax_iters=400\n"
                    "grad_tol=1e-10\n")
        out = tmp_path / "min.json"
        assert main(["minimize", "--config", ini, "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        # n=4 optimum on T^1 is the even grid
        assert abs(report["energy"] - 4.0 * 4.0 * (1.0 / (12.0 * 16.0))
                   + 4.0 / 12.0) < 1e-6
        assert (tmp_path / "min_points.csv").exists()
        assert (tmp_path / "min.png").exists()


class TestVerify:
    def test_t1_small_corpus(self, tmp_path):
        ini = write(tmp_path / "c.ini",
                    "[verify-t1]\ndim=1\nn_list=4 16\nseeds=0\n"
                    "generators=grid random\n")
        out = tmp_path / "v.csv"
        assert main(["verify-t1", "--config", ini, "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("#")
        header = [ln for ln in lines if not ln.startswith("#")][0]
        assert header.split(",")[:3] == ["generator", "n", "seed"]
        assert (tmp_path / "v.png").exists()

    def test_failure_exit5(self, tmp_path):
        ini = write(tmp_path / "c.ini",
                    "[verify-t1]\ndim=1\nn_list=4\nseeds=0\ngenerators=grid\n"
                    "pass_constant=1e-6\n")
        out = tmp_path / "v.csv"
        assert main(["verify-t1", "--config", ini, "--out", str(out)]) == 5
        # report is still written, with pass=False rows
        assert "False" in out.read_text()


class TestScaling:
    def test_lemma1_slope(self, tmp_path):
        ini = write(tmp_path / "c.ini", "[scaling]\nmode=lemma1\n")
        out = tmp_path / "s.csv"
        assert main(["scaling", "--config", ini, "--out", str(out)]) == 0
        comments = [ln for ln in out.read_text().splitlines() if ln.startswith("#")]
        slope = float([c for c in comments if "fitted_slope" in c][0].split("=")[1])
        assert abs(slope - 0.5) < 0.05
        assert (tmp_path / "s.png").exists()

    def test_too_few_points_exit2(self, tmp_path):
        ini = write(tmp_path / "c.ini",
                    "[scaling]\nmode=corollary\nn_list=8 27\n")
        assert main(["scaling", "--config", ini, "--out",
                     str(tmp_path / "s.csv")]) == 2

    def test_unknown_mode_exit2(self, tmp_path):
        ini = write(tmp_path / "c.ini", "[scaling]\nmode=sideways\n")
        assert main(["scaling", "--config", ini]) == 2


class TestReproducibility:
    def test_energy_bit_identical(self, tmp_path):
        ini = write(tmp_path / "c.ini",
                    "[energy]\nmanifold=torus\ndim=2\nn=20\nseed=7\n")
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert main(["energy", "--config", ini, "--out", str(a)]) == 0
        assert main(["energy", "--config", ini, "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_verify_bit_identical_with_threads(self, tmp_path, monkeypatch):
        ini = write(tmp_path / "c.ini",
                    "[verify-t1]\ndim=1\nn_list=4 8\nseeds=0 1\ngenerators=random\n")
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        monkeypatch.setenv("GREENLAB_THREADS", "1")
        assert main(["verify-t1", "--config", ini, "--out", str(a)]) == 0
        monkeypatch.setenv("GREENLAB_THREADS", "3")
        assert main(["verify-t1", "--config", ini, "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_seed_flag_changes_sample(self, tmp_path, capsys):
        ini = write(tmp_path / "c.ini", "[energy]\nmanifold=torus\ndim=1\nn=6\n")
        assert main(["energy", "--config", ini, "--seed", "1"]) == 0
        first = capsys.readouterr().out
        assert main(["energy", "--config", ini, "--seed", "2"]) == 0
        second = capsys.readouterr().out
        assert json.loads(first)["total"] != json.loads(second)["total"]


class TestCommon:
    def test_common_section_merged(self, tmp_path, capsys):
        ini = write(tmp_path / "c.ini",
                    "[common]\nmanifold=torus\ndim=1\n[energy]\nn=5\nseed=2\n")
        assert main(["energy", "--config", ini]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["n"] == 5

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert "greenlab" in capsys.readouterr().out
