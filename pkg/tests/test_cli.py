import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from lpeuler import __version__
from lpeuler.cli import consolidate, dumps, fmt_float, main
from lpeuler.core import Grid, SpectralField, VectorField, read_field, read_vector_field, write_field, write_vector_field
from lpeuler.ops import divergence_defect

from conftest import cos_x1, random_real, random_vector


@pytest.fixture
def scalar_file(tmp_path):
    path = tmp_path / "f.fld"
    write_field(random_real(Grid(2, 32), 0), path)
    return path


class TestFormatting:
    def test_round_trip_digits(self):
        for x in (0.1, 1 / 3, 2.0**-1074, 1e300, -7.25):
            assert float(fmt_float(x)) == x
        assert fmt_float(float("inf")) == "inf"
        assert fmt_float(float("nan")) == "nan"

    def test_dumps(self):
        text = dumps({"a": 0.1, "b": [1, None, True], "c": float("inf")})
        assert json.loads(text) == {"a": 0.1, "b": [1, None, True], "c": "inf"}


class TestDispatch:
    def test_version(self, capsys):
        assert main(["--version"]) == 0
        out = capsys.readouterr().out
        assert __version__ in out and "field format" in out

    def test_unknown_subcommand(self, capsys):
        assert main(["frobnicate"]) == 2
        assert "usage" in capsys.readouterr().err

    def test_missing_input_names_path(self, tmp_path, capsys):
        missing = tmp_path / "missing.fld"
        assert main(["norm", "--in", str(missing), "--space", "linf"]) == 2
        assert str(missing) in capsys.readouterr().err

    def test_bad_threads(self, scalar_file):
        assert main(["--threads", "0", "norm", "--in", str(scalar_file), "--space", "linf"]) == 2

    def test_entry_point_module(self):
        res = subprocess.run([sys.executable, "-m", "lpeuler.cli", "--version"], capture_output=True, text=True)
        assert res.returncode == 0 and __version__ in res.stdout


class TestNorm:
    def test_tl_cos(self, tmp_path, capsys):
        path = tmp_path / "cos.fld"
        write_field(cos_x1(Grid(2, 128)), path)
        out = tmp_path / "n.json"
        assert main(["norm", "--in", str(path), "--space", "tl", "--s", "3", "--oversample", "8", "--json", str(out)]) == 0
        data = json.loads(out.read_text())
        assert data["value"] == pytest.approx(8 * np.pi, rel=1e-5)
        assert data["spec"]["space"] == "TL_inhom"
        assert json.loads(capsys.readouterr().out) == data
        manifest = json.loads((tmp_path / "n.json.manifest.json").read_text())
        assert manifest["command"] == "norm" and str(out) in manifest["outputs"]

    def test_tl_needs_s(self, scalar_file):
        assert main(["norm", "--in", str(scalar_file), "--space", "tl"]) == 2

    def test_vector_directory(self, tmp_path, capsys):
        d = tmp_path / "u.fld.d"
        write_vector_field(random_vector(Grid(2, 16), 1), d)
        assert main(["norm", "--in", str(d), "--space", "w1inf"]) == 0
        assert json.loads(capsys.readouterr().out)["spec"]["space"] == "W1inf"


class TestFieldCommands:
    def test_decompose(self, tmp_path, scalar_file):
        out = tmp_path / "bands"
        assert main(["decompose", "--in", str(scalar_file), "--out-dir", str(out)]) == 0
        meta = json.loads((out / "manifest.json").read_text())
        total = sum(read_field(out / b["file"]).coeffs for b in meta["bands"])
        f = read_field(scalar_file)
        assert np.max(np.abs(total - f.coeffs)) < 1e-12
        assert meta["reconstruction_error"] <= 1e-10
        run = json.loads((out / "run.manifest.json").read_text())
        assert str(out / "manifest.json") in run["outputs"]

    def test_decompose_rerun_identical(self, tmp_path, scalar_file):
        out = tmp_path / "bands"
        main(["decompose", "--in", str(scalar_file), "--out-dir", str(out)])
        first = json.loads((out / "run.manifest.json").read_text())["outputs"]
        main(["decompose", "--in", str(scalar_file), "--out-dir", str(out)])
        assert json.loads((out / "run.manifest.json").read_text())["outputs"] == first

    def test_project(self, tmp_path):
        src, dst = tmp_path / "u.fld.d", tmp_path / "pu.fld.d"
        write_vector_field(random_vector(Grid(2, 32), 2), src)
        assert main(["project", "--in", str(src), "--out", str(dst)]) == 0
        assert divergence_defect(read_vector_field(dst)) <= 1e-10

    def test_project_rejects_scalar(self, tmp_path, scalar_file):
        assert main(["project", "--in", str(scalar_file), "--out", str(tmp_path / "x")]) == 2

    def test_bony(self, tmp_path, scalar_file):
        g_path = tmp_path / "g.fld"
        write_field(random_real(Grid(2, 32), 1), g_path)
        out = tmp_path / "bony"
        assert main(["bony", "--f", str(scalar_file), "--g", str(g_path), "--out-dir", str(out)]) == 0
        rep = json.loads((out / "report.json").read_text())
        assert rep["residual"] <= 1e-9
        for name in rep["parts"]:
            assert isinstance(read_field(out / name), SpectralField)

    def test_bony_grid_mismatch(self, tmp_path, scalar_file):
        g_path = tmp_path / "g.fld"
        write_field(random_real(Grid(2, 16), 1), g_path)
        assert main(["bony", "--f", str(scalar_file), "--g", str(g_path), "--out-dir", str(tmp_path / "o")]) == 2


class TestVerify:
    def test_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for path in (a, b):
            assert main(["verify", "--id", "moser", "--seed", "7", "--trials", "4", "--json", str(path)]) == 0
        assert a.read_bytes() == b.read_bytes()
        data = json.loads(a.read_text())
        assert data["id"] == "moser" and data["seed"] == 7 and data["trials"] == 4

    def test_threads_do_not_change_results(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        main(["verify", "--id", "leray", "--trials", "4", "--json", str(a)])
        main(["--threads", "2", "verify", "--id", "leray", "--trials", "4", "--json", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_unknown_id(self, tmp_path):
        assert main(["verify", "--id", "sobolev", "--json", str(tmp_path / "x.json")]) == 2


class TestSimulate:
    def test_t_end_zero(self, tmp_path):
        csv_path, js = tmp_path / "t.csv", tmp_path / "t.json"
        code = main(["simulate", "--preset", "taylor-green", "--n", "32", "--t-end", "0", "--csv", str(csv_path), "--json", str(js)])
        assert code == 0
        rows = list(csv.reader(csv_path.open()))
        assert rows[0][0] == "t" and len(rows) == 2
        summary = json.loads(js.read_text())
        assert summary["samples"] == 1 and summary["fitted_C0"] == 1.0
        assert summary["global_check"] == "pass"

    def test_short_run(self, tmp_path):
        js = tmp_path / "s.json"
        assert main(["simulate", "--preset", "shear", "--n", "32", "--dt", "0.01", "--t-end", "0.1", "--json", str(js)]) == 0
        s = json.loads(js.read_text())
        assert s["blowup_stop"] is False and s["fitted_C0"] == 1.0

    def test_cfl_violation(self, tmp_path):
        assert main(["simulate", "--n", "32", "--dt", "1", "--json", str(tmp_path / "x.json")]) == 2


class TestReport:
    def test_empty(self, capsys):
        assert main(["report"]) == 0
        summary, table = consolidate([])
        assert summary == {"inequalities": [], "stability": [], "simulations": []}
        assert table == ""

    def test_stability_growth(self, tmp_path):
        paths = []
        for n in (64, 128):
            p = tmp_path / f"leray{n}.json"
            main(["verify", "--id", "leray", "--n", str(n), "--bands", "0", str(Grid(2, 64).j_max - 2), "--trials", "3", "--json", str(p)])
            paths.append(p)
        before = [p.read_bytes() for p in paths]
        out = tmp_path / "summary.json"
        assert main(["report", *map(str, paths), "--json", str(out)]) == 0
        st = json.loads(out.read_text())["stability"][0]
        r = [json.loads(p.read_text())["max_ratio"] for p in paths]
        assert st["growth"] == pytest.approx(r[1] / r[0])
        assert [p.read_bytes() for p in paths] == before

    def test_duplicate_rejected(self, tmp_path, capsys):
        p = tmp_path / "a.json"
        main(["verify", "--id", "leray", "--trials", "2", "--json", str(p)])
        q = tmp_path / "b.json"
        q.write_bytes(p.read_bytes())
        assert main(["report", str(p), str(q)]) == 2
        assert "duplicate" in capsys.readouterr().err

    def test_schema_mismatch_names_file(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"hello": 1}')
        assert main(["report", str(bad)]) == 2
        assert str(bad) in capsys.readouterr().err


def test_blowup_exit_code(tmp_path, monkeypatch):
    import lpeuler.euler2d as e2d

    monkeypatch.setattr(e2d, "BLOWUP_FACTOR", 1.0 - 1e-9)
    js = tmp_path / "b.json"
    argv = ["simulate", "--preset", "random-smooth", "--n", "32", "--dt", "0.01", "--t-end", "0.2", "--json", str(js)]
    assert main(argv) == 3
    assert json.loads(js.read_text())["blowup_stop"] is True
