import json

import numpy as np
import pytest

from polydet.cli import main
from polydet.config import RunConfig, config_from_file
from polydet.errors import ValidationFailure
from polydet.zetadet import rectangle_logdet_exact


@pytest.fixture
def square_file(tmp_path):
    f = tmp_path / "square.json"
    f.write_text(json.dumps({"vertices": [[0, 0], [1, 0], [1, 1], [0, 1]]}))
    return str(f)


@pytest.fixture
def dilation_file(tmp_path):
    f = tmp_path / "dilation.json"
    f.write_text(json.dumps({"vertex_velocities": [[0, 0], [1, 0], [1, 1], [0, 1]]}))
    return str(f)


@pytest.fixture
def det_cfg_file(tmp_path):
    f = tmp_path / "cfg.json"
    f.write_text(json.dumps({"zeta": {"tau0": 0.06}, "lambda_max": 420.0}))
    return str(f)


def run_cli(args, capsys):
    code = main(args)
    out = capsys.readouterr().out
    return code, out


class TestRunConfig:
    def test_hash_stable(self):
        assert RunConfig().hash() == RunConfig().hash()
        assert RunConfig().hash() != RunConfig(seed=7).hash()

    def test_from_file(self, det_cfg_file):
        cfg = config_from_file(det_cfg_file)
        assert cfg.zeta.tau0 == 0.06
        assert cfg.lambda_max == 420.0

    def test_rejects_bad_format(self):
        with pytest.raises(ValidationFailure):
            RunConfig(out_format="yaml")

    def test_lambda_max_guard(self):
        from polydet.geometry import build_polygon
        p = build_polygon([0, 1, 1 + 1j, 1j])
        with pytest.raises(ValidationFailure):
            RunConfig(lambda_max=50.0).pipeline_zeta(p)


class TestScmapCommand:
    def test_square_report(self, square_file, capsys):
        code, out = run_cli(["scmap", square_file], capsys)
        assert code == 0
        rep = json.loads(out)
        assert rep["payload"]["residual"] < 1e-10
        assert rep["payload"]["prevertices"][:2] == [-1.0, 0.0]
        assert rep["payload"]["prevertices"][2] == pytest.approx(1 / 3, abs=1e-10)

    def test_triangle_instant(self, tmp_path, capsys):
        f = tmp_path / "tri.json"
        f.write_text(json.dumps({"vertices": [[0, 0], [1, 0], [0, 1]]}))
        code, out = run_cli(["scmap", str(f)], capsys)
        assert code == 0
        assert json.loads(out)["payload"]["prevertices"] == [-1.0, 0.0, 1.0]

    def test_nonconvex_exit_2(self, tmp_path, capsys):
        f = tmp_path / "bad.json"
        f.write_text(json.dumps(
            {"vertices": [[0, 0], [2, 0], [2, 2], [1, 0.5], [0, 2]]}))
        assert main(["scmap", str(f)]) == 2

    def test_cache_round_trip(self, square_file, tmp_path, capsys):
        cache = str(tmp_path / "cache")
        code1, out1 = run_cli(["--cache-dir", cache, "scmap", square_file], capsys)
        code2, out2 = run_cli(["--cache-dir", cache, "scmap", square_file], capsys)
        r1, r2 = json.loads(out1), json.loads(out2)
        assert r1["payload"] == r2["payload"]
        assert not r1["diagnostics"]["cache_hit"]
        assert r2["diagnostics"]["cache_hit"]


class TestDetCommand:
    def test_det_square(self, square_file, det_cfg_file, tmp_path, capsys):
        cache = str(tmp_path / "cache")
        code, out = run_cli(["--cfg", det_cfg_file, "--cache-dir", cache,
                             "det", square_file], capsys)
        assert code == 0
        rep = json.loads(out)
        assert abs(rep["payload"]["logdet"] - rectangle_logdet_exact(1, 1)) < 1e-5

        code2, out2 = run_cli(["--cfg", det_cfg_file, "--cache-dir", cache,
                               "det", square_file], capsys)
        rep2 = json.loads(out2)
        assert rep2["diagnostics"]["cache_hit"]
        assert json.dumps(rep["payload"], sort_keys=True) == \
            json.dumps(rep2["payload"], sort_keys=True)
        assert rep2["timings"]["eigensolve"] < 0.5

    def test_tail_not_converged_exit_3(self, square_file, tmp_path, capsys):
        f = tmp_path / "badcfg.json"
        f.write_text(json.dumps({"zeta": {"tau0": 0.004, "tail_tol": 1e-9},
                                 "lambda_max": 250.0}))
        assert main(["--cfg", str(f), "det", square_file]) == 3


class TestVarCommand:
    def test_dilation_formula(self, square_file, dilation_file, capsys):
        code, out = run_cli(["var", square_file, dilation_file,
                             "--route", "formula"], capsys)
        assert code == 0
        rep = json.loads(out)
        assert rep["payload"]["formula"]["total"] == pytest.approx(-0.5, abs=1e-6)
        assert rep["payload"]["formula"]["corner_term"] == 0.0
        # the dilation of the square is a sum of two pure side shifts, so the
        # contour route applies and is reported alongside
        assert rep["payload"]["formula"]["contour_route"] == pytest.approx(-0.5, abs=1e-6)

    def test_translation_zero(self, square_file, tmp_path, capsys):
        f = tmp_path / "tr.json"
        f.write_text(json.dumps({"vertex_velocities": [[1, 1]] * 4}))
        code, out = run_cli(["var", square_file, str(f)], capsys)
        rep = json.loads(out)
        assert abs(rep["payload"]["formula"]["total"]) < 1e-8

    def test_csv_format(self, square_file, dilation_file, tmp_path, capsys):
        out_file = tmp_path / "report.csv"
        code, _ = run_cli(["--format", "csv", "--out", str(out_file),
                           "var", square_file, dilation_file], capsys)
        assert code == 0
        text = out_file.read_text()
        assert text.startswith("key,value")
        assert "formula.total" in text
        assert "\r" not in text


class TestWzCommand:
    def test_disk(self, tmp_path, capsys):
        dom = tmp_path / "disk.json"
        dom.write_text(json.dumps({"taylor": [[0, 0], [1, 0]]}))
        fld = tmp_path / "v.json"
        fld.write_text(json.dumps({"taylor": [[0, 0], [1, 0]]}))
        code, out = run_cli(["wz", str(dom), "--field", str(fld)], capsys)
        assert code == 0
        rep = json.loads(out)
        assert rep["payload"]["wz_variation"] == pytest.approx(-1 / 3, abs=1e-8)


class TestValidateCommand:
    def test_geometry_suite(self, capsys):
        code, out = run_cli(["validate", "geometry"], capsys)
        assert code == 0
        assert "PASS" in out
        assert "FAIL" not in out
