"""Tests for the hamilton-potential command line."""

import csv
import io
import json
import math
import os
import sys

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from hamilton_potential.cli import build_parser, main


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestParser:
    def test_version(self, capsys):
        with pytest.raises(SystemExit) as exc:
            build_parser().parse_args(["--version"])
        assert exc.value.code == 0
        assert "hamilton-potential 0.1.0" in capsys.readouterr().out

    def test_command_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])


class TestPotential:
    def test_exponential_csv(self, capsys):
        code = main(["potential", "--model", "exponential1d", "--point", f"1:{math.e!r}"])
        assert code == 0
        rows = _rows(capsys.readouterr().out)
        assert len(rows) == 1
        assert float(rows[0]["q_in_1"]) == 1.0
        assert float(rows[0]["S"]) == pytest.approx(0.5, abs=1e-6)
        assert rows[0]["error"] == ""

    def test_kl_free_json(self, capsys):
        code = main(
            ["potential", "--model", "kl-free", "--point", "0:0.7", "--format", "json"]
        )
        assert code == 0
        data = json.loads(capsys.readouterr().out)
        assert data[0]["S"] == pytest.approx(math.expm1(0.7) - 0.7, abs=1e-8)
        assert data[0]["q_fin"] == [0.7]

    def test_out_file(self, capsys, tmp_path):
        target = tmp_path / "runs" / "s.csv"
        code = main(["potential", "--model", "kl-free", "--point", "0:0.5", "--out", str(target)])
        assert code == 0
        assert capsys.readouterr().out == ""
        assert target.read_text().startswith("q_in_1,q_fin_1,S,")

    def test_model_spec_file(self, capsys, tmp_path):
        spec = tmp_path / "narrow.json"
        spec.write_text(json.dumps({"dim": 1, "domain": [[0.5, 3.0]], "model": "exponential1d"}))
        assert main(["potential", "--model", str(spec), "--point", "1:1.5"]) == 0
        capsys.readouterr()
        assert main(["potential", "--model", str(spec), "--point", "1:4"]) == 2
        assert "outside the domain" in json.loads(capsys.readouterr().out)["error"]

    def test_unknown_model(self, capsys):
        assert main(["potential", "--model", "hyperbolic", "--point", "1:2"]) == 2
        payload = json.loads(capsys.readouterr().out)
        assert payload["error"].startswith("unknown model 'hyperbolic'")
        assert payload["details"] == {"command": "potential"}

    def test_missing_pairs(self, capsys):
        assert main(["potential", "--model", "kl-free"]) == 2
        assert "Q_IN:Q_FIN" in json.loads(capsys.readouterr().out)["error"]

    def test_unparseable_point(self, capsys):
        assert main(["potential", "--point", "1:x"]) == 2
        assert "cannot parse point" in json.loads(capsys.readouterr().out)["error"]

    def test_numerical_failure(self, capsys):
        code = main(["potential", "--model", "exponential1d", "--point", "1:2", "--steps", "2"])
        assert code == 1
        payload = json.loads(capsys.readouterr().out)
        assert payload["details"]["type"] == "QuadratureNotConverged"

    def test_keep_going(self, capsys):
        code = main(
            [
                "potential",
                "--model",
                "exponential1d",
                "--point",
                "1:2",
                "--point",
                "1:1.5",
                "--steps",
                "2",
                "--keep-going",
            ]
        )
        assert code == 1
        rows = _rows(capsys.readouterr().out)
        assert len(rows) == 2
        assert all("step count was doubled" in row["error"] for row in rows)
        assert all(row["S"] == "" for row in rows)

    def test_config_file_with_flag_override(self, capsys, tmp_path):
        config = tmp_path / "run.json"
        config.write_text(
            json.dumps(
                {
                    "model": "exponential1d",
                    "alpha": 0.5,
                    "format": "json",
                    "pairs": [[[1.0], [1.5]]],
                }
            )
        )
        assert main(["potential", "--config", str(config), "--alpha", "0"]) == 0
        data = json.loads(capsys.readouterr().out)
        assert data[0]["S"] == pytest.approx(math.log(1.5) ** 2 / 2.0, abs=1e-6)

    def test_config_rejects_unknown_keys(self, capsys, tmp_path):
        config = tmp_path / "run.json"
        config.write_text(json.dumps({"modle": "kl-free"}))
        assert main(["potential", "--config", str(config)]) == 2
        assert "invalid configuration" in json.loads(capsys.readouterr().out)["error"]


class TestScan:
    def test_kl_free_grid(self, capsys):
        code = main(["scan", "--model", "kl-free", "--point", "0", "--grid", "0.5:1:2"])
        assert code == 0
        rows = _rows(capsys.readouterr().out)
        assert [float(row["q_fin_1"]) for row in rows] == [0.5, 1.0]
        for row in rows:
            delta = float(row["q_fin_1"])
            assert float(row["S"]) == pytest.approx(math.expm1(delta) - delta, abs=1e-8)

    def test_grid_outside_domain(self, capsys):
        code = main(["scan", "--model", "exponential1d", "--point", "1", "--grid", "-1:2:3"])
        assert code == 2
        assert "leaves the domain" in json.loads(capsys.readouterr().out)["error"]

    def test_grid_count_must_match_dimension(self, capsys):
        code = main(["scan", "--model", "sphere-round", "--point", "1,2", "--grid", "1:2:3"])
        assert code == 2
        assert "one --grid axis per coordinate" in json.loads(capsys.readouterr().out)["error"]


class TestRecover:
    def test_exponential_reference_point(self, capsys):
        code = main(["recover", "--model", "exponential1d", "--alpha", "0.5", "--format", "json"])
        assert code == 0
        (report,) = json.loads(capsys.readouterr().out)
        assert report["point"] == [1.0]
        assert report["source"] == "hamilton"
        assert report["metric"][0][0] == pytest.approx(1.0, abs=1e-4)
        assert report["skewness"][0][0][0] == pytest.approx(-2.0, abs=1e-2)

    def test_long_format_rows(self, capsys):
        code = main(["recover", "--model", "exponential-log", "--alpha", "1", "--point", "0.2"])
        assert code == 0
        rows = _rows(capsys.readouterr().out)
        tensors = [row["tensor"] for row in rows]
        assert tensors == [
            "metric",
            "gamma_first",
            "skewness",
            "third_fin_fin_in",
            "third_in_in_fin",
        ]
        by_name = {row["tensor"]: row for row in rows}
        assert by_name["metric"]["index"] == "1.1"
        assert float(by_name["third_fin_fin_in"]["expected"]) == 2.0
        assert float(by_name["third_fin_fin_in"]["value"]) == pytest.approx(2.0, abs=5e-3)

    def test_alpha_zero_has_no_skewness_rows(self, capsys):
        assert main(["recover", "--model", "exponential1d", "--point", "1.5"]) == 0
        tensors = {row["tensor"] for row in _rows(capsys.readouterr().out)}
        assert "skewness" not in tensors


class TestDensities:
    def test_fisher(self, capsys):
        code = main(["fisher", "--density", "exponential", "--point", "2"])
        assert code == 0
        rows = {row["tensor"]: row for row in _rows(capsys.readouterr().out)}
        assert float(rows["metric"]["value"]) == pytest.approx(0.25, abs=1e-8)
        assert float(rows["skewness"]["value"]) == pytest.approx(-0.25, abs=1e-7)

    def test_kl(self, capsys):
        code = main(["kl", "--density", "exponential", "--point", "1:2", "--format", "json"])
        assert code == 0
        data = json.loads(capsys.readouterr().out)
        assert data[0]["kl"] == pytest.approx(1.0 - math.log(2.0), abs=1e-9)

    def test_unknown_density(self, capsys):
        assert main(["kl", "--density", "poisson", "--point", "1:2"]) == 2


class TestVerify:
    def test_exponential(self, capsys):
        code = main(["verify", "--model", "exponential1d", "--alpha", "0.5", "--format", "json"])
        report = json.loads(capsys.readouterr().out)
        assert code == 0
        assert report["passed"] is True
        names = [check["name"] for check in report["checks"]]
        assert "recover@[1.0].skewness" in names
        assert sum(name.startswith("potential@") for name in names) == 3

    def test_strict_tolerance_fails(self, capsys, tmp_path):
        config = tmp_path / "strict.json"
        config.write_text(json.dumps({"tolerances": {"metric": 1e-15}}))
        code = main(["verify", "--model", "exponential1d", "--config", str(config)])
        assert code == 1
        rows = _rows(capsys.readouterr().out)
        failed = [row["check"] for row in rows if row["passed"] == "false"]
        assert failed == ["recover@[1.0].metric"]

    @pytest.mark.slow
    def test_sphere_round(self, capsys):
        code = main(["verify", "--model", "sphere-round", "--workers", "2"])
        assert code == 0
        rows = _rows(capsys.readouterr().out)
        assert all(row["passed"] == "true" for row in rows)
