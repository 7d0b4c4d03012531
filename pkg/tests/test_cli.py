import csv
import io
import json

import pytest

from combotox.cli import main
from combotox.model import ModelParams, prob_dlt

SCENARIO2_GRID = {
    "label": "scenario2-4x4",
    "truth": {"type": "working_model", "alpha": 1.1, "beta": 1.1,
              "gamma": 1.0},
    "eta_true": 0.0,
}


def run_cli(argv):
    main(argv)


def parse_csv(text):
    return list(csv.reader(io.StringIO(text)))


class TestParser:
    def test_help_exits_zero(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run_cli(["--help"])
        assert exc.value.code == 0
        out = capsys.readouterr().out
        for name in ("simulate", "scenario-table", "mtd-curve", "serve"):
            assert name in out

    def test_missing_command_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            run_cli([])
        assert exc.value.code == 2


class TestScenarioTable:
    def test_closed_form_grid(self, capsys):
        run_cli(["scenario-table", "--alpha", "1", "--beta", "1",
                 "--gamma", "0", "--levels", "4"])
        rows = parse_csv(capsys.readouterr().out)
        assert rows[0][0] == "x\\y"
        ys = [float(v) for v in rows[0][1:]]
        for row in rows[1:]:
            x = float(row[0])
            for y, cell in zip(ys, row[1:]):
                assert float(cell) == pytest.approx(x + y - x * y, abs=1e-6)

    def test_rectangular_grid_shape(self, capsys):
        run_cli(["scenario-table", "--alpha", "1.1", "--beta", "1.1",
                 "--gamma", "1", "--levels", "4", "--levels2", "6"])
        rows = parse_csv(capsys.readouterr().out)
        assert len(rows) == 5
        assert all(len(r) == 7 for r in rows)

    def test_matches_model_values(self, capsys):
        run_cli(["scenario-table", "--alpha", "1.1", "--beta", "1.1",
                 "--gamma", "1", "--levels", "4"])
        rows = parse_csv(capsys.readouterr().out)
        p = ModelParams(1.1, 1.1, 1.0)
        ys = [float(v) for v in rows[0][1:]]
        for row in rows[1:]:
            x = float(row[0])
            for y, cell in zip(ys, row[1:]):
                assert float(cell) == pytest.approx(prob_dlt(x, y, p),
                                                    abs=1e-6)

    def test_invalid_alpha_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            run_cli(["scenario-table", "--alpha", "0", "--beta", "1",
                     "--gamma", "0"])
        assert exc.value.code == 2

    def test_out_file(self, tmp_path, capsys):
        out = tmp_path / "grid.csv"
        run_cli(["scenario-table", "--alpha", "1", "--beta", "1",
                 "--gamma", "0", "--out", str(out)])
        assert capsys.readouterr().out == ""
        assert out.read_text().startswith("x\\y")


class TestMtdCurve:
    def test_linear_curve_rows(self, capsys):
        run_cli(["mtd-curve", "--alpha", "1", "--beta", "1", "--gamma", "0",
                 "--theta", "0.3", "--grid", "11"])
        rows = parse_csv(capsys.readouterr().out)
        assert rows[0] == ["x", "y", "in_domain"]
        checked = 0
        for x_s, y_s, flag in rows[1:]:
            if flag == "1":
                x = float(x_s)
                assert float(y_s) == pytest.approx((0.3 - x) / (1 - x),
                                                   abs=1e-6)
                checked += 1
        assert checked > 0

    def test_partial_domain_mask(self, capsys):
        run_cli(["mtd-curve", "--alpha", "1.1", "--beta", "1.1",
                 "--gamma", "1", "--theta", "0.3", "--grid", "21"])
        rows = parse_csv(capsys.readouterr().out)[1:]
        flags = [r[2] for r in rows]
        assert "0" in flags and "1" in flags
        # the rectangle's toxic corner is at high doses, so the contour
        # exists only at high x
        assert flags[0] == "0" and flags[-1] == "1"
        for x_s, y_s, flag in rows:
            if flag == "0":
                assert y_s == ""

    def test_invalid_theta_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            run_cli(["mtd-curve", "--alpha", "1", "--beta", "1",
                     "--gamma", "0", "--theta", "0"])
        assert exc.value.code == 2


class TestSimulate:
    def _scenario_file(self, tmp_path):
        path = tmp_path / "s2.json"
        path.write_text(json.dumps(SCENARIO2_GRID))
        return str(path)

    def _run(self, tmp_path, out_name, extra=()):
        out = tmp_path / out_name
        run_cli(["simulate", "--scenario", self._scenario_file(tmp_path),
                 "--replicates", "3", "--seed", "11", "--n-max", "8",
                 "--chain-length", "500", "--burn-in", "150",
                 "--levels", "4", "--out", str(out), *extra])
        return out

    def test_outputs_written(self, tmp_path, capsys):
        out = self._run(tmp_path, "out", extra=["--traces"])
        oc = json.loads((out / "operating_characteristics.json").read_text())
        assert oc["m"] == 3
        assert oc["scenario"]["label"] == "scenario2-4x4"
        assert "discrete_selection" in oc
        safety = parse_csv((out / "safety.csv").read_text())
        assert safety[0][0] == "scenario"
        assert len(safety) == 2
        selection = parse_csv((out / "selection.csv").read_text())
        assert selection[0][2:] == ["pct_ge_25", "pct_ge_50", "pct_ge_75",
                                    "pct_eq_100"]
        traces = json.loads((out / "trials.json").read_text())
        assert len(traces) == 3
        assert all(t["n_treated"] <= 8 for t in traces)
        assert "avg%DLT" in capsys.readouterr().out

    def test_byte_deterministic(self, tmp_path, capsys):
        out1 = self._run(tmp_path, "a")
        out2 = self._run(tmp_path, "b")
        capsys.readouterr()
        assert (out1 / "operating_characteristics.json").read_bytes() \
            == (out2 / "operating_characteristics.json").read_bytes()
        assert (out1 / "safety.csv").read_bytes() \
            == (out2 / "safety.csv").read_bytes()

    def test_missing_scenario_exits_2(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            run_cli(["simulate", "--scenario", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path / "o")])
        assert exc.value.code == 2

    def test_malformed_scenario_exits_2(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{\"truth\": {\"type\": \"mystery\"}}")
        with pytest.raises(SystemExit) as exc:
            run_cli(["simulate", "--scenario", str(bad),
                     "--out", str(tmp_path / "o")])
        assert exc.value.code == 2

    def test_bad_theta_exits_2(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            run_cli(["simulate", "--scenario", self._scenario_file(tmp_path),
                     "--theta", "1.5", "--out", str(tmp_path / "o")])
        assert exc.value.code == 2
