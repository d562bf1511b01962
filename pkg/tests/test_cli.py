import json
import math
import re
import subprocess
import sys

import numpy as np
import pytest

from mixtest import limit_dist
from mixtest.cli import InputError, RunRecord, main, read_data


@pytest.fixture
def datafile(tmp_path):
    def make(text, name="data.txt"):
        p = tmp_path / name
        p.write_text(text)
        return p
    return make


@pytest.fixture
def mixture_file(datafile):
    rng = np.random.default_rng(5)
    x = np.concatenate([rng.normal(0, 1, 60), rng.normal(2.5, 1, 40)])
    return datafile("\n".join(repr(float(v)) for v in x) + "\n")


class TestReadData:
    def test_one_value_per_line(self, datafile):
        s = read_data(datafile("1\n2\n3\n"))
        assert s.n == 3 and s.mean == 2.0
        assert s.var_n == pytest.approx(2.0 / 3.0, abs=1e-15)

    def test_header_selector_matches_position(self, datafile):
        plain = read_data(datafile("1\n2\n3\n", "a.txt"))
        named = read_data(datafile("y\n1\n2\n3\n", "b.txt"), column="y")
        np.testing.assert_array_equal(plain.values, named.values)

    def test_bad_first_line_names_line(self, datafile):
        with pytest.raises(InputError, match="line 1"):
            read_data(datafile("a\n1\n"))

    def test_bad_later_line(self, datafile):
        with pytest.raises(InputError, match="line 4"):
            read_data(datafile("1\n2\n\nx\n"))

    def test_csv_columns(self, datafile):
        f = datafile("id,y,z\n1,4.0,9\n2,5.5,8\n3,7.0,1\n", "t.csv")
        assert list(read_data(f, column="z").values) == [9.0, 8.0, 1.0]
        assert list(read_data(f, column="1").values) == [4.0, 5.5, 7.0]
        with pytest.raises(InputError, match="columns"):
            read_data(f)
        with pytest.raises(InputError, match="no column"):
            read_data(f, column="w")

    def test_whitespace_table(self, datafile):
        f = datafile("1 10\n2 20\n4 40\n")
        assert list(read_data(f, column=1).values) == [10.0, 20.0, 40.0]

    def test_transforms(self, datafile):
        f = datafile("1\n4\n9\n")
        assert list(read_data(f, transform="sqrt").values) == [1.0, 2.0, 3.0]
        np.testing.assert_allclose(read_data(f, transform="log").values, np.log([1, 4, 9]))

    @pytest.mark.parametrize("text, transform, match", [
        ("", "none", "empty"),
        ("5\n", "none", "at least 2"),
        ("2\n2\n2\n", "none", "zero variance"),
        ("1\n0\n3\n", "log", "positive"),
        ("1\n-1\n3\n", "sqrt", "non-negative"),
    ])
    def test_errors(self, datafile, text, transform, match):
        with pytest.raises(InputError, match=match):
            read_data(datafile(text), transform=transform)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError, match="cannot read"):
            read_data(tmp_path / "nope.txt")


class TestTestCommand:
    def test_config_echo_and_json(self, mixture_file, capsys):
        argv = ["test", "--data", str(mixture_file), "--variance", "equal",
                "--alphas", "0.1,0.3,0.5", "--K", "2", "--json"]
        assert main(argv) == 0
        rec = json.loads(capsys.readouterr().out)
        assert rec["command"] == argv
        c = rec["config"]
        assert c["alphas"] == [0.1, 0.3, 0.5] and c["K"] == 2 and c["variance"] == "equal"
        assert c["delta"] == pytest.approx(2 * math.log(0.6))
        assert c["sigma_penalty"]["coefficient"] == 1.0
        assert rec["p_value"] == pytest.approx(limit_dist.pvalue_equal(rec["statistic"], c["delta"]))
        assert len(rec["m_trajectory"]) == 3 and len(rec["m_trajectory"][0]) == 2

    def test_unequal_pvalue(self, mixture_file, capsys):
        assert main(["test", "--data", str(mixture_file), "--variance", "unequal", "--json"]) == 0
        rec = json.loads(capsys.readouterr().out)
        assert rec["p_value"] == pytest.approx(math.exp(-rec["statistic"] / 2))
        assert rec["config"]["limit_law"] == "chi2_2" and rec["config"]["delta"] is None

    def test_reported_pvalue_mappings(self):
        assert round(limit_dist.pvalue_equal(6.827, 2 * math.log(0.6)), 3) == 0.010
        assert round(limit_dist.pvalue_unequal(13.301), 4) == 0.0013

    def test_text_and_json_agree(self, mixture_file, capsys):
        base = ["test", "--data", str(mixture_file), "--variance", "equal", "--comparator", "mlrt",
                "--comparator", "lrt"]
        assert main(base + ["--json"]) == 0
        rec = json.loads(capsys.readouterr().out)
        assert main(base + ["--text"]) == 0
        text = capsys.readouterr().out
        for v in [rec["statistic"], rec["p_value"], *rec["m_trajectory"][1],
                  rec["comparators"]["lrt"]["statistic"],
                  rec["comparators"]["lrt"]["reference_pvalues"]["chi2_6"]]:
            assert repr(v) in text
        assert set(rec["comparators"]["lrt"]["reference_pvalues"]) == {"chi2_2", "chi2_3", "chi2_4", "chi2_6"}

    def test_record_round_trip(self, mixture_file, capsys):
        main(["test", "--data", str(mixture_file), "--variance", "unequal", "--json"])
        out = capsys.readouterr().out
        rec = RunRecord.from_json(out)
        assert RunRecord.from_json(rec.to_json()) == rec
        assert rec.to_json() == out.strip()

    def test_refined_preset(self, mixture_file, capsys):
        assert main(["test", "--data", str(mixture_file), "--variance", "equal",
                     "--refined-alphas", "--json"]) == 0
        rec = json.loads(capsys.readouterr().out)
        assert rec["config"]["alphas"] == [0.01, 0.025, 0.05, 0.1]
        assert rec["config"]["limit_law"] == "chi2_1 + delta"
        d = rec["config"]["delta"]
        assert rec["p_value"] == pytest.approx(limit_dist.pvalue_shifted(rec["statistic"], d))

    @pytest.mark.parametrize("extra", [
        ["--variance", "equal", "--alphas", "0.1,0.3"],
        ["--variance", "equal", "--alphas", "0.1,x"],
        ["--variance", "equal", "--alphas", "0.5", "--refined-alphas"],
        ["--variance", "unequal", "--refined-alphas"],
        ["--variance", "unequal", "--comparator", "lrt"],
        ["--variance", "equal", "--K", "0"],
        ["--variance", "sideways"],
        ["--variance", "equal", "--json", "--text"],
    ])
    def test_usage_errors(self, mixture_file, extra, capsys):
        assert main(["test", "--data", str(mixture_file), *extra]) == 2
        assert capsys.readouterr().err

    def test_bad_data_exit_code(self, datafile, capsys):
        assert main(["test", "--data", str(datafile("a\n1\n")), "--variance", "equal"]) == 2
        assert "line 1" in capsys.readouterr().err


class TestSimulateCommand:
    def test_unknown_model(self, capsys):
        code = main(["simulate", "power", "--method", "em-equal", "--n", "50", "--reps", "1000",
                     "--seed", "1", "--model", "XIII"])
        assert code == 2
        assert "XIII" in capsys.readouterr().err

    def test_power_needs_model(self, capsys):
        assert main(["simulate", "power", "--method", "em-equal", "--n", "50", "--reps", "1000",
                     "--seed", "1"]) == 2

    def test_params_and_model_conflict(self):
        assert main(["simulate", "power", "--method", "em-equal", "--n", "50", "--reps", "1000",
                     "--seed", "1", "--model", "I", "--params", "0.5,0,0,1,1"]) == 2

    def test_too_few_reps(self):
        assert main(["simulate", "type1", "--method", "em-equal", "--n", "50", "--reps", "10",
                     "--seed", "1"]) == 2

    def test_model_resolution(self, capsys):
        code = main(["simulate", "power", "--method", "em-unequal", "--n", "20", "--reps", "1000",
                     "--seed", "3", "--model", "I", "--critical", "asymptotic", "--workers", "1",
                     "--json"])
        assert code == 0
        rep = json.loads(capsys.readouterr().out)
        m = rep["model"]
        assert (m["one_minus_alpha"], m["theta1"], m["theta2"], m["sigma1"], m["sigma2"]) == \
            (0.50, -1.15, 1.20, 1.00, 1.00)
        assert rep["critical_source"] == "asymptotic"
        assert rep["levels"][0]["level"] == 0.05

    def test_type1_text(self, capsys):
        code = main(["simulate", "type1", "--method", "em-unequal", "--n", "20", "--reps", "1000",
                     "--seed", "3", "--levels", "0.1,0.05", "--workers", "1"])
        assert code == 0
        out = capsys.readouterr().out
        assert out.startswith("type1 study: em-unequal")
        assert len(re.findall(r"^\s+\d+\.\d\d%", out, flags=re.M)) == 2


def test_module_entry_point(tmp_path):
    f = tmp_path / "d.txt"
    f.write_text("1\n2\n4\n8\n3\n")
    proc = subprocess.run([sys.executable, "-m", "mixtest", "test", "--data", str(f),
                           "--variance", "equal", "--json"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["config"]["n"] == 5
    proc = subprocess.run([sys.executable, "-m", "mixtest", "frobnicate"], capture_output=True, text=True)
    assert proc.returncode == 2
