import math
import os
import subprocess
import sys

import pytest

from sklab.cli import main, parse_config
from sklab.errors import ConfigError

MINIMAL = """
[disorder]
kind = gaussian

[model]
beta = 1.0

[study]
study = variance_scaling
"""

FULL = """
[disorder]
kind = two_point
p = 0.2

[model]
beta = 0.7
field_r = 0.1
N_list = 4,6,8
replicas = 50
seed = 7

[study]
study = overlap_curve
t_grid = 0.1,0.3
K_const = 2.0
"""


class TestParseConfig:
    def test_minimal_defaults(self):
        config = parse_config(MINIMAL)
        assert config.spec.kind == "gaussian"
        assert config.n_list == (4, 6, 8, 10, 12, 14, 16)
        assert config.replicas == 4000
        assert config.field_r == 0.0

    def test_full(self):
        config = parse_config(FULL)
        assert config.spec.params["p"] == 0.2
        assert config.n_list == (4, 6, 8)
        assert config.t_grid == (0.1, 0.3)
        assert config.k_const == 2.0

    def test_two_point_p_validation(self):
        with pytest.raises(ConfigError, match=r"p must lie in \(0,1\)"):
            parse_config(FULL.replace("p = 0.2", "p = 1.5"))

    def test_override_precedence(self):
        config = parse_config(MINIMAL, overrides=["beta=0.3"])
        assert config.beta == 0.3

    def test_qualified_override(self):
        config = parse_config(MINIMAL, overrides=["model.seed=99"])
        assert config.seed == 99

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown key 'gamma'"):
            parse_config(MINIMAL + "\ngamma = 2\n")

    def test_unknown_section(self):
        with pytest.raises(ConfigError, match=r"unknown section \[plots\]"):
            parse_config(MINIMAL + "\n[plots]\nstyle = dark\n")

    def test_unknown_override(self):
        with pytest.raises(ConfigError, match="unknown override"):
            parse_config(MINIMAL, overrides=["gamma=2"])

    def test_parse_error_reports_line(self):
        bad = "[disorder]\nkind gaussian\n"
        with pytest.raises(ConfigError, match="line"):
            parse_config(bad)

    def test_bad_number_names_key(self):
        with pytest.raises(ConfigError, match="'beta'"):
            parse_config(MINIMAL.replace("beta = 1.0", "beta = warm"))

    def test_missing_required(self):
        with pytest.raises(ConfigError, match="kind"):
            parse_config("[model]\nbeta = 1.0\n[study]\nstudy = variance_scaling\n")


@pytest.fixture()
def config_file(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text("[disorder]\nkind = gaussian\n\n[model]\nbeta = 1.0\n"
                    "N_list = 4,5\nreplicas = 40\nseed = 13\n\n"
                    "[study]\nstudy = variance_scaling\n")
    return path


class TestRunCommand:
    def test_writes_results_and_manifest(self, config_file, tmp_path):
        out = tmp_path / "out"
        assert main(["run", str(config_file), "--out", str(out)]) == 0
        results = (out / "results.csv").read_text()
        assert results.startswith("study,N,t,lambda,estimate,std_error,extra_json\n")
        assert (out / "manifest.txt").read_text().startswith("config_sha256 = ")

    def test_set_override(self, config_file, tmp_path):
        out = tmp_path / "o2"
        assert main(["run", str(config_file), "--out", str(out),
                     "--set", "replicas=30", "--set", "beta=0.5"]) == 0
        assert "variance_scaling,4," in (out / "results.csv").read_text()

    def test_config_error_exit_code_and_no_partial_output(self, tmp_path):
        bad = tmp_path / "bad.ini"
        bad.write_text("[disorder]\nkind = two_point\np = 1.5\n\n[model]\n"
                       "beta = 1.0\n\n[study]\nstudy = variance_scaling\n")
        out = tmp_path / "o3"
        assert main(["run", str(bad), "--out", str(out)]) == 2
        assert not (out / "results.csv").exists()

    def test_missing_file(self, tmp_path):
        assert main(["run", str(tmp_path / "none.ini"), "--out", str(tmp_path)]) == 2

    def test_cap_violation_is_config_error(self, tmp_path):
        cfg = tmp_path / "cap.ini"
        cfg.write_text("[disorder]\nkind = gaussian\n\n[model]\nbeta = 1.0\n"
                       "N_list = 25\nreplicas = 10\n\n[study]\n"
                       "study = variance_scaling\n")
        assert main(["run", str(cfg), "--out", str(tmp_path / "o4")]) == 2


class TestVerifyCommand:
    def test_fast_suite_passes(self, capsys):
        assert main(["verify", "--fast"]) == 0
        out = capsys.readouterr().out
        assert "all 10 checks passed" in out


class TestWtableCommand:
    def test_columns_match_closed_forms(self, tmp_path):
        cfg = tmp_path / "w.ini"
        cfg.write_text("[disorder]\nkind = uniform\n\n[model]\nbeta = 1.0\n\n"
                       "[study]\nstudy = variance_scaling\n")
        out = tmp_path / "w"
        assert main(["wtable", str(cfg), "--out", str(out)]) == 0
        lines = (out / "wtable.csv").read_text().splitlines()
        assert lines[0] == "t,w,wprime"
        for line in lines[1:]:
            t, w, wp = map(float, line.split(","))
            assert w == pytest.approx(6.0 / math.pi * math.asin(t / 2.0), abs=1e-8)
            assert wp == pytest.approx(
                3.0 / (math.pi * math.sqrt(1.0 - 0.25 * t * t)), abs=1e-6)


class TestBoundtableCommand:
    def test_schema(self, tmp_path):
        cfg = tmp_path / "b.ini"
        cfg.write_text("[disorder]\nkind = gaussian\n\n[model]\nbeta = 1.0\n"
                       "N_list = 4,6\nreplicas = 60\nseed = 3\n\n[study]\n"
                       "study = bound_ratios\n")
        out = tmp_path / "b"
        assert main(["boundtable", str(cfg), "--out", str(out)]) == 0
        lines = (out / "boundtable.csv").read_text().splitlines()
        assert lines[0] == ("N,measured_var,std_error,rhs_general,"
                            "ratio_general,rhs_smooth,ratio_smooth")
        assert len(lines) == 3
        first = lines[1].split(",")
        assert int(first[0]) == 4
        assert float(first[1]) > 0


class TestEntryPoint:
    def test_module_invocation(self, config_file, tmp_path):
        out = tmp_path / "sub"
        proc = subprocess.run(
            [sys.executable, "-m", "sklab.cli", "run", str(config_file),
             "--out", str(out), "--set", "replicas=20"],
            capture_output=True, text=True,
            env={**os.environ, "THREADS": "2"})
        assert proc.returncode == 0, proc.stderr
        assert (out / "results.csv").exists()
