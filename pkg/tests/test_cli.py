import json
from pathlib import Path

import numpy as np
import pytest

from nlheat.cli import main
from nlheat.config import load_config
from nlheat.errors import ConfigError

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def write_config(tmp_path, text, name="problem.toml"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


MINIMAL = """
[domain]
L = 1.0
N = 24

[time]
T = 1.0
M = 64

[exponents]
p = 4.0
q = 2.0

[nonlinearity]
name = "zero"

[condition]
variant = "periodic"

[solver]
R_ball = 1.0
R_outer = 2.0
"""


class TestConfigValidation:
    def test_minimal_config_loads(self, tmp_path):
        cfg = load_config(write_config(tmp_path, MINIMAL))
        assert cfg.domain.n_interior == 24
        assert cfg.solver.stepper == "exponential_euler"
        assert cfg.n_list == (8, 16, 32, 64)

    def test_unknown_key_is_fatal(self, tmp_path):
        bad = MINIMAL + "\n[solver.extra]\nfoo = 1\n"
        with pytest.raises(ConfigError):
            load_config(write_config(tmp_path, bad))
        bad2 = MINIMAL.replace("R_ball = 1.0", "R_ball = 1.0\ntypo_key = 3")
        with pytest.raises(ConfigError):
            load_config(write_config(tmp_path, bad2))

    def test_exponent_order_enforced(self, tmp_path):
        bad = MINIMAL.replace("p = 4.0", "p = 2.0")
        with pytest.raises(ConfigError, match="2 <= q < p"):
            load_config(write_config(tmp_path, bad))

    def test_high_dimension_exponent_constraint(self, tmp_path):
        bad = MINIMAL.replace("N = 24", "N = 24\nk_dim = 12")
        with pytest.raises(ConfigError, match="k_dim/2"):
            load_config(write_config(tmp_path, bad))

    def test_growth_shape_constraints(self, tmp_path):
        bad = MINIMAL.replace('name = "zero"', 'name = "damped_cubic"')
        with pytest.raises(ConfigError, match="p = 3q"):
            load_config(write_config(tmp_path, bad))

    def test_shipped_configs_load(self):
        for path in sorted(CONFIG_DIR.glob("*.toml")):
            load_config(path)

    def test_remaining_catalogue_entries(self, tmp_path):
        ci = MINIMAL.replace(
            'name = "zero"',
            'name = "chafee_infante"\n[nonlinearity.params]\nlam = 2.0').replace(
            "p = 4.0", "p = 6.0")
        cfg = load_config(write_config(tmp_path, ci))
        h = cfg.build_nonlinearity()
        assert h.name == "chafee_infante"
        assert not h.claims.sign_condition

        lin = MINIMAL.replace('name = "zero"',
                              'name = "linear"\n[nonlinearity.params]\nc = 2.5')
        h2 = load_config(write_config(tmp_path, lin, "lin.toml")).build_nonlinearity()
        assert h2.claims.monotone

        anti = MINIMAL.replace('variant = "periodic"', 'variant = "antiperiodic"')
        cond = load_config(write_config(tmp_path, anti, "anti.toml")).build_condition()
        from nlheat import Antiperiodic

        assert isinstance(cond, Antiperiodic)


class TestSolveCommand:
    def test_zero_problem(self, tmp_path, monkeypatch):
        monkeypatch.setenv("NLHEAT_OUTDIR", str(tmp_path / "out"))
        code = main(["solve", write_config(tmp_path, MINIMAL)])
        assert code == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["result"]["converged"] is True
        # the echoed config carries every expanded default
        assert report["config"]["solver"]["stepper"] == "exponential_euler"
        assert report["config"]["verification"]["n_list"] == [8, 16, 32, 64]
        assert (tmp_path / "out" / "residuals.csv").exists()
        rows = (tmp_path / "out" / "trajectory.csv").read_text().strip().splitlines()
        assert rows[0] == "t,x,u"
        assert len(rows) == 1 + 65 * 24
        assert all(row.endswith(",0") for row in rows[1:])

    def test_invalid_exponents_exit_2(self, tmp_path, capsys):
        bad = MINIMAL.replace("p = 4.0", "p = 2.0")
        code = main(["solve", write_config(tmp_path, bad)])
        assert code == 2
        assert "2 <= q < p" in capsys.readouterr().err

    def test_solver_failure_exit_3_with_report(self, tmp_path, monkeypatch):
        monkeypatch.setenv("NLHEAT_OUTDIR", str(tmp_path / "out"))
        slow = MINIMAL.replace("R_ball = 1.0", "R_ball = 1.0\npicard_max_iter = 1")
        slow = slow.replace('name = "zero"',
                            'name = "forced_linear"\n'
                            '[nonlinearity.params]\nc = 0.0\n'
                            '[nonlinearity.params.forcing]\n'
                            'name = "sine_mode"\namplitude = 1.0\nmode = 1')
        code = main(["solve", write_config(tmp_path, slow)])
        assert code == 3
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["result"]["converged"] is False
        assert report["result"]["failure"] == "max_iter"

    def test_csv_floats_round_trip(self, tmp_path, monkeypatch):
        monkeypatch.setenv("NLHEAT_OUTDIR", str(tmp_path / "out"))
        cfg = write_config(tmp_path, MINIMAL.replace('name = "zero"',
                           'name = "linear"\n[nonlinearity.params]\nc = 1.0'))
        assert main(["solve", cfg]) == 0
        lines = (tmp_path / "out" / "norms.csv").read_text().strip().splitlines()[1:]
        values = [float(line.split(",")[0]) for line in lines]
        grid = np.linspace(0.0, 1.0, 65)
        assert values == [float(f"{v:.17g}") for v in grid]
        assert np.array_equal(np.array(values), grid)


class TestVerifyCommand:
    def test_healthy_problem_all_pass(self, tmp_path, monkeypatch):
        monkeypatch.setenv("NLHEAT_OUTDIR", str(tmp_path / "out"))
        code = main(["verify", str(CONFIG_DIR / "cubic_fixed.toml")])
        assert code == 0
        doc = json.loads((tmp_path / "out" / "verify.json").read_text())
        assert doc["all_pass"] is True
        names = {c["name"] for c in doc["checks"]}
        assert {"growth_bound", "sign_condition", "monotone", "nonlocal_bound",
                "transversality", "vainberg", "smoothing_inequality",
                "semigroup_oracle_agreement", "semigroup_positivity",
                "benilan"} <= names

    def test_flipped_sign_fails_with_witness(self, tmp_path, monkeypatch):
        monkeypatch.setenv("NLHEAT_OUTDIR", str(tmp_path / "out"))
        flipped = MINIMAL.replace(
            'name = "zero"',
            'name = "odd_power"\n[nonlinearity.params]\nalpha = 3\ncoefficient = 1.0')
        flipped = flipped.replace("p = 4.0", "p = 6.0")
        code = main(["verify", write_config(tmp_path, flipped)])
        assert code == 4
        doc = json.loads((tmp_path / "out" / "verify.json").read_text())
        sign = next(c for c in doc["checks"] if c["name"] == "sign_condition")
        assert sign["pass"] is False
        assert "witness" in sign and sign["witness"]["margin"] > 0

    def test_reports_are_deterministic(self, tmp_path, monkeypatch):
        docs = []
        for run in ("a", "b"):
            monkeypatch.setenv("NLHEAT_OUTDIR", str(tmp_path / run))
            assert main(["verify", write_config(tmp_path, MINIMAL)]) == 0
            doc = json.loads((tmp_path / run / "verify.json").read_text())
            del doc["timestamp"]
            docs.append(json.dumps(doc, sort_keys=True))
        assert docs[0] == docs[1]

    def test_seed_override_recorded(self, tmp_path, monkeypatch):
        monkeypatch.setenv("NLHEAT_OUTDIR", str(tmp_path / "out"))
        assert main(["verify", write_config(tmp_path, MINIMAL), "--seed", "7"]) == 0
        doc = json.loads((tmp_path / "out" / "verify.json").read_text())
        assert doc["seeds"] == [7]


class TestFamilySweepExtend:
    def test_family_zero_problem(self, tmp_path, monkeypatch):
        monkeypatch.setenv("NLHEAT_OUTDIR", str(tmp_path / "out"))
        code = main(["family", str(CONFIG_DIR / "zero_periodic.toml")])
        assert code == 0
        lines = (tmp_path / "out" / "family.csv").read_text().strip().splitlines()
        assert lines[0] == "n,gap"
        assert [line.split(",")[1] for line in lines[1:]] == ["0", "0", "0"]
        doc = json.loads((tmp_path / "out" / "family.json").read_text())
        assert doc["family"]["nonincreasing"] is True

    def test_family_forced_linear_nonzero_gaps(self, tmp_path, monkeypatch):
        monkeypatch.setenv("NLHEAT_OUTDIR", str(tmp_path / "out"))
        cfg_text = MINIMAL.replace("L = 1.0", "L = 3.141592653589793").replace(
            'name = "zero"',
            'name = "forced_linear"\n'
            '[nonlinearity.params]\nc = 0.0\n'
            '[nonlinearity.params.forcing]\n'
            'name = "sine_mode"\namplitude = 1.0\nmode = 1').replace(
            "R_ball = 1.0", "R_ball = 2.0").replace("R_outer = 2.0", "R_outer = 4.0")
        assert main(["family", write_config(tmp_path, cfg_text)]) == 0
        doc = json.loads((tmp_path / "out" / "family.json").read_text())
        gaps = [row["gap"] for row in doc["family"]["table"]]
        assert all(g > 0 for g in gaps)
        assert doc["family"]["nonincreasing"] is True

    def test_sweep_zero_problem(self, tmp_path, monkeypatch):
        monkeypatch.setenv("NLHEAT_OUTDIR", str(tmp_path / "out"))
        code = main(["sweep", str(CONFIG_DIR / "zero_periodic.toml")])
        assert code == 0
        doc = json.loads((tmp_path / "out" / "sweep.json").read_text())
        assert doc["sweep"]["touched_outer"] is False

    def test_extend_periodic_run(self, tmp_path, monkeypatch):
        monkeypatch.setenv("NLHEAT_OUTDIR", str(tmp_path / "out"))
        code = main(["extend", str(CONFIG_DIR / "manufactured_periodic.toml"),
                     "--periods", "3"])
        assert code == 0
        doc = json.loads((tmp_path / "out" / "extend.json").read_text())
        assert doc["extend"]["pass"] is True
        assert doc["extend"]["periodicity_exact"] is True
        lines = (tmp_path / "out" / "extend.csv").read_text().strip().splitlines()
        assert lines[0] == "period,deviation"
        assert len(lines) == 3

    def test_extend_rejects_nonperiodic_base(self, tmp_path, monkeypatch):
        # a fixed-condition solve generally ends away from its start
        monkeypatch.setenv("NLHEAT_OUTDIR", str(tmp_path / "out"))
        code = main(["extend", str(CONFIG_DIR / "cubic_fixed.toml"),
                     "--periods", "3"])
        assert code == 3
        doc = json.loads((tmp_path / "out" / "extend.json").read_text())
        assert "error" in doc


MULTIPOINT = """
[domain]
L = 1.0
N = 24

[time]
T = 1.0
M = 64

[exponents]
p = 4.0
q = 2.0

[nonlinearity]
name = "zero"

[condition]
variant = "multipoint"

[condition.params]
c = [0.4, 0.6]
t_points = [0.5, 1.0]

[condition.params.gamma]
name = "tanh"

[solver]
R_ball = 1.0
R_outer = 2.0
"""


class TestConditionConfigs:
    def test_multipoint_config_round_trip(self, tmp_path, monkeypatch):
        monkeypatch.setenv("NLHEAT_OUTDIR", str(tmp_path / "out"))
        assert main(["verify", write_config(tmp_path, MULTIPOINT)]) == 0

    def test_overweight_multipoint_fails_verification(self, tmp_path, monkeypatch):
        monkeypatch.setenv("NLHEAT_OUTDIR", str(tmp_path / "out"))
        bad = MULTIPOINT.replace("c = [0.4, 0.6]", "c = [2.0, 0.6]")
        assert main(["verify", write_config(tmp_path, bad)]) == 4
        doc = json.loads((tmp_path / "out" / "verify.json").read_text())
        entry = next(c for c in doc["checks"] if c["name"] == "nonlocal_bound")
        assert entry["pass"] is False and "witness" in entry

    def test_integral_abs_weight_config(self, tmp_path, monkeypatch):
        monkeypatch.setenv("NLHEAT_OUTDIR", str(tmp_path / "out"))
        integral = MULTIPOINT.replace(
            'variant = "multipoint"', 'variant = "integral"').replace(
            "c = [0.4, 0.6]\nt_points = [0.5, 1.0]\n\n"
            "[condition.params.gamma]\nname = \"tanh\"",
            "[condition.params.eta]\nname = \"abs_linear\"\n\n"
            "[condition.params.eta.alpha]\nname = \"constant\"\nvalue = 0.9")
        assert main(["solve", write_config(tmp_path, integral)]) == 0

    def test_off_grid_multipoint_time_rejected(self, tmp_path, capsys):
        bad = MULTIPOINT.replace("t_points = [0.5, 1.0]",
                                 "t_points = [0.5001, 1.0]")
        code = main(["solve", write_config(tmp_path, bad),
                     "--outdir", str(tmp_path / "out")])
        assert code == 2
        assert "time grid" in capsys.readouterr().err


class TestReportCommand:
    def test_pretty_print(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("NLHEAT_OUTDIR", str(tmp_path / "out"))
        assert main(["solve", write_config(tmp_path, MINIMAL)]) == 0
        capsys.readouterr()
        assert main(["report", str(tmp_path / "out" / "report.json")]) == 0
        text = capsys.readouterr().out
        assert "command:   solve" in text
        assert "converged: True" in text

    def test_unreadable_report_exit_2(self, tmp_path):
        assert main(["report", str(tmp_path / "missing.json")]) == 2


class TestOutdirPrecedence:
    def test_env_overrides_flag(self, tmp_path, monkeypatch):
        monkeypatch.setenv("NLHEAT_OUTDIR", str(tmp_path / "env"))
        code = main(["solve", write_config(tmp_path, MINIMAL),
                     "--outdir", str(tmp_path / "flag")])
        assert code == 0
        assert (tmp_path / "env" / "report.json").exists()
        assert not (tmp_path / "flag").exists()

    def test_flag_used_without_env(self, tmp_path, monkeypatch):
        monkeypatch.delenv("NLHEAT_OUTDIR", raising=False)
        code = main(["solve", write_config(tmp_path, MINIMAL),
                     "--outdir", str(tmp_path / "flag")])
        assert code == 0
        assert (tmp_path / "flag" / "report.json").exists()
