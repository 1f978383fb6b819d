import csv
import io
import json
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import pytest

from ergomet.cli import main
from ergomet.harness import (
    SCENARIOS,
    ClassMembershipOracle,
    ConfigError,
    ExperimentConfig,
    derive_seed,
    golden_convergents,
    run_scenario,
)
from ergomet.measures import bernoulli, periodic
from ergomet.symbolic import mechanical_point, periodic_point

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


class TestConfig:
    def test_missing_seed_names_field(self):
        with pytest.raises(ConfigError, match="missing config field: seed"):
            ExperimentConfig.from_dict({"scenario": "separation", "kmax": 4})

    def test_missing_required_field(self):
        cfg = ExperimentConfig.from_dict({"scenario": "separation", "seed": 0})
        with pytest.raises(ConfigError, match="missing config field: kmax"):
            run_scenario(cfg)

    def test_unknown_scenario(self):
        with pytest.raises(ConfigError, match="unknown scenario"):
            ExperimentConfig.from_dict({"scenario": "nope", "seed": 0})

    def test_scenario_mismatch(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({"scenario": "closedness", "seed": 0}, "separation")

    @pytest.mark.parametrize("seed", [-1, 1.5, "7"])
    def test_bad_seed(self, seed):
        with pytest.raises(ConfigError, match="seed"):
            ExperimentConfig.from_dict({"scenario": "separation", "seed": seed})

    def test_order_below_two(self):
        cfg = ExperimentConfig.from_dict({"scenario": "separation", "seed": 0, "kmax": 1})
        with pytest.raises(ConfigError, match="need order >= 2"):
            run_scenario(cfg)

    def test_non_reduced_slope(self):
        cfg = ExperimentConfig.from_dict(
            {"scenario": "closedness", "seed": 0, "horizon": 1000, "slopes": ["2/4"]}
        )
        with pytest.raises(ConfigError, match="reduced"):
            run_scenario(cfg)

    def test_non_positive_horizon(self):
        cfg = ExperimentConfig.from_dict({"scenario": "joining-audit", "seed": 0, "horizon": 0})
        with pytest.raises(ConfigError, match="horizon"):
            run_scenario(cfg)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            ExperimentConfig.load(tmp_path / "absent.toml")

    @pytest.mark.parametrize("name", sorted(p.name for p in CONFIGS.glob("*.toml")))
    def test_shipped_configs_load(self, name):
        cfg = ExperimentConfig.load(CONFIGS / name)
        assert cfg.scenario in SCENARIOS


class TestHelpers:
    def test_golden_convergents(self):
        cs = golden_convergents(2, 100)
        assert cs[:4] == [Fraction(1, 2), Fraction(2, 3), Fraction(3, 5), Fraction(5, 8)]
        assert cs[-1] == Fraction(55, 89)

    def test_derive_seed(self):
        assert derive_seed(7, 0) == derive_seed(7, 0)
        assert len({derive_seed(7, r) for r in range(50)}) == 50

    def test_oracle(self):
        o = ClassMembershipOracle("zero-entropy", 4, 0.02)
        assert o.contains(periodic("0110"))
        assert not o.contains(bernoulli(0.5))
        with pytest.raises(ValueError):
            ClassMembershipOracle("positive-entropy")


class TestScenarios:
    def test_separation_rows(self):
        res = run_scenario(ExperimentConfig.load(CONFIGS / "separation.toml"))
        assert res.passed
        assert [r[0] for r in res.rows] == [2, 3, 4, 5, 6]

    def test_joining_audit(self, tmp_path):
        res = run_scenario(ExperimentConfig.load(CONFIGS / "joining_audit.toml"), tmp_path)
        assert res.passed
        assert (tmp_path / "joining_distribution.csv").exists()
        report = json.loads((tmp_path / "joining_audit.json").read_text())
        assert report["marginal_exact"] is True

    def test_parallel_rows_identical(self):
        cfg = ExperimentConfig.load(CONFIGS / "besicovitch_limit.toml")
        assert run_scenario(cfg, jobs=1).csv_text() == run_scenario(cfg, jobs=4).csv_text()

    def test_closedness_explicit_path(self):
        cfg = ExperimentConfig.from_dict({
            "scenario": "closedness",
            "seed": 1,
            "horizon": 20_000,
            "order": 4,
            "slopes": ["144/233", "233/377", "377/610"],
        })
        res = run_scenario(cfg)
        assert [r[1] for r in res.rows[:-1]] == [233, 377, 610]
        assert res.rows[-1][0] == "limit"


class TestCli:
    def test_run_writes_outputs(self, tmp_path, capsys):
        code = main(["run", "separation", "--config", str(CONFIGS / "separation.toml"), "--out", str(tmp_path)])
        assert code == 0
        assert "all checks passed" in capsys.readouterr().out
        assert (tmp_path / "separation.csv").read_text().startswith("k,weakstar")

    def test_run_config_error(self, tmp_path, capsys):
        cfg = tmp_path / "bad.toml"
        cfg.write_text('scenario = "separation"\nkmax = 3\n')
        assert main(["run", "separation", "--config", str(cfg), "--out", str(tmp_path)]) == 2
        assert "missing config field: seed" in capsys.readouterr().err

    def test_besicovitch(self, tmp_path, capsys):
        p = write_json(tmp_path / "p.json", periodic_point([0]).to_json())
        q = write_json(tmp_path / "q.json", periodic_point([1, 0, 0]).to_json())
        out = tmp_path / "trace.csv"
        main(["besicovitch", "--p", p, "--q", q, "--subsequence", "stride:3", "--horizon", "30", "--out", str(out)])
        rows = list(csv.reader(io.StringIO(out.read_text())))
        assert rows[0] == ["n_k", "value"]
        assert [float(v) for _, v in rows[1:]] == [7 / 12] * 10
        main(["besicovitch", "--p", p, "--q", q, "--subsequence", "stride:3", "--horizon", "30",
              "--form", "density", "--out", str(out)])
        assert "0.5" in capsys.readouterr().err

    def test_genericity(self, tmp_path):
        p = write_json(tmp_path / "p.json", mechanical_point(Fraction(1, 3)).to_json())
        m = write_json(tmp_path / "m.json", periodic("001").to_json())
        assert main(["genericity", "--point", p, "--measure", m, "--subsequence", "stride:3",
                     "--horizon", "300", "--out", str(tmp_path / "g.csv")]) == 0
        m2 = write_json(tmp_path / "m2.json", bernoulli(0.5).to_json())
        assert main(["genericity", "--point", p, "--measure", m2, "--horizon", "300",
                     "--out", str(tmp_path / "g2.csv")]) == 1

    def test_dbar(self, tmp_path):
        a = write_json(tmp_path / "a.json", bernoulli(0.5).to_json())
        b = write_json(tmp_path / "b.json", bernoulli(0.8).to_json())
        out, plan = tmp_path / "d.csv", tmp_path / "plan.csv"
        main(["dbar", "--a", a, "--b", b, "--kmax", "3", "--coupling", "monotone", "--out", str(out),
              "--plan-out", str(plan)])
        rows = list(csv.DictReader(io.StringIO(out.read_text())))
        assert [r["k"] for r in rows] == ["1", "2", "3"]
        assert all(abs(float(r["lower"]) - 0.3) < 1e-9 for r in rows)
        assert rows[0]["fano_lower"] == ""
        assert plan.read_text().startswith("word_a,word_b,weight")

    def test_joining(self, tmp_path):
        pts = write_json(tmp_path / "pts.json", [periodic_point([0, 1, 1]).to_json(), periodic_point([0, 1, 0]).to_json()])
        main(["joining", "--points", pts, "--horizon", "300", "-k", "2", "--cylinders", "0,01", "--out", str(tmp_path)])
        report = json.loads((tmp_path / "joining_report.json").read_text())
        assert report["marginal_tv"] == [0.0, 0.0]
        assert all(r["holds"] for r in report["factor_conditions"])

    def test_console_script(self):
        out = subprocess.run([sys.executable, "-m", "ergomet.cli", "--help"], capture_output=True, text=True)
        assert out.returncode == 0
        for verb in ("run", "besicovitch", "genericity", "dbar", "joining"):
            assert verb in out.stdout
