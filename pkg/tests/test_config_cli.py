import json

import numpy as np
import pytest

from eprsim import cli, config


class TestParseSetting:
    def test_unit_triple(self):
        out = config.parse_setting("0.6,0.8,0")
        np.testing.assert_allclose(out, [0.6, 0.8, 0.0], atol=1e-15)

    def test_non_unit_rejected(self):
        with pytest.raises(config.ConfigError):
            config.parse_setting("1,1,0")

    def test_non_unit_normalized_on_request(self):
        out = config.parse_setting("2,0,0", normalize=True)
        np.testing.assert_allclose(out, [1.0, 0.0, 0.0], atol=0)

    def test_wrong_arity(self):
        with pytest.raises(config.ConfigError):
            config.parse_setting("1,0")

    def test_not_a_number(self):
        with pytest.raises(config.ConfigError):
            config.parse_setting("a,b,c")


class TestExperimentConfig:
    def test_defaults_valid(self):
        cfg = config.ExperimentConfig(n=4)
        assert cfg.n == 4

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"n": 3},
            {"interval_count": 0},
            {"pair_count": 0},
            {"trials": 0},
        ],
    )
    def test_invalid_rejected(self, kwargs):
        with pytest.raises(config.ConfigError):
            config.ExperimentConfig(**{"n": 4, **kwargs})


class TestLoadConfig:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(
            "# experiment\n"
            "n = 8\n"
            "L = 3\n"
            "layers = 25\n"
            "trials = 1000\n"
            "seed = 42\n"
            "tie_weights = true\n"
            "settings = 1,0,0; 0.6,0.8,0\n"
        )
        cfg = config.load_config(path)
        assert cfg.n == 8
        assert cfg.interval_count == 3
        assert cfg.pair_count == 25
        assert cfg.trials == 1000
        assert cfg.seed == 42
        assert cfg.tie_weights is True
        assert len(cfg.settings) == 2

    def test_missing_n_named(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("trials = 10\n")
        with pytest.raises(config.ConfigError, match="'n'"):
            config.load_config(path)

    def test_small_n_cites_requirement(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("n = 3\n")
        with pytest.raises(config.ConfigError, match=">= 4"):
            config.load_config(path)

    def test_malformed_line_names_position(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("n = 4\nnot a pair\n")
        with pytest.raises(config.ConfigError, match=":2"):
            config.load_config(path)

    def test_unknown_key_named(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("n = 4\nmystery = 7\n")
        with pytest.raises(config.ConfigError, match="mystery"):
            config.load_config(path)


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestCliVerify:
    def test_orthogonal_settings(self, capsys):
        code, out, _ = run_cli(capsys, "verify", "--n", "4", "--a", "1,0,0", "--b", "0,1,0")
        assert code == 0
        doc = json.loads(out)
        assert doc["abs_error"] <= 1e-12
        assert doc["mass"] == pytest.approx(1.0, abs=1e-12)
        assert doc["schema_versions"]["universe"] == "layer-universe/1"

    def test_genuine_variant_block(self, capsys):
        code, out, _ = run_cli(
            capsys, "verify", "--n", "4", "--a", "1,0,0", "--b", "0,1,0", "--genuine-variant"
        )
        doc = json.loads(out)
        assert doc["genuine_variant"]["total"] == pytest.approx(2.0, abs=1e-12)
        assert doc["genuine_variant"]["is_unit_mass"] is False

    def test_bad_setting_is_validation_error(self, capsys):
        code, _, err = run_cli(capsys, "verify", "--n", "4", "--a", "1,1,0", "--b", "0,1,0")
        assert code == 2
        assert "norm" in err


class TestCliSimulate:
    def test_zero_trials_rejected(self, capsys):
        code, _, _ = run_cli(capsys, "simulate", "--angle", "45", "--trials", "0", "--seed", "1")
        assert code == 2

    def test_replay_byte_identical(self, capsys):
        args = ("simulate", "--angle", "45", "--trials", "20000", "--seed", "9")
        code1, out1, _ = run_cli(capsys, *args)
        code2, out2, _ = run_cli(capsys, *args)
        assert code1 == code2 == 0
        assert out1 == out2

    def test_report_embeds_config(self, capsys):
        _, out, _ = run_cli(capsys, "simulate", "--angle", "30", "--trials", "5000", "--seed", "2")
        doc = json.loads(out)
        assert doc["config"]["seed"] == 2
        assert doc["config"]["trials"] == 5000
        assert doc["trials"] == 5000

    def test_config_file_drives_run(self, capsys, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(
            "n = 4\nL = 2\nlayers = 10\ntrials = 2000\nseed = 77\n"
            "settings = 1,0,0; 0.6,0.8,0\n"
        )
        code, out, _ = run_cli(capsys, "simulate", "--config", str(path))
        assert code == 0
        doc = json.loads(out)
        assert doc["trials"] == 2000
        assert doc["exact_target"] == pytest.approx(-0.6, abs=1e-12)

    def test_flags_override_config(self, capsys, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("n = 4\ntrials = 2000\nseed = 77\nsettings = 1,0,0; 0.6,0.8,0\n")
        code, out, _ = run_cli(
            capsys, "simulate", "--config", str(path), "--trials", "500", "--angle", "60"
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["trials"] == 500
        assert doc["exact_target"] == pytest.approx(-0.5, abs=1e-12)

    def test_missing_seed_is_validation_error(self, capsys):
        code, _, err = run_cli(capsys, "simulate", "--angle", "45", "--trials", "100")
        assert code == 2
        assert "seed" in err


class TestCliLayersAnalyze:
    def test_layers_then_analyze(self, capsys, tmp_path):
        upath = tmp_path / "uni.json"
        code, out, _ = run_cli(
            capsys,
            "layers", "--n", "4", "--layers", "10", "--L", "2",
            "--seed", "7", "--universe", str(upath),
        )
        assert code == 0
        assert upath.exists()
        code, out, _ = run_cli(
            capsys,
            "analyze", "--universe", str(upath),
            "--a", "1,0,0", "--b", "0.6,0.8,0", "--c", "0,0,1", "--witness",
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["tv_cond_indep"] <= 1e-12
        assert doc["conditional_bias"]["A"] <= 1e-12
        assert doc["witness_bias"]["A"] > 0.1
        assert doc["pair_expectation"] == pytest.approx(-0.6, abs=1e-12)

    def test_universe_round_trip_through_cli(self, capsys, tmp_path):
        upath = tmp_path / "uni.json"
        run_cli(
            capsys,
            "layers", "--n", "4", "--layers", "3", "--L", "2",
            "--seed", "11", "--universe", str(upath),
        )
        first = upath.read_bytes()
        run_cli(
            capsys,
            "layers", "--n", "4", "--layers", "3", "--L", "2",
            "--seed", "11", "--universe", str(upath),
        )
        assert upath.read_bytes() == first


class TestCliChsh:
    def test_angle_form(self, capsys):
        code, out, _ = run_cli(
            capsys, "chsh", "--angles", "0,90,45,135", "--trials", "20000", "--seed", "3"
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["s_value"] == pytest.approx(2.8284, abs=0.1)

    def test_wrong_angle_count(self, capsys):
        code, _, err = run_cli(capsys, "chsh", "--angles", "0,90", "--trials", "10", "--seed", "3")
        assert code == 2


class TestCliPoisson:
    def test_report_and_csv(self, capsys, tmp_path):
        csv_path = tmp_path / "decay.csv"
        code, out, _ = run_cli(
            capsys,
            "poisson", "--theta", "1", "--k", "20000", "--labels", "20",
            "--seed", "5", "--csv", str(csv_path),
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["uniform_ok"] is True
        assert doc["extreme_exact"] is False or doc["extreme_lower"] <= doc["extreme_upper"]
        rows = csv_path.read_text().strip().splitlines()
        assert rows[0] == "k,star_discrepancy"
        assert len(rows) >= 3

    def test_bad_theta(self, capsys):
        code, _, _ = run_cli(
            capsys, "poisson", "--theta", "-1", "--k", "100", "--labels", "5", "--seed", "1"
        )
        assert code == 2


class TestCliSplines:
    def test_residual_summary(self, capsys):
        code, out, _ = run_cli(capsys, "splines", "--n", "4", "--grid", "51")
        assert code == 0
        doc = json.loads(out)
        assert doc["residual_min"] >= -1e-12
        assert doc["residual_max"] <= doc["defect_bound"] + 1e-12
        assert doc["partition_max_error"] <= 1e-12
        assert doc["marsden_max_error"] <= 1e-10


def test_unknown_subcommand_exits_2(capsys):
    with pytest.raises(SystemExit) as excinfo:
        cli.main(["frobnicate"])
    assert excinfo.value.code == 2
