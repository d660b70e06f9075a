import dataclasses
import hashlib
import json
import shutil
from datetime import date
from pathlib import Path

import pytest

import errmap
from errmap.calibration import CALIBRATABLE_FIELDS
from errmap.cli import main
from errmap.config import (
    EvalConfig,
    GPConfig,
    RunConfig,
    load_config,
    reference_text,
)
from errmap.errors import ConfigError


def write_ini(tmp_path, text):
    p = tmp_path / "cfg.ini"
    p.write_text(text)
    return p


class TestLoadConfig:
    def test_defaults(self):
        assert load_config(None, env={}) == RunConfig()

    def test_default_scale(self):
        cfg = RunConfig()
        assert cfg.scenario.substations == 15
        assert cfg.scenario.days == 85
        assert cfg.scenario.start_date == date(2021, 9, 1)
        assert cfg.eval.seeds == (0, 1, 2, 3, 4)

    def test_typed_parsing(self, tmp_path):
        ini = write_ini(
            tmp_path,
            "[scenario]\ndays = 40\nmult_noise = 0.05\nstart_date = 2022-01-15\n"
            "[features]\nga_day_matched = false\n"
            "[eval]\nseeds = 2, 5\n"
            "[train]\nfeatures = hdd,mean_temp\n",
        )
        cfg = load_config(ini, env={})
        assert cfg.scenario.days == 40
        assert cfg.scenario.mult_noise == 0.05
        assert cfg.scenario.start_date == date(2022, 1, 15)
        assert cfg.features.ga_day_matched is False
        assert cfg.eval.seeds == (2, 5)
        assert cfg.train.features == ("hdd", "mean_temp")

    def test_unknown_section(self, tmp_path):
        ini = write_ini(tmp_path, "[nope]\nx = 1\n")
        with pytest.raises(ConfigError, match="unknown section"):
            load_config(ini, env={})

    def test_unknown_key(self, tmp_path):
        ini = write_ini(tmp_path, "[scenario]\ndayz = 1\n")
        with pytest.raises(ConfigError, match="unknown key"):
            load_config(ini, env={})

    @pytest.mark.parametrize(
        "line",
        ["days = soon", "mult_noise = none", "start_date = tomorrow"],
    )
    def test_bad_values(self, tmp_path, line):
        ini = write_ini(tmp_path, f"[scenario]\n{line}\n")
        with pytest.raises(ConfigError, match="cannot parse"):
            load_config(ini, env={})

    def test_bad_bool(self, tmp_path):
        ini = write_ini(tmp_path, "[grid]\npairs = maybe\n")
        with pytest.raises(ConfigError):
            load_config(ini, env={})

    def test_env_beats_file(self, tmp_path):
        ini = write_ini(tmp_path, "[scenario]\ndays = 40\n")
        cfg = load_config(ini, env={"ERRMAP_SCENARIO_DAYS": "60"})
        assert cfg.scenario.days == 60

    def test_env_key_with_underscores(self):
        cfg = load_config(None, env={"ERRMAP_SCENARIO_START_DATE": "2020-03-01"})
        assert cfg.scenario.start_date == date(2020, 3, 1)

    def test_env_validation(self):
        with pytest.raises(ConfigError, match="malformed"):
            load_config(None, env={"ERRMAP_SCENARIO": "1"})
        with pytest.raises(ConfigError, match="unknown section"):
            load_config(None, env={"ERRMAP_NOPE_DAYS": "1"})
        with pytest.raises(ConfigError, match="unknown key"):
            load_config(None, env={"ERRMAP_SCENARIO_DAYZ": "1"})

    def test_unrelated_env_ignored(self):
        cfg = load_config(None, env={"PATH": "/bin", "ERRMAPX_A_B": "1"})
        assert cfg == RunConfig()

    def test_real_environ_pickup(self, monkeypatch):
        monkeypatch.setenv("ERRMAP_TRAIN_K", "4")
        assert load_config(None).train.k == 4

    def test_reference_text_round_trips(self, tmp_path):
        text = reference_text()
        for section in ("scenario", "cleaning", "calibration", "gp", "eval", "grid"):
            assert f"[{section}]" in text
        ini = write_ini(tmp_path, text)
        assert load_config(ini, env={}) == RunConfig()


class TestConfigHash:
    def test_stable_and_sensitive(self):
        a, b = RunConfig(), RunConfig()
        assert a.hash() == b.hash()
        assert len(a.hash()) == 16
        int(a.hash(), 16)
        c = dataclasses.replace(a, scenario=dataclasses.replace(a.scenario, seed=2))
        assert c.hash() != a.hash()

    def test_dict_is_json_clean(self):
        doc = RunConfig().to_dict()
        json.dumps(doc)
        assert doc["scenario"]["start_date"] == "2021-09-01"
        assert doc["eval"]["seeds"] == [0, 1, 2, 3, 4]


class TestSectionAdapters:
    def test_calibration_ranges_cover_fields(self):
        ranges = RunConfig().calibration.ranges()
        assert set(ranges.bounds) == set(CALIBRATABLE_FIELDS)
        for lo, hi in ranges.bounds.values():
            assert lo < hi

    def test_gp_bounds(self):
        b = GPConfig(signal_min=0.5, signal_max=2.0).bounds()
        assert b.signal == (0.5, 2.0)
        assert b.noise == (1e-8, 1.0)

    def test_eval_axes_defaults(self):
        e = EvalConfig()
        assert e.sizes[0] == 250 and e.sizes[-1] == 3000
        assert e.ks == tuple(range(1, 10))


def _tree_hashes(root: Path) -> dict[str, str]:
    return {
        str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


class TestCliBasics:
    def test_config_reference_command(self, capsys):
        assert main(["config"]) == 0
        out = capsys.readouterr().out
        assert "[scenario]" in out and "days = 85" in out

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert errmap.__version__ in capsys.readouterr().out

    def test_unknown_stage_rejected(self, capsys):
        with pytest.raises(SystemExit):
            main(["pipeline", "--stage", "nope"])

    def test_missing_dependency_is_json_error(self, tmp_path, capsys):
        rc = main(["eval", "--out-dir", str(tmp_path / "empty")])
        assert rc == 1
        err = capsys.readouterr().err.strip()
        doc = json.loads(err)
        assert doc["error"] == "dependency"
        assert "message" in doc


class TestCliSynth:
    def test_synth_outputs(self, tmp_path, capsys, small_ws):
        out = tmp_path / "o"
        rc = main(["synth", "--config", str(small_ws["ini"]), "--out-dir", str(out)])
        assert rc == 0
        meas = sorted((out / "measurements").glob("*.csv"))
        assert len(meas) == 3  # one file per configured substation
        assert (out / "weather.csv").exists()
        lines = meas[0].read_text().splitlines()
        assert len(lines) == 52 * 24 + 1

    def test_rerun_is_byte_identical(self, tmp_path, small_ws):
        out = tmp_path / "o"
        argv = ["synth", "--config", str(small_ws["ini"]), "--out-dir", str(out)]
        assert main(argv) == 0
        first = _tree_hashes(out)
        assert main(argv) == 0
        assert _tree_hashes(out) == first

    def test_seed_flag_overrides(self, tmp_path, small_ws):
        out = tmp_path / "o"
        argv = [
            "synth", "--config", str(small_ws["ini"]),
            "--out-dir", str(out), "--seed", "9",
        ]
        assert main(argv) == 0
        doc = json.loads((out / "district.json").read_text())
        assert doc["seed"] == 9


class TestCliPipeline:
    def test_second_run_all_fresh(self, capsys, small_ws):
        rc = main([
            "pipeline", "--config", str(small_ws["ini"]),
            "--out-dir", str(small_ws["out"]),
        ])
        assert rc == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines == [f"{s}: fresh" for s in (
            "synth", "clean", "calibrate", "build-ve", "select", "train", "eval", "grid",
        )]

    def test_eval_split_summary_shape(self, capsys, small_ws):
        rc = main([
            "eval", "--config", str(small_ws["ini"]),
            "--out-dir", str(small_ws["out"]), "--split", "extrapolation",
        ])
        assert rc == 0
        out = capsys.readouterr().out
        assert "extrapolation (n=12, 1 seeds)" in out
        assert "interpolation" not in out
        header_line = next(l for l in out.splitlines() if "metric" in l)
        assert "overall" in header_line
        assert "fold min" in header_line and "fold max" in header_line
        for metric in ("mse", "coverage95", "nlpd"):
            assert any(l.strip().startswith(metric) for l in out.splitlines())

    def test_train_flags_override_selection(self, tmp_path, small_ws, capsys):
        ws = tmp_path / "ws"
        shutil.copytree(small_ws["out"], ws)
        rc = main([
            "train", "--config", str(small_ws["ini"]), "--out-dir", str(ws),
            "--features", "hdd,supply_temp_mean", "--n", "20",
        ])
        assert rc == 0
        doc = json.loads((ws / "model.json").read_text())
        assert doc["features"] == ["hdd", "supply_temp_mean"]
        assert len(doc["rows"]) == 20
        assert len(doc["kernel"]["lengthscales"]) == 1  # shared lengthscale mode

    def test_train_unknown_feature_is_json_error(self, tmp_path, small_ws, capsys):
        ws = tmp_path / "ws"
        shutil.copytree(small_ws["out"], ws)
        rc = main([
            "train", "--config", str(small_ws["ini"]), "--out-dir", str(ws),
            "--features", "not_a_feature",
        ])
        assert rc == 1
        doc = json.loads(capsys.readouterr().err.strip())
        assert doc["error"] == "input"
        assert "not_a_feature" in doc["message"]


class TestCliSweeps:
    def test_sweep_features_axis_points(self, tmp_path, small_ws, capsys):
        ws = tmp_path / "ws"
        shutil.copytree(small_ws["out"], ws)
        rc = main([
            "sweep-features", "--config", str(small_ws["ini"]),
            "--out-dir", str(ws), "--ks", "1,2", "--n", "12",
        ])
        assert rc == 0
        printed = capsys.readouterr().out.strip().splitlines()
        assert len(printed) == 2
        doc = json.loads((ws / "sweep_features.json").read_text())
        assert doc["axis"] == "k"
        assert [p["value"] for p in doc["points"]] == [1, 2]
        for p in doc["points"]:
            # feature sweeps score the harder split only
            assert set(p["summary"]) == {"extrapolation"}
            assert "mean" in p["summary"]["extrapolation"]["mse"]

    def test_sweep_size_axis_points(self, tmp_path, small_ws, capsys):
        ws = tmp_path / "ws"
        shutil.copytree(small_ws["out"], ws)
        rc = main([
            "sweep-size", "--config", str(small_ws["ini"]),
            "--out-dir", str(ws), "--sizes", "8,12", "--features", "2",
        ])
        assert rc == 0
        doc = json.loads((ws / "sweep_size.json").read_text())
        assert doc["axis"] == "n"
        assert [p["value"] for p in doc["points"]] == [8, 12]
        header = (ws / "sweep_size.csv").read_text().splitlines()[0]
        assert header.startswith("split,n,seed,fold,mse,")
