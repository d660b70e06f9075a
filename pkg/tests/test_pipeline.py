import dataclasses
import hashlib
import json
import shutil
from pathlib import Path

import pytest

import errmap
from errmap.errors import DependencyError, InputError
from errmap.pipeline import (
    STAGE_ORDER,
    Workspace,
    load_model,
    run_pipeline,
    run_stage,
    stage_fresh,
)


def tree_hashes(root: Path) -> dict[str, str]:
    return {
        str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


@pytest.fixture
def ws_copy(tmp_path, small_ws):
    dst = tmp_path / "ws"
    shutil.copytree(small_ws["out"], dst)
    return dst


class TestFreshness:
    def test_completed_run_is_fresh(self, small_ws):
        ws = Workspace.at(small_ws["out"])
        for stage in STAGE_ORDER:
            assert stage_fresh(small_ws["cfg"], ws, stage), stage

    def test_missing_meta_is_stale(self, ws_copy, small_ws):
        (ws_copy / "train.meta.json").unlink()
        assert not stage_fresh(small_ws["cfg"], Workspace.at(ws_copy), "train")

    def test_config_change_is_stale(self, small_ws):
        cfg = small_ws["cfg"]
        changed = dataclasses.replace(
            cfg, train=dataclasses.replace(cfg.train, n=35)
        )
        ws = Workspace.at(small_ws["out"])
        for stage in STAGE_ORDER:
            assert not stage_fresh(changed, ws, stage)

    def test_tampered_output_is_stale(self, ws_copy, small_ws):
        p = ws_copy / "masks" / "S01.csv"
        p.write_text(p.read_text().replace("1", "0", 1))
        assert not stage_fresh(small_ws["cfg"], Workspace.at(ws_copy), "clean")


class TestRecompute:
    def test_tampered_stage_recomputed_alone(self, ws_copy, small_ws):
        before = tree_hashes(ws_copy)
        p = ws_copy / "masks" / "S01.csv"
        p.write_text(p.read_text().replace("1", "0", 1))
        statuses = run_pipeline(small_ws["cfg"], ws_copy)
        assert statuses["clean"] == "ran"
        ran = {s for s, v in statuses.items() if v == "ran"}
        assert ran == {"clean"}  # deterministic rewrite revalidates the suffix
        assert tree_hashes(ws_copy) == before

    def test_tampered_dataset_recomputed(self, ws_copy, small_ws):
        before = tree_hashes(ws_copy)
        p = ws_copy / "ve_dataset.csv"
        text = p.read_text().splitlines()
        p.write_text("\n".join(text[:-1]) + "\n")
        statuses = run_pipeline(small_ws["cfg"], ws_copy)
        assert statuses["build-ve"] == "ran"
        assert statuses["select"] == "fresh"
        assert tree_hashes(ws_copy) == before

    def test_deleted_meta_recomputes_one_stage(self, ws_copy, small_ws):
        (ws_copy / "train.meta.json").unlink()
        statuses = run_pipeline(small_ws["cfg"], ws_copy)
        ran = {s for s, v in statuses.items() if v == "ran"}
        assert ran == {"train"}

    def test_upto_stops_early(self, tmp_path, small_ws):
        out = tmp_path / "o"
        statuses = run_pipeline(small_ws["cfg"], out, upto="clean")
        assert list(statuses) == ["synth", "clean"]
        assert (out / "masks").is_dir()
        assert not (out / "calibration").exists()
        assert not (out / "ve_dataset.csv").exists()

    def test_unknown_stage_names(self, tmp_path, small_ws):
        with pytest.raises(InputError):
            run_pipeline(small_ws["cfg"], tmp_path / "x", upto="nope")
        with pytest.raises(InputError):
            run_stage(small_ws["cfg"], tmp_path / "x", "nope")


class TestDeterminism:
    def test_fresh_run_is_byte_identical(self, tmp_path, small_ws):
        out = tmp_path / "rerun"
        run_pipeline(small_ws["cfg"], out)
        assert tree_hashes(out) == tree_hashes(small_ws["out"])


class TestDependencies:
    def test_clean_without_synth(self, tmp_path, small_ws):
        with pytest.raises(DependencyError):
            run_stage(small_ws["cfg"], tmp_path / "empty", "clean")

    def test_eval_without_model(self, tmp_path, small_ws):
        with pytest.raises(DependencyError):
            run_stage(small_ws["cfg"], tmp_path / "empty", "eval")

    def test_build_ve_without_calibration(self, ws_copy, small_ws):
        shutil.rmtree(ws_copy / "calibration")
        with pytest.raises(DependencyError):
            run_stage(small_ws["cfg"], ws_copy, "build-ve")


class TestArtifactStamps:
    def test_model_stamp(self, small_ws):
        doc = json.loads((small_ws["out"] / "model.json").read_text())
        assert doc["config_hash"] == small_ws["cfg"].hash()
        assert doc["seed"] == small_ws["cfg"].train.seed
        assert doc["version"] == errmap.__version__

    def test_dataset_stamp(self, small_ws):
        doc = json.loads((small_ws["out"] / "ve_dataset.meta.json").read_text())
        prov = doc["provenance"]
        assert prov["config_hash"] == small_ws["cfg"].hash()
        assert prov["seed"] == small_ws["cfg"].scenario.seed
        assert prov["version"] == errmap.__version__
        assert "build_log" in prov

    def test_stage_meta_structure(self, small_ws):
        doc = json.loads((small_ws["out"] / "train.meta.json").read_text())
        assert doc["stage"] == "train"
        assert doc["config_hash"] == small_ws["cfg"].hash()
        assert doc["version"] == errmap.__version__
        assert set(doc["inputs"]) == {
            "ve_dataset.csv", "ve_dataset.meta.json", "selection.json",
        }
        assert list(doc["outputs"]) == ["model.json"]
        for digest in doc["inputs"].values():
            int(digest, 16)
            assert len(digest) == 64

    def test_eval_summary_layout(self, small_ws):
        lines = (small_ws["out"] / "eval_summary.csv").read_text().splitlines()
        assert lines[0] == "split,seed,fold,n_train,n_val,mse,nlpd,coverage95,rmse_raw,mae_raw"
        # 1 seed: interpolation = overall + random, extrapolation = overall + 3 folds
        interp = [l for l in lines[1:] if l.startswith("interpolation,")]
        extrap = [l for l in lines[1:] if l.startswith("extrapolation,")]
        assert len(interp) == 2
        assert len(extrap) == 4
        assert interp[0].split(",")[2] == "overall"
        assert {l.split(",")[2] for l in extrap} == {"overall", "S01", "S02", "S03"}


class TestLoadModel:
    def test_round_trip(self, small_ws):
        model, spec, features, weights = load_model(Workspace.at(small_ws["out"]))
        doc = json.loads((small_ws["out"] / "model.json").read_text())
        assert features == doc["features"]
        assert model.X.shape == (len(doc["rows"]), len(features))
        assert weights.shape == (len(doc["rows"]),)
        assert model.lml == pytest.approx(doc["lml"], rel=1e-9)
        assert set(spec.features) == set(features)

    def test_dataset_drift_detected(self, ws_copy, small_ws):
        with (ws_copy / "ve_dataset.csv").open("a") as fh:
            fh.write("\n")
        with pytest.raises(DependencyError, match="changed"):
            load_model(Workspace.at(ws_copy))

    def test_dataset_missing_detected(self, ws_copy, small_ws):
        (ws_copy / "ve_dataset.csv").unlink()
        with pytest.raises(DependencyError, match="missing"):
            load_model(Workspace.at(ws_copy))
