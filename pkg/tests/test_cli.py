"""End-to-end command tests: pipelines, exit codes, manifests."""

import json

import numpy as np
import pytest
from click.testing import CliRunner

from parceldenoise import read_grid
from parceldenoise.cli import main

SPEC = {
    "width": 64,
    "height": 48,
    "n_parcels": 8,
    "n_classes": 3,
    "bands": 2,
    "seed": 21,
    "noise": {"flip_rate": 0.15, "unsure_rate": 0.1, "boundary_jitter": 0},
}


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def scene_dir(tmp_path, runner):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps(SPEC))
    out = tmp_path / "scene"
    result = runner.invoke(main, ["synth", str(spec), str(out)])
    assert result.exit_code == 0, result.output
    return out


def _run_config(scene_dir, out_dir, provider="masks", **extra):
    cfg = {
        "provider": provider,
        "label": provider,
        "inputs": {
            "labels": str(scene_dir / "noisy.pdg"),
            "class_map": str(scene_dir / "class_map.json"),
            "reference": str(scene_dir / "clean.pdg"),
        },
        "output_dir": str(out_dir),
        "policy": {"mode": "relabel_all", "min_margin": 0.0},
    }
    if provider == "masks":
        cfg["inputs"]["masks"] = str(scene_dir / "oracle_masks.json")
    if provider in ("kmeans", "dbscan"):
        cfg["inputs"]["image"] = str(scene_dir / "image.pdg")
    if provider == "kmeans":
        cfg["params"] = {"k": 3, "seed": 0}
    if provider == "dbscan":
        cfg["params"] = {"eps": 0.1, "min_pts": 8}
    cfg.update(extra)
    return cfg


class TestSynth:
    def test_writes_expected_files(self, scene_dir):
        for name in (
            "image.pdg", "clean.pdg", "noisy.pdg", "segments.pdg",
            "class_map.json", "oracle_masks.json", "spec.json", "manifest.json",
        ):
            assert (scene_dir / name).exists()

    def test_rerun_byte_identical(self, tmp_path, runner, scene_dir):
        spec = tmp_path / "spec.json"
        out2 = tmp_path / "scene2"
        assert runner.invoke(main, ["synth", str(spec), str(out2)]).exit_code == 0
        for name in ("image.pdg", "clean.pdg", "noisy.pdg", "segments.pdg", "spec.json"):
            assert (scene_dir / name).read_bytes() == (out2 / name).read_bytes()

    def test_invalid_rates_exit_2(self, tmp_path, runner):
        spec = tmp_path / "bad.json"
        doc = dict(SPEC, noise={"flip_rate": 0.8, "unsure_rate": 0.4})
        spec.write_text(json.dumps(doc))
        result = runner.invoke(main, ["synth", str(spec), str(tmp_path / "o")])
        assert result.exit_code == 2

    def test_unparseable_spec_exit_2(self, tmp_path, runner):
        spec = tmp_path / "bad.json"
        spec.write_text("{nope")
        result = runner.invoke(main, ["synth", str(spec), str(tmp_path / "o")])
        assert result.exit_code == 2

    def test_missing_spec_exit_1(self, tmp_path, runner):
        result = runner.invoke(main, ["synth", str(tmp_path / "none.json"), str(tmp_path / "o")])
        assert result.exit_code == 1


class TestDenoise:
    def test_masks_provider_reduces_unsure(self, tmp_path, runner, scene_dir):
        cfg_path = tmp_path / "run.json"
        out = tmp_path / "out"
        cfg_path.write_text(json.dumps(_run_config(scene_dir, out)))
        result = runner.invoke(main, ["denoise", str(cfg_path)])
        assert result.exit_code == 0, result.output
        report = json.loads((out / "report.json").read_text())
        assert report["unsure_after"] < report["unsure_before"]
        for name in ("denoised.pdg", "segments.pdg", "report.json", "before.ppm", "after.ppm"):
            assert (out / name).exists()

    def test_clean_scene_components_is_noop(self, tmp_path, runner, scene_dir):
        cfg = _run_config(scene_dir, tmp_path / "out", provider="components")
        cfg["inputs"]["labels"] = str(scene_dir / "clean.pdg")
        cfg["policy"] = {"mode": "relabel_unsure_only"}
        cfg["params"] = {"connectivity": 4}
        cfg_path = tmp_path / "run.json"
        cfg_path.write_text(json.dumps(cfg))
        result = runner.invoke(main, ["denoise", str(cfg_path)])
        assert result.exit_code == 0, result.output
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["pixels_relabeled"] == 0

    def test_dimension_mismatch_exit_3(self, tmp_path, runner, scene_dir):
        small = dict(SPEC, width=32, seed=9)
        spec2 = tmp_path / "spec2.json"
        spec2.write_text(json.dumps(small))
        other = tmp_path / "other"
        assert CliRunner().invoke(main, ["synth", str(spec2), str(other)]).exit_code == 0
        cfg = _run_config(scene_dir, tmp_path / "out")
        cfg["inputs"]["masks"] = str(other / "oracle_masks.json")
        cfg_path = tmp_path / "run.json"
        cfg_path.write_text(json.dumps(cfg))
        result = runner.invoke(main, ["denoise", str(cfg_path)])
        assert result.exit_code == 3

    def test_unknown_provider_exit_2(self, tmp_path, runner, scene_dir):
        cfg = _run_config(scene_dir, tmp_path / "out")
        cfg["provider"] = "sorcery"
        cfg_path = tmp_path / "run.json"
        cfg_path.write_text(json.dumps(cfg))
        assert runner.invoke(main, ["denoise", str(cfg_path)]).exit_code == 2

    def test_unknown_param_exit_2(self, tmp_path, runner, scene_dir):
        cfg = _run_config(scene_dir, tmp_path / "out", provider="kmeans")
        cfg["params"]["kk"] = 3
        cfg_path = tmp_path / "run.json"
        cfg_path.write_text(json.dumps(cfg))
        assert runner.invoke(main, ["denoise", str(cfg_path)]).exit_code == 2

    def test_flag_overrides_config(self, tmp_path, runner, scene_dir):
        cfg_path = tmp_path / "run.json"
        cfg_path.write_text(json.dumps(_run_config(scene_dir, tmp_path / "ignored")))
        out = tmp_path / "flagged"
        result = runner.invoke(
            main, ["denoise", str(cfg_path), "--output-dir", str(out), "--no-render"]
        )
        assert result.exit_code == 0, result.output
        assert (out / "denoised.pdg").exists()
        assert not (out / "before.ppm").exists()
        assert not (tmp_path / "ignored").exists()

    def test_rerun_byte_identical(self, tmp_path, runner, scene_dir):
        cfg_path = tmp_path / "run.json"
        out = tmp_path / "out"
        cfg_path.write_text(json.dumps(_run_config(scene_dir, out)))
        assert runner.invoke(main, ["denoise", str(cfg_path)]).exit_code == 0
        first = {p.name: p.read_bytes() for p in out.iterdir()}
        assert runner.invoke(main, ["denoise", str(cfg_path)]).exit_code == 0
        second = {p.name: p.read_bytes() for p in out.iterdir()}
        assert first == second

    def test_manifest_contents(self, tmp_path, runner, scene_dir):
        cfg_path = tmp_path / "run.json"
        out = tmp_path / "out"
        cfg_path.write_text(json.dumps(_run_config(scene_dir, out)))
        assert runner.invoke(main, ["--threads", "2", "denoise", str(cfg_path)]).exit_code == 0
        man = json.loads((out / "manifest.json").read_text())
        assert man["tool"] == "parceldenoise"
        assert man["command"] == "denoise"
        assert man["threads"] == 2
        assert len(man["config_sha256"]) == 64
        assert set(man["inputs"]) == {"config", "labels", "class_map", "masks"}
        for entry in man["inputs"].values():
            assert len(entry["sha256"]) == 64


class TestEval:
    def test_identical_rasters_all_ones(self, tmp_path, runner, scene_dir):
        out = tmp_path / "ev"
        result = runner.invoke(
            main,
            [
                "eval", str(scene_dir / "clean.pdg"), str(scene_dir / "clean.pdg"),
                "-o", str(out), "--class-map", str(scene_dir / "class_map.json"),
            ],
        )
        assert result.exit_code == 0, result.output
        doc = json.loads((out / "metrics.json").read_text())
        assert doc["overall_accuracy"] == 1.0
        assert "100.0" in (out / "metrics.txt").read_text()
        assert "overall" in result.output

    def test_missing_file_exit_1(self, tmp_path, runner, scene_dir):
        result = runner.invoke(
            main,
            ["eval", str(scene_dir / "clean.pdg"), str(tmp_path / "nope.pdg"), "-o", str(tmp_path / "e")],
        )
        assert result.exit_code == 1

    def test_corrupt_raster_exit_3(self, tmp_path, runner, scene_dir):
        bad = tmp_path / "bad.pdg"
        bad.write_bytes((scene_dir / "clean.pdg").read_bytes()[:40])
        result = runner.invoke(
            main, ["eval", str(scene_dir / "clean.pdg"), str(bad), "-o", str(tmp_path / "e")]
        )
        assert result.exit_code == 3

    def test_wrong_grid_kind_exit_3(self, tmp_path, runner, scene_dir):
        result = runner.invoke(
            main,
            ["eval", str(scene_dir / "clean.pdg"), str(scene_dir / "image.pdg"), "-o", str(tmp_path / "e")],
        )
        assert result.exit_code == 3


class TestCompare:
    def test_three_providers_three_rows(self, tmp_path, runner, scene_dir):
        paths = []
        for provider in ("masks", "kmeans", "components"):
            cfg = _run_config(scene_dir, tmp_path / f"out_{provider}", provider=provider)
            p = tmp_path / f"{provider}.json"
            p.write_text(json.dumps(cfg))
            paths.append(str(p))
        out = tmp_path / "cmp"
        result = runner.invoke(main, ["compare", *paths, "-o", str(out)])
        assert result.exit_code == 0, result.output
        table = (out / "comparison.txt").read_text()
        body = table.splitlines()[2:]
        assert [line.split()[0] for line in body] == ["masks", "kmeans", "components"]
        doc = json.loads((out / "comparison.json").read_text())
        assert len(doc["rows"]) == 3
        accs = {r["label"]: r["overall_accuracy"] for r in doc["rows"]}
        assert accs["masks"] >= accs["kmeans"]
        assert accs["masks"] >= accs["components"]

    def test_empty_config_list_exit_2(self, tmp_path, runner):
        result = runner.invoke(main, ["compare", "-o", str(tmp_path / "cmp")])
        assert result.exit_code == 2

    def test_missing_reference_exit_2(self, tmp_path, runner, scene_dir):
        cfg = _run_config(scene_dir, tmp_path / "out")
        del cfg["inputs"]["reference"]
        p = tmp_path / "run.json"
        p.write_text(json.dumps(cfg))
        result = runner.invoke(main, ["compare", str(p), "-o", str(tmp_path / "cmp")])
        assert result.exit_code == 2


class TestMasksValidate:
    def test_valid_file_ok(self, runner, scene_dir):
        result = runner.invoke(
            main,
            ["masks-validate", str(scene_dir / "oracle_masks.json"), "--width", "64", "--height", "48"],
        )
        assert result.exit_code == 0
        assert result.output.startswith("OK:")

    def test_bad_json_exit_3(self, tmp_path, runner):
        p = tmp_path / "bad.json"
        p.write_text("[]")
        assert runner.invoke(main, ["masks-validate", str(p)]).exit_code == 3

    def test_run_sum_violation_exit_3(self, tmp_path, runner):
        p = tmp_path / "bad.json"
        p.write_text(json.dumps({"width": 2, "height": 2, "masks": [{"score": 0.5, "counts": [3]}]}))
        assert runner.invoke(main, ["masks-validate", str(p)]).exit_code == 3

    def test_score_violation_exit_3(self, tmp_path, runner):
        p = tmp_path / "bad.json"
        p.write_text(json.dumps({"width": 2, "height": 2, "masks": [{"score": 1.5, "counts": [4]}]}))
        assert runner.invoke(main, ["masks-validate", str(p)]).exit_code == 3

    def test_dimension_flag_mismatch_exit_3(self, runner, scene_dir):
        result = runner.invoke(
            main, ["masks-validate", str(scene_dir / "oracle_masks.json"), "--width", "7"]
        )
        assert result.exit_code == 3


class TestOutputsReadBack:
    def test_denoised_raster_loads(self, tmp_path, runner, scene_dir):
        cfg_path = tmp_path / "run.json"
        out = tmp_path / "out"
        cfg_path.write_text(json.dumps(_run_config(scene_dir, out)))
        assert runner.invoke(main, ["denoise", str(cfg_path)]).exit_code == 0
        den = read_grid(out / "denoised.pdg")
        clean = read_grid(scene_dir / "clean.pdg")
        assert den.labels.shape == clean.labels.shape
        agree = (den.labels == clean.labels).mean()
        assert agree > 0.95
