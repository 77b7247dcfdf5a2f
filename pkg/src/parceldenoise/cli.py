"""Command line pipeline: synth, segment, vote, score.

Each run is driven by JSON files so it can be archived and replayed;
reruns with identical inputs and config write byte-identical artifacts,
and every command leaves a manifest.json recording input hashes, the
config hash, and the tool version.

Exit codes are a contract: 0 success, 1 I/O failure, 2 bad
configuration, 3 data that does not fit together (corrupt container,
dimension mismatch, failed validation).
"""

from __future__ import annotations

import hashlib
import json
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import click

from . import __version__
from .clustering import (
    DbscanConfig,
    KMeansConfig,
    assignments_to_segment_map,
    build_features,
    dbscan,
    kmeans,
)
from .errors import ConfigError, FormatError, ParcelDenoiseError, ShapeError
from .grids import (
    ClassMap,
    ImageRaster,
    LabelRaster,
    export_color_image,
    read_grid,
    write_grid,
)
from .metrics import confusion, format_metrics_table, metrics_report
from .relabel import DenoisePolicy, denoise
from .segments import MaskSet, connected_components, mask_set_from_segments, masks_to_segment_map
from .synthgen import SceneSpec, generate, scene_class_map

PROVIDERS = ("masks", "kmeans", "dbscan", "components")

_PARAM_KEYS = {
    "masks": set(),
    "components": {"connectivity"},
    "kmeans": {"k", "max_iters", "tol", "seed", "include_xy", "xy_weight", "connectivity"},
    "dbscan": {"eps", "min_pts", "include_xy", "xy_weight", "connectivity"},
}
_POLICY_KEYS = {"mode", "min_margin", "unsure_votes", "background_action"}


@dataclass(frozen=True)
class RunConfig:
    """One denoise run: a segment provider, a vote policy, and paths.

    Paths in the file resolve relative to the file's own directory, so
    a config can travel with its data.
    """

    provider: str
    label: str
    labels_path: Path
    class_map_path: Path
    output_dir: Path
    params: dict
    policy: DenoisePolicy
    render: bool = True
    image_path: Path | None = None
    masks_path: Path | None = None
    reference_path: Path | None = None

    def __post_init__(self):
        if self.provider not in PROVIDERS:
            raise ConfigError(f"provider must be one of {PROVIDERS}, got {self.provider!r}")
        unknown = set(self.params) - _PARAM_KEYS[self.provider]
        if unknown:
            raise ConfigError(f"unknown {self.provider} params: {sorted(unknown)}")
        if self.provider == "masks" and self.masks_path is None:
            raise ConfigError("masks provider needs inputs.masks")
        if self.provider in ("kmeans", "dbscan") and self.image_path is None:
            raise ConfigError(f"{self.provider} provider needs inputs.image")
        if self.provider == "kmeans" and "k" not in self.params:
            raise ConfigError("kmeans provider needs params.k")
        if self.provider == "dbscan" and not {"eps", "min_pts"} <= set(self.params):
            raise ConfigError("dbscan provider needs params.eps and params.min_pts")
        if self.params.get("connectivity", 4) not in (4, 8):
            raise ConfigError("connectivity must be 4 or 8")

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        text = path.read_text()
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: run config is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: run config must be a JSON object")
        base = path.parent

        def resolve(p):
            return None if p is None else base / p

        try:
            inputs = doc.get("inputs", {})
            policy_doc = doc.get("policy", {})
            unknown = set(policy_doc) - _POLICY_KEYS
            if unknown:
                raise ConfigError(f"unknown policy keys: {sorted(unknown)}")
            known_inputs = {"labels", "image", "masks", "class_map", "reference"}
            stray = set(inputs) - known_inputs
            if stray:
                raise ConfigError(f"unknown inputs: {sorted(stray)}")
            if "labels" not in inputs or "class_map" not in inputs:
                raise ConfigError("inputs.labels and inputs.class_map are required")
            if "output_dir" not in doc:
                raise ConfigError("output_dir is required")
            policy = DenoisePolicy(
                mode=policy_doc.get("mode", "relabel_all"),
                min_margin=float(policy_doc.get("min_margin", 0.0)),
                unsure_votes=bool(policy_doc.get("unsure_votes", False)),
                background_action=policy_doc.get("background_action", "leave"),
            )
            return cls(
                provider=doc.get("provider", ""),
                label=str(doc.get("label", doc.get("provider", "run"))),
                labels_path=base / inputs["labels"],
                class_map_path=base / inputs["class_map"],
                output_dir=base / doc["output_dir"],
                params=dict(doc.get("params", {})),
                policy=policy,
                render=bool(doc.get("render", True)),
                image_path=resolve(inputs.get("image")),
                masks_path=resolve(inputs.get("masks")),
                reference_path=resolve(inputs.get("reference")),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{path}: malformed run config: {exc}") from exc


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(
    out_dir: Path,
    command: str,
    inputs: dict[str, Path],
    outputs: list[str],
    threads: int | None,
    config_hash: str | None = None,
) -> None:
    doc = {
        "tool": "parceldenoise",
        "version": __version__,
        "command": command,
        "inputs": {
            name: {"path": str(p), "sha256": _sha256(p)} for name, p in sorted(inputs.items())
        },
        "outputs": sorted(outputs),
        "threads": threads,
    }
    if config_hash is not None:
        doc["config_sha256"] = config_hash
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    (out_dir / "manifest.json").write_text(text)


def _cap_threads(threads: int | None) -> None:
    if threads is None:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        os.environ[var] = str(threads)


def _fail(code: int, exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(code)


def _guarded(body) -> None:
    """Run a command body and translate exceptions into exit codes."""
    try:
        body()
    except ConfigError as exc:
        _fail(2, exc)
    except ParcelDenoiseError as exc:
        _fail(3, exc)
    except OSError as exc:
        _fail(1, exc)


def _build_segments(cfg: RunConfig, labels: LabelRaster):
    conn = int(cfg.params.get("connectivity", 4))
    if cfg.provider == "components":
        return connected_components(labels, connectivity=conn)
    if cfg.provider == "masks":
        ms = MaskSet.load(cfg.masks_path)
        if (ms.width, ms.height) != (labels.width, labels.height):
            raise ShapeError(
                f"mask set is {ms.width}x{ms.height}, labels are "
                f"{labels.width}x{labels.height}"
            )
        return masks_to_segment_map(ms)

    img = read_grid(cfg.image_path, expect=ImageRaster)
    if (img.height, img.width) != (labels.height, labels.width):
        raise ShapeError(
            f"image is {img.width}x{img.height}, labels are {labels.width}x{labels.height}"
        )
    p = cfg.params
    feats = build_features(
        img, include_xy=bool(p.get("include_xy", False)), xy_weight=float(p.get("xy_weight", 1.0))
    )
    if cfg.provider == "kmeans":
        kcfg = KMeansConfig(
            k=int(p["k"]),
            max_iters=int(p.get("max_iters", 100)),
            tol=float(p.get("tol", 1e-6)),
            seed=int(p.get("seed", 0)),
            include_xy=bool(p.get("include_xy", False)),
            xy_weight=float(p.get("xy_weight", 1.0)),
        )
        res = kmeans(feats, kcfg)
        return assignments_to_segment_map(
            res.assignments + 1, feats.rows, feats.cols, labels.width, labels.height, conn
        )
    dcfg = DbscanConfig(
        eps=float(p["eps"]),
        min_pts=int(p["min_pts"]),
        include_xy=bool(p.get("include_xy", False)),
        xy_weight=float(p.get("xy_weight", 1.0)),
    )
    assign = dbscan(feats, dcfg)
    return assignments_to_segment_map(
        assign, feats.rows, feats.cols, labels.width, labels.height, conn
    )


@dataclass(frozen=True)
class _RunResult:
    before: LabelRaster
    after: LabelRaster
    class_map: ClassMap
    outputs: list[str]


def _execute_run(cfg: RunConfig, config_path: Path, threads: int | None) -> _RunResult:
    class_map = ClassMap.load(cfg.class_map_path)
    before = read_grid(cfg.labels_path, expect=LabelRaster, class_map=class_map)
    segs = _build_segments(cfg, before)
    after, report = denoise(before, segs, cfg.policy)

    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    write_grid(after, cfg.output_dir / "denoised.pdg")
    write_grid(segs, cfg.output_dir / "segments.pdg")
    (cfg.output_dir / "report.json").write_text(report.to_json())
    outputs = ["denoised.pdg", "segments.pdg", "report.json", "manifest.json"]
    if cfg.render:
        export_color_image(before, class_map, cfg.output_dir / "before.ppm")
        export_color_image(after, class_map, cfg.output_dir / "after.ppm")
        outputs += ["before.ppm", "after.ppm"]

    inputs = {"config": config_path, "labels": cfg.labels_path, "class_map": cfg.class_map_path}
    if cfg.image_path is not None:
        inputs["image"] = cfg.image_path
    if cfg.masks_path is not None:
        inputs["masks"] = cfg.masks_path
    _write_manifest(
        cfg.output_dir,
        "denoise",
        inputs,
        outputs,
        threads,
        config_hash=_sha256(config_path),
    )
    return _RunResult(before, after, class_map, outputs)


@click.group()
@click.version_option(__version__, prog_name="parceldenoise")
@click.option(
    "--threads",
    type=click.IntRange(min=1),
    envvar="PD_THREADS",
    default=None,
    help="Cap numeric-library thread pools. Results never depend on it.",
)
@click.pass_context
def main(ctx, threads):
    """Land-cover label denoising: parcels in, majority votes out."""
    ctx.ensure_object(dict)
    ctx.obj["threads"] = threads
    _cap_threads(threads)


@main.command()
@click.argument("spec_path", type=click.Path(path_type=Path))
@click.argument("out_dir", type=click.Path(path_type=Path))
@click.pass_context
def synth(ctx, spec_path: Path, out_dir: Path):
    """Generate a synthetic scene from a SceneSpec JSON file.

    Writes imagery, clean and noisy labels, the true parcel map, the
    class map, per-parcel oracle masks, and an echo of the scene spec.
    """

    def body():
        text = spec_path.read_text()
        try:
            spec = SceneSpec.from_json(text)
        except FormatError as exc:
            # the scene-spec file is configuration, not data
            raise ConfigError(str(exc)) from exc
        scene = generate(spec)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_grid(scene.image, out_dir / "image.pdg")
        write_grid(scene.clean_labels, out_dir / "clean.pdg")
        write_grid(scene.noisy_labels, out_dir / "noisy.pdg")
        write_grid(scene.oracle_segments, out_dir / "segments.pdg")
        scene_class_map(spec.n_classes).save(out_dir / "class_map.json")
        mask_set_from_segments(scene.oracle_segments).save(out_dir / "oracle_masks.json")
        (out_dir / "spec.json").write_text(spec.to_json())
        _write_manifest(
            out_dir,
            "synth",
            {"spec": spec_path},
            [
                "image.pdg", "clean.pdg", "noisy.pdg", "segments.pdg",
                "class_map.json", "oracle_masks.json", "spec.json", "manifest.json",
            ],
            ctx.obj["threads"],
            config_hash=_sha256(spec_path),
        )
        click.echo(f"wrote scene {spec.width}x{spec.height} to {out_dir}")

    _guarded(body)


@main.command("denoise")
@click.argument("config_path", type=click.Path(path_type=Path))
@click.option("--output-dir", type=click.Path(path_type=Path), default=None,
              help="Override the config's output_dir.")
@click.option("--render/--no-render", "render", default=None,
              help="Override the config's render flag.")
@click.pass_context
def denoise_cmd(ctx, config_path: Path, output_dir: Path | None, render: bool | None):
    """Segment a scene with the configured provider and vote out noise."""

    def body():
        cfg = RunConfig.load(config_path)
        if output_dir is not None:
            cfg2 = replace(cfg, output_dir=output_dir)
        else:
            cfg2 = cfg
        if render is not None:
            cfg2 = replace(cfg2, render=render)
        result = _execute_run(cfg2, config_path, ctx.obj["threads"])
        rep = json.loads((cfg2.output_dir / "report.json").read_text())
        click.echo(
            f"{cfg2.label}: relabeled {rep['pixels_relabeled']} of "
            f"{rep['pixels_total']} pixels, unsure {rep['unsure_before']} -> "
            f"{rep['unsure_after']}"
        )

    _guarded(body)


@main.command("eval")
@click.argument("reference_path", type=click.Path(path_type=Path))
@click.argument("predicted_path", type=click.Path(path_type=Path))
@click.option("--out-dir", "-o", type=click.Path(path_type=Path), required=True)
@click.option("--class-map", "class_map_path", type=click.Path(path_type=Path), default=None)
@click.option("--exclude-unsure-ref", is_flag=True, default=False,
              help="Skip pixels whose reference label is the unsure class.")
@click.pass_context
def eval_cmd(ctx, reference_path, predicted_path, out_dir, class_map_path, exclude_unsure_ref):
    """Score a predicted label raster against a reference raster."""

    def body():
        class_map = ClassMap.load(class_map_path) if class_map_path else None
        ref = read_grid(reference_path, expect=LabelRaster, class_map=class_map)
        pred = read_grid(predicted_path, expect=LabelRaster, class_map=class_map)
        cm = confusion(ref, pred, exclude_unsure_ref=exclude_unsure_ref)
        names = class_map.mapping if class_map else ref.class_map
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "metrics.json").write_text(metrics_report(cm, names))
        table = format_metrics_table([("predicted", cm)], names)
        (out_dir / "metrics.txt").write_text(table)
        inputs = {"reference": reference_path, "predicted": predicted_path}
        if class_map_path:
            inputs["class_map"] = class_map_path
        _write_manifest(
            out_dir, "eval", inputs,
            ["metrics.json", "metrics.txt", "manifest.json"],
            ctx.obj["threads"],
        )
        click.echo(table, nl=False)

    _guarded(body)


@main.command()
@click.argument("config_paths", type=click.Path(path_type=Path), nargs=-1)
@click.option("--out-dir", "-o", type=click.Path(path_type=Path), required=True)
@click.pass_context
def compare(ctx, config_paths, out_dir):
    """Run several providers on the same scene and tabulate the results.

    Every config must name inputs.reference; each run's artifacts land
    in its own output_dir, and the side-by-side table lands here.
    """

    def body():
        if not config_paths:
            raise ConfigError("compare needs at least one run config")
        rows = []
        row_docs = []
        names: dict[int, str] = {}
        inputs: dict[str, Path] = {}
        for i, path in enumerate(config_paths):
            cfg = RunConfig.load(path)
            if cfg.reference_path is None:
                raise ConfigError(f"{path}: compare needs inputs.reference")
            result = _execute_run(cfg, path, ctx.obj["threads"])
            ref = read_grid(cfg.reference_path, expect=LabelRaster, class_map=result.class_map)
            cmx = confusion(ref, result.after)
            rows.append((cfg.label, cmx))
            names.update(result.class_map.mapping)
            row_docs.append(
                {"label": cfg.label, "provider": cfg.provider}
                | json.loads(metrics_report(cmx, result.class_map.mapping))
            )
            inputs[f"config_{i}"] = path
        table = format_metrics_table(rows, names)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "comparison.txt").write_text(table)
        (out_dir / "comparison.json").write_text(
            json.dumps({"rows": row_docs}, indent=2) + "\n"
        )
        _write_manifest(
            out_dir, "compare", inputs,
            ["comparison.txt", "comparison.json", "manifest.json"],
            ctx.obj["threads"],
        )
        click.echo(table, nl=False)

    _guarded(body)


@main.command("masks-validate")
@click.argument("masks_path", type=click.Path(path_type=Path))
@click.option("--width", type=click.IntRange(min=1), default=None,
              help="Require this raster width.")
@click.option("--height", type=click.IntRange(min=1), default=None,
              help="Require this raster height.")
def masks_validate(masks_path: Path, width: int | None, height: int | None):
    """Check that a mask-set JSON file honors the interchange contract."""

    def body():
        ms = MaskSet.load(masks_path)
        if width is not None and ms.width != width:
            raise ShapeError(f"mask set width {ms.width}, expected {width}")
        if height is not None and ms.height != height:
            raise ShapeError(f"mask set height {ms.height}, expected {height}")
        click.echo(f"OK: {len(ms.masks)} masks, {ms.width}x{ms.height}")

    _guarded(body)


if __name__ == "__main__":
    main()
