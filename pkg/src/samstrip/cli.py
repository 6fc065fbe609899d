"""Command-line interface: extract, evaluate, compare, phantom.

A run directory always receives `run.json` describing the resolved
configuration (plus its hash), timings, and backend identity, so any run
can be reproduced exactly. Flags override values from `--config <json>`,
which overrides built-in defaults.
"""
from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path

import click
import numpy as np

from . import __version__
from .baseline import BaselineConfig, builtin_baseline, run_external_bet
from .errors import SamstripError, ShapeMismatch
from .estimators import BrainExtractor
from .metrics import aggregate, compare_masks, emit_report, round3
from .nifti import load_mask, load_volume, save_mask, save_volume
from .phantom import LesionSpec, PhantomSpec, make_phantom
from .prompts import prompts_from_obj, prompts_to_obj
from .volume import GridSpec, Mask3D, Volume, resample_mask


def _fail(message: str) -> "click.exceptions.Exit":
    click.echo(f"error: {message}", err=True)
    return SystemExit(1)


def _grid_of(obj: Volume | Mask3D) -> GridSpec:
    spacing = tuple(float(np.linalg.norm(obj.affine[:3, i])) for i in range(3))
    return GridSpec(obj.dims, spacing, obj.affine)


def _config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _write_run_json(out_dir: Path, command: str, config: dict, extra: dict) -> None:
    payload = {
        "tool": "samstrip",
        "version": __version__,
        "command": command,
        "config": config,
        "config_hash": _config_hash(config),
        **extra,
    }
    (out_dir / "run.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _merge_config(ctx: click.Context, config_path: str | None, params: dict) -> dict:
    """CLI flags > config file > defaults, keyed by parameter name."""
    merged = dict(params)
    if config_path:
        try:
            loaded = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise _fail(f"cannot read config {config_path}: {exc}")
        for key, value in loaded.items():
            if key not in merged:
                raise _fail(f"unknown config key {key!r} in {config_path}")
            source = ctx.get_parameter_source(key)
            if source is not None and source.name != "COMMANDLINE":
                merged[key] = value
    return merged


@click.group()
@click.version_option(version=__version__)
def main():
    """Prompt-driven volumetric brain extraction and evaluation."""


# --- extract -----------------------------------------------------------------


@main.command()
@click.option("--input", "input_path", required=True, help="Input volume (.nii or .nii.gz).")
@click.option("--out", "out_dir", required=True, help="Output directory.")
@click.option("--config", "config_path", default=None, help="JSON config file; flags override.")
@click.option("--axis", default="axial", show_default=True,
              type=click.Choice(["axial", "coronal", "sagittal"]))
@click.option("--window-lo", default=0.01, show_default=True, type=float)
@click.option("--window-hi", default=0.99, show_default=True, type=float)
@click.option("--margin", default=3, show_default=True, type=int)
@click.option("--k-inclusions", default=5, show_default=True, type=int)
@click.option("--k-exclusions", default=8, show_default=True, type=int)
@click.option("--min-foreground-area", default=64, show_default=True, type=int)
@click.option("--rim-width", default=4, show_default=True, type=int)
@click.option("--backend", default="reference", show_default=True,
              type=click.Choice(["reference", "process"]))
@click.option("--backend-command", default=None,
              help="Command line of a protocol backend (backend=process).")
@click.option("--tolerance", default=25, show_default=True, type=int)
@click.option("--connectivity", default=4, show_default=True, type=click.Choice(["4", "8"]))
@click.option("--timeout", default=120.0, show_default=True, type=float)
@click.option("--parallelism", default=1, show_default=True, type=int)
@click.option("--target-grid", default="native", show_default=True,
              help="'native' or a volume whose grid to resample onto.")
@click.option("--manual-prompts", "manual_prompts_path", default=None,
              help="JSON prompt file keyed by slice index; disables the heuristic.")
@click.option("--dump-slices", is_flag=True,
              help="Also write the windowed slices as PGM files under <out>/slices/.")
@click.pass_context
def extract(ctx, input_path, out_dir, config_path, **params):
    """Extract a brain mask; writes mask.nii.gz, prompts.json, run.json."""
    config = _merge_config(ctx, config_path, params)
    src = Path(input_path)
    if not src.exists():
        raise _fail(f"input path does not exist: {src}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    artifacts = [out / "mask.nii.gz", out / "prompts.json", out / "run.json"]

    t_start = time.perf_counter()
    try:
        vol = load_volume(src)
        t_loaded = time.perf_counter()

        target_grid = None
        if config["target_grid"] != "native":
            grid_src = Path(config["target_grid"])
            if not grid_src.exists():
                raise _fail(f"target grid volume does not exist: {grid_src}")
            target_grid = _grid_of(load_volume(grid_src))

        manual = None
        if config["manual_prompts_path"]:
            manual_path = Path(config["manual_prompts_path"])
            if not manual_path.exists():
                raise _fail(f"manual prompts file does not exist: {manual_path}")
            manual = prompts_from_obj(json.loads(manual_path.read_text()))

        extractor = BrainExtractor(
            axis=config["axis"],
            window_lo=config["window_lo"],
            window_hi=config["window_hi"],
            margin=config["margin"],
            k_inclusions=config["k_inclusions"],
            k_exclusions=config["k_exclusions"],
            min_foreground_area=config["min_foreground_area"],
            rim_width=config["rim_width"],
            backend=config["backend"],
            tolerance=config["tolerance"],
            connectivity=int(config["connectivity"]),
            backend_command=config["backend_command"],
            timeout=config["timeout"],
            parallelism=config["parallelism"],
        )
        result = extractor.extract(vol, manual_prompts=manual, target_grid=target_grid)
        t_done = time.perf_counter()

        if config["dump_slices"]:
            from .slicing import decompose, write_pgm
            from .volume import resample

            vol_used = resample(vol, target_grid) if target_grid is not None else vol
            slice_dir = out / "slices"
            slice_dir.mkdir(exist_ok=True)
            for img in decompose(vol_used, result.axis, result.window):
                write_pgm(img, slice_dir)

        save_mask(result.mask, artifacts[0])
        artifacts[1].write_text(
            json.dumps(prompts_to_obj(result.prompts, result.axis, result.window), indent=2)
            + "\n"
        )
        _write_run_json(
            out,
            "extract",
            {**config, "input": str(src)},
            {
                "backend_identity": result.backend_identity,
                "window": list(result.window),
                "slices": len(result.prompts),
                "slices_segmented": result.slices_segmented,
                "timings": {
                    "load_s": round(t_loaded - t_start, 3),
                    "extract_s": round(t_done - t_loaded, 3),
                    "total_s": round(time.perf_counter() - t_start, 3),
                },
            },
        )
    except SystemExit:
        for p in artifacts:
            p.unlink(missing_ok=True)
        raise
    except (SamstripError, OSError, ValueError, json.JSONDecodeError) as exc:
        for p in artifacts:
            p.unlink(missing_ok=True)
        raise _fail(f"extraction failed: {exc}")
    click.echo(f"wrote {artifacts[0]}")


# --- evaluate -----------------------------------------------------------------


@main.command()
@click.argument("pred_path")
@click.argument("gt_path")
@click.option("--resample-gt", is_flag=True, help="Resample ground truth (nearest) onto the prediction grid.")
@click.option("--json", "as_json", is_flag=True, help="Emit machine-readable metrics.")
def evaluate(pred_path, gt_path, resample_gt, as_json):
    """Compare a predicted mask against ground truth and print metrics."""
    for p in (pred_path, gt_path):
        if not Path(p).exists():
            raise _fail(f"path does not exist: {p}")
    try:
        pred = load_mask(pred_path)
        gt = load_mask(gt_path)
        if pred.dims != gt.dims:
            if not resample_gt:
                raise _fail(
                    f"grids differ ({pred.dims} vs {gt.dims}); pass --resample-gt to align"
                )
            gt = resample_mask(gt, _grid_of(pred))
        report = compare_masks(pred, gt)
    except ShapeMismatch as exc:
        raise _fail(str(exc))
    except SamstripError as exc:
        raise _fail(f"evaluation failed: {exc}")

    if as_json:
        click.echo(
            json.dumps(
                {
                    "dice": report.dice,
                    "iou": report.iou,
                    "accuracy": report.accuracy,
                    "recall": report.recall,
                    "precision": report.precision,
                    "counts": {
                        "tp": report.counts.tp,
                        "fp": report.counts.fp,
                        "fn": report.counts.fn,
                        "tn": report.counts.tn,
                    },
                    "undefined": sorted(report.undefined),
                },
                sort_keys=True,
            )
        )
    else:
        click.echo(
            f"dice={round3(report.dice)} iou={round3(report.iou)} "
            f"accuracy={round3(report.accuracy)} recall={round3(report.recall)} "
            f"precision={round3(report.precision)}"
        )


# --- compare -----------------------------------------------------------------


def _load_manifest(path: Path):
    try:
        obj = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise _fail(f"cannot read manifest {path}: {exc}")
    entries = obj["scans"] if isinstance(obj, dict) else obj
    out = []
    for item in entries:
        out.append((str(item["category"]), Path(item["scan"]), Path(item["gt"])))
    return out


@main.command()
@click.option("--manifest", "manifest_path", required=True,
              help="JSON list of {category, scan, gt} entries.")
@click.option("--out", "out_dir", required=True)
@click.option("--f", "f_value", default=0.5, show_default=True, type=float)
@click.option("--baseline-mode", default="builtin", show_default=True,
              type=click.Choice(["builtin", "external"]))
@click.option("--executable", default=None, help="External BET-compatible binary.")
@click.option("--backend", default="reference", show_default=True,
              type=click.Choice(["reference", "process"]))
@click.option("--backend-command", default=None)
@click.option("--parallelism", default=1, show_default=True, type=int)
def compare(manifest_path, out_dir, f_value, baseline_mode, executable, backend,
            backend_command, parallelism):
    """Run baseline and pipeline arms over a manifest; write report.csv/.md."""
    manifest = Path(manifest_path)
    if not manifest.exists():
        raise _fail(f"manifest does not exist: {manifest}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = _load_manifest(manifest)
    if not entries:
        raise _fail("manifest lists no scans")

    extractor = BrainExtractor(
        backend=backend, backend_command=backend_command, parallelism=parallelism
    )
    pipeline_tool = "reference-pipeline" if backend == "reference" else "sam-pipeline"
    baseline_cfg = BaselineConfig(f=f_value, mode=baseline_mode, executable=executable)

    per_cell: dict[tuple[str, str], list] = {}
    notes: dict[tuple[str, str], str] = {}
    errors: list[str] = []
    succeeded_categories = set()

    def record(category, tool, report, note):
        per_cell.setdefault((category, tool), []).append(report)
        notes[(category, tool)] = note
        succeeded_categories.add(category)

    for category, scan_path, gt_path in entries:
        try:
            vol = load_volume(scan_path)
            gt = load_mask(gt_path)
            if gt.dims != vol.dims:
                gt = resample_mask(gt, _grid_of(vol))
        except (SamstripError, OSError) as exc:
            errors.append(f"{category}: cannot load {scan_path} / {gt_path}: {exc}")
            continue

        try:
            if baseline_cfg.mode == "builtin":
                bl_mask = builtin_baseline(vol, baseline_cfg)
            else:
                bl_mask = run_external_bet(scan_path, baseline_cfg, out / "bet-work")
            record(category, "baseline", compare_masks(bl_mask, gt), baseline_cfg.identity())
        except (SamstripError, OSError) as exc:
            errors.append(f"{category}/baseline {scan_path}: {exc}")

        try:
            result = extractor.extract(vol)
            record(
                category, pipeline_tool, compare_masks(result.mask, gt),
                f"backend={result.backend_identity}",
            )
        except (SamstripError, OSError, ValueError) as exc:
            errors.append(f"{category}/{pipeline_tool} {scan_path}: {exc}")

    aggregates = [
        aggregate(reports, category, tool, notes=notes[(category, tool)])
        for (category, tool), reports in per_cell.items()
    ]
    csv_text = emit_report(aggregates, "csv")
    md_text = emit_report(aggregates, "markdown")
    if errors:
        csv_text += "".join(f"# ERROR {line}\n" for line in errors)
        md_text += "\nErrors:\n" + "".join(f"- {line}\n" for line in errors)
    (out / "report.csv").write_text(csv_text)
    (out / "report.md").write_text(md_text)
    _write_run_json(
        out,
        "compare",
        {
            "manifest": str(manifest),
            "f": f_value,
            "baseline_mode": baseline_mode,
            "executable": executable,
            "backend": backend,
            "backend_command": backend_command,
            "parallelism": parallelism,
        },
        {"rows": len(aggregates), "errors": errors},
    )
    click.echo(f"wrote {out / 'report.csv'} and {out / 'report.md'}")

    categories = {c for c, _, _ in entries}
    missing = categories - succeeded_categories
    if missing:
        raise _fail(f"no scan succeeded for categories: {sorted(missing)}")


# --- phantom -----------------------------------------------------------------


@main.command()
@click.option("--out", "out_dir", required=True)
@click.option("--dims", default=96, show_default=True, type=int)
@click.option("--lesion/--no-lesion", default=False, show_default=True)
@click.option("--noise-sigma", default=0.0, show_default=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
def phantom(out_dir, dims, lesion, noise_sigma, seed):
    """Generate a synthetic head phantom and its ground-truth mask."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        scale = dims / 96.0
        spec = PhantomSpec(
            dims=(dims, dims, dims),
            brain_semiaxes=(30.0 * scale, 36.0 * scale, 28.0 * scale),
            lesion=_scaled_lesion(dims, scale) if lesion else None,
            noise_sigma=noise_sigma,
            seed=seed,
        )
        vol, gt = make_phantom(spec)
    except SamstripError as exc:
        raise _fail(f"phantom generation failed: {exc}")
    save_volume(vol, out / "phantom.nii.gz")
    save_mask(gt, out / "phantom_gt.nii.gz")
    _write_run_json(
        out,
        "phantom",
        {
            "dims": dims,
            "lesion": lesion,
            "noise_sigma": noise_sigma,
            "seed": seed,
        },
        {"brain_semiaxes": list(spec.brain_semiaxes)},
    )
    click.echo(f"wrote {out / 'phantom.nii.gz'} and {out / 'phantom_gt.nii.gz'}")


def _scaled_lesion(dims: int, scale: float) -> LesionSpec:
    base = PhantomSpec.default_lesion()
    center = tuple((c - 47.5) * scale + (dims - 1) / 2.0 for c in base.center)
    return LesionSpec(center=center, semiaxes=tuple(a * scale for a in base.semiaxes))


if __name__ == "__main__":
    main()
