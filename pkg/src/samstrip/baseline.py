"""Comparison-arm brain extraction: external BET adapter and builtin stand-in.

The builtin method is a deliberately classical pipeline (robust fractional
threshold, 3D opening, largest component, hole fill) so the comparison
harness runs end to end on machines without FSL. Reports must label which
mode produced each row; the two are not interchangeable.
"""
from __future__ import annotations

import shutil
import subprocess
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import EmptyResult, ExecutableNotFound, OutputMissing, ToolFailed
from .nifti import load_mask
from .slicing import nearest_rank
from .volume import Mask3D, Volume

_STRUCT_6 = ndimage.generate_binary_structure(3, 1)


@dataclass(frozen=True)
class BaselineConfig:
    f: float = 0.5
    mode: str = "builtin"
    executable: str | None = None

    def __post_init__(self):
        if not 0.0 < self.f < 1.0:
            raise ValueError(f"fractional intensity threshold must be in (0, 1), got {self.f}")
        if self.mode not in ("builtin", "external"):
            raise ValueError(f"mode must be builtin or external, got {self.mode!r}")

    def identity(self) -> str:
        if self.mode == "external":
            return f"bet-external(f={self.f},exe={self.executable})"
        return f"builtin-baseline(f={self.f})"


def fractional_threshold(vol: Volume, f: float) -> float:
    """Threshold at robust_min + f * (robust_max - robust_min), 1%/99% quantiles."""
    robust_min = nearest_rank(vol.data, 0.01)
    robust_max = nearest_rank(vol.data, 0.99)
    return robust_min + f * (robust_max - robust_min)


def _fill_small_cavities(component: np.ndarray) -> np.ndarray:
    """Fill enclosed background pockets smaller than the component itself.

    A hollow structure (e.g. a skull shell thresholded without its brain)
    keeps its cavity: annexing an interior larger than the tissue would
    turn an under-extraction into a silent over-extraction.
    """
    background, _ = ndimage.label(~component, structure=_STRUCT_6)
    border_labels = set(np.unique(background[0, :, :])) | set(np.unique(background[-1, :, :]))
    border_labels |= set(np.unique(background[:, 0, :])) | set(np.unique(background[:, -1, :]))
    border_labels |= set(np.unique(background[:, :, 0])) | set(np.unique(background[:, :, -1]))
    sizes = np.bincount(background.ravel())
    limit = int(component.sum())
    out = component.copy()
    for label in range(1, sizes.size):
        if label in border_labels:
            continue
        if sizes[label] < limit:
            out[background == label] = True
    return out


def builtin_baseline(vol: Volume, cfg: BaselineConfig | None = None) -> Mask3D:
    """Classical whole-head extraction; larger f removes more tissue."""
    cfg = cfg or BaselineConfig()
    threshold = fractional_threshold(vol, cfg.f)
    bright = vol.data > threshold
    if not bright.any():
        raise EmptyResult(f"no voxel above threshold {threshold:.3f} at f={cfg.f}")
    opened = ndimage.binary_dilation(
        ndimage.binary_erosion(bright, structure=_STRUCT_6), structure=_STRUCT_6
    )
    if not opened.any():
        raise EmptyResult("morphological opening removed every voxel")
    labels, _ = ndimage.label(opened, structure=_STRUCT_6)
    sizes = np.bincount(labels.ravel())
    sizes[0] = 0
    largest = labels == int(sizes.argmax())
    return Mask3D(_fill_small_cavities(largest), vol.affine)


def run_external_bet(vol_path, cfg: BaselineConfig, workdir) -> Mask3D:
    """Invoke `<exe> <input> <prefix> -f <f> -m` and load `<prefix>_mask.nii.gz`."""
    if cfg.mode != "external":
        raise ValueError("run_external_bet requires mode='external'")
    exe = cfg.executable
    resolved = shutil.which(exe) if exe else None
    if resolved is None:
        raise ExecutableNotFound(f"brain extraction tool not found: {exe!r}")
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    prefix = workdir / "bet_out"
    proc = subprocess.run(
        [resolved, str(vol_path), str(prefix), "-f", str(cfg.f), "-m"],
        capture_output=True,
        text=True,
    )
    if proc.returncode != 0:
        raise ToolFailed(
            f"{exe} exited with status {proc.returncode}: {proc.stderr.strip()}",
            exit_status=proc.returncode,
            stderr=proc.stderr,
        )
    mask_path = Path(str(prefix) + "_mask.nii.gz")
    if not mask_path.exists():
        raise OutputMissing(f"expected mask output at {mask_path}")
    return load_mask(mask_path)
