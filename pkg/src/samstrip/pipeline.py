"""End-to-end extraction: window, decompose, prompt, segment, reconstruct.

Slices are independent work items; a worker pool of `parallelism` threads
processes disjoint shards, each owning at most one backend instance, and
reconstruction merges results by slice index, so the output mask is
bit-identical at any parallelism degree.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .prompts import PromptConfig, PromptSet, generate_prompts
from .segmenter import ReferenceBackend, segment
from .slicing import compute_window, decompose, reconstruct
from .volume import GridSpec, Mask3D, Volume, resample


@dataclass
class ExtractionResult:
    mask: Mask3D
    prompts: list[tuple[int, PromptSet | None]]
    window: tuple[float, float]
    axis: str
    backend_identity: str
    slices_segmented: int = 0


def _segment_shard(slices, prompt_map, backend_factory, indices):
    """Run one worker's share of slices on its own backend."""
    backend = backend_factory()
    results = {}
    try:
        for i in indices:
            ps = prompt_map[i]
            img = slices[i]
            if ps is None:
                results[i] = np.zeros((img.height, img.width), dtype=bool)
            else:
                results[i] = segment(img, ps, backend)
    finally:
        close = getattr(backend, "close", None)
        if close:
            close()
    return results


def extract_mask(
    vol: Volume,
    *,
    axis: str = "axial",
    window_pct: tuple[float, float] = (0.01, 0.99),
    prompt_config: PromptConfig | None = None,
    backend_factory=None,
    manual_prompts: dict[int, PromptSet | None] | None = None,
    parallelism: int = 1,
    target_grid: GridSpec | None = None,
) -> ExtractionResult:
    """Extract a brain mask from a volume with a promptable 2D backend.

    When `manual_prompts` is given the heuristic generator is skipped
    entirely; slices without an entry get no prompts and come back empty
    (structure-segmentation mode). With `target_grid`, the volume is
    first resampled (trilinear) and the mask lives on that grid.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    cfg = prompt_config or PromptConfig()
    factory = backend_factory or ReferenceBackend
    if target_grid is not None:
        vol = resample(vol, target_grid, "trilinear")

    window = compute_window(vol, *window_pct)
    slices = decompose(vol, axis, window)

    if manual_prompts is not None:
        prompts = [(img.index, manual_prompts.get(img.index)) for img in slices]
        for img, (_, ps) in zip(slices, prompts):
            if ps is not None:
                ps.validate_for(img.width, img.height)
    else:
        prompts = generate_prompts(slices, cfg)
    prompt_map = dict(prompts)

    indices = list(range(len(slices)))
    shards = [indices[k::parallelism] for k in range(parallelism)]
    shards = [s for s in shards if s]
    results: dict[int, np.ndarray] = {}
    if len(shards) == 1:
        results = _segment_shard(slices, prompt_map, factory, shards[0])
    else:
        with ThreadPoolExecutor(max_workers=len(shards)) as pool:
            futures = [
                pool.submit(_segment_shard, slices, prompt_map, factory, shard)
                for shard in shards
            ]
            for fut in futures:
                results.update(fut.result())

    planes = [results[i] for i in indices]
    mask = reconstruct(planes, axis, vol.grid)
    probe = factory()
    identity = probe.identity() if hasattr(probe, "identity") else str(probe)
    close = getattr(probe, "close", None)
    if close:
        close()
    return ExtractionResult(
        mask=mask,
        prompts=prompts,
        window=window,
        axis=axis,
        backend_identity=identity,
        slices_segmented=sum(1 for _, p in prompts if p is not None),
    )


def apply_mask(vol: Volume, mask: Mask3D) -> Volume:
    """Zero out non-brain voxels, yielding the extracted volume."""
    if vol.dims != mask.dims:
        raise ValueError(f"volume {vol.dims} vs mask {mask.dims}")
    return Volume(np.where(mask.data, vol.data, 0.0), vol.spacing, vol.affine)
