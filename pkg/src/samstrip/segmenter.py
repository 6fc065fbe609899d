"""Promptable 2D segmentation: backend contract plus the built-in backend.

A backend takes a slice and a prompt set and returns candidate masks with
scores. The built-in reference backend grows regions from the inclusion
seeds with an intensity tolerance, treating exclusion points (and their
immediate neighborhoods) as barriers, so the whole pipeline runs with no
model at all.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import EmptyPromptSet, ProtocolError
from .prompts import PromptSet
from .slicing import SliceImage

_SHIFTS_4 = ((-1, 0), (1, 0), (0, -1), (0, 1))
_SHIFTS_8 = _SHIFTS_4 + ((-1, -1), (-1, 1), (1, -1), (1, 1))


@dataclass(frozen=True)
class ReferenceBackendConfig:
    tolerance: int = 25
    connectivity: int = 4

    def __post_init__(self):
        if not 0 <= self.tolerance <= 255:
            raise ValueError("tolerance must be in [0, 255]")
        if self.connectivity not in (4, 8):
            raise ValueError("connectivity must be 4 or 8")


def _shifted(arr: np.ndarray, dy: int, dx: int, fill=0):
    """Array shifted by (dy, dx) with constant fill, same shape."""
    out = np.full_like(arr, fill)
    h, w = arr.shape
    ys = slice(max(dy, 0), h + min(dy, 0))
    xs = slice(max(dx, 0), w + min(dx, 0))
    src_ys = slice(max(-dy, 0), h + min(-dy, 0))
    src_xs = slice(max(-dx, 0), w + min(-dx, 0))
    out[ys, xs] = arr[src_ys, src_xs]
    return out


def _grow_region(px: np.ndarray, seed, eligible, tolerance, shifts) -> np.ndarray:
    """Frontier flood fill: a pixel joins when some neighbor already in the
    region differs by <= tolerance (eligibility is checked separately)."""
    region = np.zeros(px.shape, dtype=bool)
    sx, sy = seed
    if not eligible[sy, sx]:
        return region
    region[sy, sx] = True
    frontier = region.copy()
    while frontier.any():
        admitted = np.zeros_like(region)
        for dy, dx in shifts:
            neighbor_in_frontier = _shifted(frontier, dy, dx, fill=False)
            neighbor_value = _shifted(px, dy, dx, fill=np.int16(-9999))
            close = np.abs(px - neighbor_value) <= tolerance
            admitted |= neighbor_in_frontier & close
        admitted &= eligible & ~region
        region |= admitted
        frontier = admitted
    return region


def reference_segment(
    img: SliceImage, prompts: PromptSet, cfg: ReferenceBackendConfig | None = None
) -> np.ndarray:
    """Seeded region growing from every inclusion point, union, holes filled.

    Admission requires the joining pixel to be within `tolerance` of its
    admitting neighbor and within 2*tolerance of the seed pixel; exclusion
    points and anything within Chebyshev distance 1 of them never join.
    """
    cfg = cfg or ReferenceBackendConfig()
    if not prompts.inclusions:
        raise EmptyPromptSet("reference backend needs at least one inclusion point")
    h, w = img.pixels.shape
    x0, y0, x1, y1 = prompts.box

    barrier = np.zeros((h, w), dtype=bool)
    for bx, by in prompts.exclusions:
        barrier[max(by - 1, 0) : min(by + 2, h), max(bx - 1, 0) : min(bx + 2, w)] = True

    in_box = np.zeros((h, w), dtype=bool)
    in_box[y0 : y1 + 1, x0 : x1 + 1] = True

    shifts = _SHIFTS_4 if cfg.connectivity == 4 else _SHIFTS_8
    px = img.pixels.astype(np.int16)
    union = np.zeros((h, w), dtype=bool)
    grown: list[tuple[np.ndarray, int]] = []
    for sx, sy in prompts.inclusions:
        seed_value = int(px[sy, sx])
        # a seed inside an equal-intensity grown region reaches the same set
        if any(value == seed_value and region[sy, sx] for region, value in grown):
            continue
        eligible = in_box & ~barrier & (np.abs(px - seed_value) <= 2 * cfg.tolerance)
        region = _grow_region(px, (sx, sy), eligible, cfg.tolerance, shifts)
        grown.append((region, seed_value))
        union |= region
    return ndimage.binary_fill_holes(union)


class ReferenceBackend:
    """In-process deterministic backend wrapping reference_segment."""

    def __init__(self, cfg: ReferenceBackendConfig | None = None):
        self.cfg = cfg or ReferenceBackendConfig()

    def identity(self) -> str:
        return f"reference(tolerance={self.cfg.tolerance},connectivity={self.cfg.connectivity})"

    def predict(self, img: SliceImage, prompts: PromptSet):
        return [(reference_segment(img, prompts, self.cfg), 1.0)]

    def close(self):
        pass


def segment(img: SliceImage, prompts: PromptSet, backend) -> np.ndarray:
    """One binary mask from a backend's candidates, clipped to the box.

    Among candidates covering at least half the inclusion points the
    highest score wins; if none qualify, the highest score outright.
    """
    if not prompts.inclusions:
        raise EmptyPromptSet("segmentation needs at least one inclusion point")
    candidates = backend.predict(img, prompts)
    if not candidates:
        raise ProtocolError("backend returned no candidates")

    def coverage(mask):
        return sum(1 for x, y in prompts.inclusions if mask[y, x])

    need = len(prompts.inclusions) / 2.0
    qualified = [(m, s) for m, s in candidates if coverage(m) >= need]
    pool = qualified if qualified else candidates
    best_mask, _ = max(pool, key=lambda pair: pair[1])

    x0, y0, x1, y1 = prompts.box
    clipped = np.zeros_like(best_mask)
    clipped[y0 : y1 + 1, x0 : x1 + 1] = best_mask[y0 : y1 + 1, x0 : x1 + 1]
    return clipped
