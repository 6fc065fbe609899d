"""Per-slice prompt generation: foreground estimate, bounding box, markers.

Inclusion markers sit at deep-interior points of the estimated foreground
(maximal Chebyshev distance to background); exclusion markers target the
brightest pixels in a rim just outside it, where skull and scalp live.
All choices are deterministic: ties break lexicographically by (y, x),
and Otsu ties resolve toward the largest threshold so constant slices
yield an empty foreground.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import EmptyForeground
from .slicing import SliceImage


@dataclass(frozen=True)
class PromptConfig:
    margin: int = 3
    k_inclusions: int = 5
    k_exclusions: int = 8
    min_foreground_area: int = 64
    rim_width: int = 4

    def __post_init__(self):
        if self.k_inclusions < 1:
            raise ValueError("k_inclusions must be >= 1")
        if self.k_exclusions < 0:
            raise ValueError("k_exclusions must be >= 0")
        if self.margin < 0:
            raise ValueError("margin must be >= 0")
        if self.min_foreground_area < 1:
            raise ValueError("min_foreground_area must be >= 1")
        if self.rim_width < 1:
            raise ValueError("rim_width must be >= 1")


@dataclass(frozen=True)
class PromptSet:
    """One slice's box plus inclusion/exclusion point prompts."""

    box: tuple[int, int, int, int]  # (x0, y0, x1, y1) inclusive
    inclusions: tuple[tuple[int, int], ...]
    exclusions: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        x0, y0, x1, y1 = (int(v) for v in self.box)
        if not (0 <= x0 <= x1 and 0 <= y0 <= y1):
            raise ValueError(f"malformed box {self.box}")
        object.__setattr__(self, "box", (x0, y0, x1, y1))
        inc = tuple((int(x), int(y)) for x, y in self.inclusions)
        exc = tuple((int(x), int(y)) for x, y in self.exclusions)
        for x, y in inc:
            if not (x0 <= x <= x1 and y0 <= y <= y1):
                raise ValueError(f"inclusion {(x, y)} outside box {self.box}")
        if set(inc) & set(exc):
            raise ValueError("inclusion and exclusion sets overlap")
        object.__setattr__(self, "inclusions", inc)
        object.__setattr__(self, "exclusions", exc)

    def validate_for(self, width: int, height: int) -> None:
        """Reject prompts that do not fit a width x height raster."""
        x0, y0, x1, y1 = self.box
        if x1 >= width or y1 >= height:
            raise ValueError(f"box {self.box} exceeds image {width}x{height}")
        for x, y in self.inclusions + self.exclusions:
            if not (0 <= x < width and 0 <= y < height):
                raise ValueError(f"point {(x, y)} outside image {width}x{height}")


_EIGHT = np.ones((3, 3), dtype=bool)


def otsu_threshold(pixels: np.ndarray) -> int:
    """Maximize between-class variance over the 256-bin histogram.

    Ties resolve to the largest threshold, so a single-valued histogram
    yields a threshold no pixel strictly exceeds.
    """
    hist = np.bincount(np.asarray(pixels, dtype=np.uint8).ravel(), minlength=256).astype(np.float64)
    total = hist.sum()
    w0 = np.cumsum(hist)
    w1 = total - w0
    levels = np.arange(256, dtype=np.float64)
    cum_mean = np.cumsum(hist * levels)
    grand = cum_mean[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        mu0 = cum_mean / w0
        mu1 = (grand - cum_mean) / w1
        var = (w0 / total) * (w1 / total) * (mu0 - mu1) ** 2
    var[~np.isfinite(var)] = 0.0
    best = var.max()
    return int(np.nonzero(var == best)[0][-1])


def estimate_foreground(img: SliceImage, min_foreground_area: int = 64) -> np.ndarray:
    """Largest bright 8-connected component, holes filled; may be empty."""
    threshold = otsu_threshold(img.pixels)
    candidates = img.pixels > threshold
    if not candidates.any():
        return np.zeros_like(candidates)
    labels, count = ndimage.label(candidates, structure=_EIGHT)
    sizes = np.bincount(labels.ravel())
    sizes[0] = 0
    keep = int(sizes.argmax())
    if sizes[keep] < min_foreground_area:
        return np.zeros_like(candidates)
    component = labels == keep
    return ndimage.binary_fill_holes(component)


def compute_box(fg: np.ndarray, margin: int = 3) -> tuple[int, int, int, int] | None:
    """Tight bounding box of the set bits, padded by `margin`, clipped."""
    ys, xs = np.nonzero(fg)
    if ys.size == 0:
        return None
    h, w = fg.shape
    return (
        max(int(xs.min()) - margin, 0),
        max(int(ys.min()) - margin, 0),
        min(int(xs.max()) + margin, w - 1),
        min(int(ys.max()) + margin, h - 1),
    )


def _chebyshev_ball(radius: int) -> np.ndarray:
    return np.ones((2 * radius + 1, 2 * radius + 1), dtype=bool)


def _greedy_select(order_ys, order_xs, k: int, separation: int) -> list[tuple[int, int]]:
    """Walk candidates in priority order, keeping points pairwise >= separation apart."""
    chosen: list[tuple[int, int]] = []
    for y, x in zip(order_ys, order_xs):
        if len(chosen) == k:
            break
        if all(max(abs(x - cx), abs(y - cy)) >= separation for cx, cy in chosen):
            chosen.append((int(x), int(y)))
    return chosen


def place_markers(img: SliceImage, fg: np.ndarray, box, cfg: PromptConfig) -> PromptSet:
    """Choose inclusion and exclusion points for one slice."""
    if box is None or not fg.any():
        raise EmptyForeground("marker placement needs a non-empty foreground")

    dist = ndimage.distance_transform_cdt(fg, metric="chessboard")
    ys, xs = np.nonzero(fg)
    depth = dist[ys, xs]
    order = np.lexsort((xs, ys, -depth))
    inclusions = _greedy_select(ys[order], xs[order], cfg.k_inclusions, cfg.rim_width)

    exclusions: list[tuple[int, int]] = []
    if cfg.k_exclusions > 0:
        inflated = ndimage.binary_dilation(fg, structure=_chebyshev_ball(cfg.rim_width))
        x0, y0, x1, y1 = box
        grow = 2 * cfg.rim_width
        h, w = fg.shape
        zone = np.zeros((h, w), dtype=bool)
        zone[max(y0 - grow, 0) : min(y1 + grow, h - 1) + 1,
             max(x0 - grow, 0) : min(x1 + grow, w - 1) + 1] = True
        ring = zone & ~inflated
        rys, rxs = np.nonzero(ring)
        if rys.size:
            brightness = img.pixels[rys, rxs].astype(np.int64)
            order = np.lexsort((rxs, rys, -brightness))
            exclusions = _greedy_select(rys[order], rxs[order], cfg.k_exclusions, cfg.rim_width)

    return PromptSet(box=box, inclusions=tuple(inclusions), exclusions=tuple(exclusions))


def generate_prompts(
    slices: list[SliceImage], cfg: PromptConfig | None = None
) -> list[tuple[int, PromptSet | None]]:
    """Per-slice prompts; None marks slices with no usable foreground."""
    cfg = cfg or PromptConfig()
    out: list[tuple[int, PromptSet | None]] = []
    for img in slices:
        fg = estimate_foreground(img, cfg.min_foreground_area)
        if not fg.any():
            out.append((img.index, None))
            continue
        box = compute_box(fg, cfg.margin)
        out.append((img.index, place_markers(img, fg, box, cfg)))
    return out


# --- JSON (de)serialization ---------------------------------------------------

def prompt_to_obj(ps: PromptSet) -> dict:
    return {
        "box": list(ps.box),
        "inclusions": [list(p) for p in ps.inclusions],
        "exclusions": [list(p) for p in ps.exclusions],
    }


def prompt_from_obj(obj: dict) -> PromptSet:
    return PromptSet(
        box=tuple(obj["box"]),
        inclusions=tuple((x, y) for x, y in obj.get("inclusions", [])),
        exclusions=tuple((x, y) for x, y in obj.get("exclusions", [])),
    )


def prompts_to_obj(prompts: list[tuple[int, PromptSet | None]], axis: str, window) -> dict:
    return {
        "axis": axis,
        "window": [float(window[0]), float(window[1])],
        "slices": {
            str(idx): (prompt_to_obj(ps) if ps is not None else None)
            for idx, ps in prompts
        },
    }


def prompts_from_obj(obj: dict) -> dict[int, PromptSet | None]:
    """Parse a prompt file; accepts either the full dump or a bare slice map."""
    slices = obj.get("slices", obj)
    out: dict[int, PromptSet | None] = {}
    for key, val in slices.items():
        out[int(key)] = None if val is None else prompt_from_obj(val)
    return out
