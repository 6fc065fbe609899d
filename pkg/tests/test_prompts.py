import numpy as np
import pytest

from samstrip.errors import EmptyForeground
from samstrip.prompts import (
    PromptConfig,
    PromptSet,
    compute_box,
    estimate_foreground,
    generate_prompts,
    otsu_threshold,
    place_markers,
    prompt_from_obj,
    prompt_to_obj,
    prompts_from_obj,
    prompts_to_obj,
)
from samstrip.slicing import SliceImage, decompose
from samstrip.volume import Volume

from oracles import (
    brute_chebyshev_distance_to_background,
    brute_fill_holes,
    brute_label,
    brute_otsu_threshold,
)


def _img(pixels):
    return SliceImage(np.asarray(pixels, dtype=np.uint8), "axial", 0, (0.0, 255.0))


def _square_slice(size=50, lo=10, hi=200, top=15, left=15, side=20):
    px = np.full((size, size), lo, dtype=np.uint8)
    px[top : top + side, left : left + side] = hi
    return _img(px)


def test_otsu_matches_brute_force_on_bimodal():
    img = _square_slice()
    assert otsu_threshold(img.pixels) == brute_otsu_threshold(img.pixels)
    t = otsu_threshold(img.pixels)
    assert 10 <= t < 200


def test_otsu_matches_brute_force_random(rng):
    for _ in range(10):
        px = rng.integers(0, 256, size=(20, 20)).astype(np.uint8)
        assert otsu_threshold(px) == brute_otsu_threshold(px)


def test_otsu_constant_slice_selects_nothing():
    for value in (0, 5, 255):
        px = np.full((8, 8), value, dtype=np.uint8)
        t = otsu_threshold(px)
        assert not (px > t).any()


def test_foreground_is_exactly_the_square():
    img = _square_slice()
    fg = estimate_foreground(img)
    expected = img.pixels == 200
    np.testing.assert_array_equal(fg, expected)


def test_foreground_constant_slice_empty():
    img = _img(np.full((16, 16), 40))
    assert not estimate_foreground(img).any()


def test_foreground_largest_component_wins():
    px = np.full((40, 40), 10, dtype=np.uint8)
    px[5:15, 5:15] = 200     # 100 px blob
    px[30:33, 30:33] = 200   # 9 px blob
    fg = estimate_foreground(_img(px), min_foreground_area=1)
    labels, count = brute_label(px == 200, connectivity=8)
    assert count == 2
    np.testing.assert_array_equal(fg, labels == labels[10, 10])
    assert not fg[31, 31]


def test_foreground_holes_filled():
    px = np.full((30, 30), 10, dtype=np.uint8)
    px[5:25, 5:25] = 200
    px[12:16, 12:16] = 10  # interior hole
    fg = estimate_foreground(_img(px), min_foreground_area=1)
    np.testing.assert_array_equal(fg, brute_fill_holes(px == 200))
    assert fg[13, 13]


def test_foreground_min_area_gate():
    px = np.full((30, 30), 10, dtype=np.uint8)
    px[5:10, 5:10] = 200  # 25 px
    assert not estimate_foreground(_img(px), min_foreground_area=64).any()
    assert estimate_foreground(_img(px), min_foreground_area=25).any()


def test_compute_box_hand_case():
    fg = np.zeros((40, 40), dtype=bool)
    fg[10:30, 5:15] = True  # rows 10..29, cols 5..14
    assert compute_box(fg, margin=2) == (3, 8, 16, 31)


def test_compute_box_clipped_at_edges():
    fg = np.zeros((20, 20), dtype=bool)
    fg[0:5, 0:5] = True
    assert compute_box(fg, margin=2) == (0, 0, 6, 6)


def test_compute_box_empty():
    assert compute_box(np.zeros((5, 5), dtype=bool), 2) is None


def test_markers_on_square_phantom():
    img = _square_slice()
    cfg = PromptConfig()
    fg = estimate_foreground(img, cfg.min_foreground_area)
    box = compute_box(fg, cfg.margin)
    ps = place_markers(img, fg, box, cfg)

    # first inclusion maximizes distance-to-background: the square center
    dist = brute_chebyshev_distance_to_background(fg)
    fx, fy = ps.inclusions[0]
    assert dist[fy, fx] == dist.max()
    assert abs(fx - 24.5) <= 1 and abs(fy - 24.5) <= 1

    x0, y0, x1, y1 = ps.box
    for x, y in ps.inclusions:
        assert fg[y, x]
        assert x0 <= x <= x1 and y0 <= y <= y1


def test_markers_tie_break_is_lexicographic():
    img = _square_slice()
    fg = estimate_foreground(img)
    box = compute_box(fg, 3)
    ps = place_markers(img, fg, box, PromptConfig())
    dist = brute_chebyshev_distance_to_background(fg)
    peak = dist.max()
    ys, xs = np.nonzero(dist == peak)
    first = min(zip(ys, xs))  # smallest (y, x)
    assert ps.inclusions[0] == (first[1], first[0])


def test_markers_separation(rng):
    img = _square_slice()
    cfg = PromptConfig(rim_width=4)
    fg = estimate_foreground(img)
    ps = place_markers(img, fg, compute_box(fg, cfg.margin), cfg)
    pts = ps.inclusions
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            assert max(abs(pts[i][0] - pts[j][0]), abs(pts[i][1] - pts[j][1])) >= 4


def test_exclusions_target_bright_rim():
    img_px = np.full((50, 50), 10, dtype=np.uint8)
    img_px[20:30, 20:30] = 200
    img_px[10, 25] = 250  # bright spot outside the dilated foreground
    img = _img(img_px)
    cfg = PromptConfig(min_foreground_area=1)
    fg = estimate_foreground(img, 1)
    ps = place_markers(img, fg, compute_box(fg, cfg.margin), cfg)
    assert (25, 10) in ps.exclusions


def test_exclusions_outside_dilated_foreground():
    img = _square_slice()
    cfg = PromptConfig()
    fg = estimate_foreground(img)
    ps = place_markers(img, fg, compute_box(fg, cfg.margin), cfg)
    from scipy import ndimage

    inflated = ndimage.binary_dilation(fg, np.ones((2 * cfg.rim_width + 1,) * 2, dtype=bool))
    for x, y in ps.exclusions:
        assert not inflated[y, x]


def test_zero_exclusions_requested():
    img = _square_slice()
    cfg = PromptConfig(k_exclusions=0)
    fg = estimate_foreground(img)
    ps = place_markers(img, fg, compute_box(fg, cfg.margin), cfg)
    assert ps.exclusions == ()
    assert len(ps.inclusions) >= 1


def test_exclusions_exhaust_when_no_ring_exists():
    # foreground covering the whole raster leaves no rim candidates
    img = _img(np.full((20, 20), 200))
    fg = np.ones((20, 20), dtype=bool)
    ps = place_markers(img, fg, (0, 0, 19, 19), PromptConfig())
    assert ps.exclusions == ()


def test_place_markers_requires_foreground():
    img = _square_slice()
    with pytest.raises(EmptyForeground):
        place_markers(img, np.zeros((50, 50), dtype=bool), None, PromptConfig())


def test_generate_prompts_all_background():
    vol = Volume(np.zeros((8, 8, 4)), (1, 1, 1), np.eye(4))
    slices = decompose(vol, "axial", (0.0, 1.0))
    out = generate_prompts(slices)
    assert len(out) == 4
    assert all(ps is None for _, ps in out)


def test_generate_prompts_on_phantom(default_phantom):
    vol, gt = default_phantom
    slices = decompose(vol, "axial")
    out = generate_prompts(slices)
    assert len(out) == len(slices)
    # air-only end slices yield no prompts; brain-bearing slices do
    assert out[0][1] is None and out[-1][1] is None
    brain_per_slice = gt.data.sum(axis=(0, 1))
    rich = [i for i, n in enumerate(brain_per_slice) if n > 500]
    assert all(out[i][1] is not None for i in rich)


def test_generate_prompts_deterministic(default_phantom):
    vol, _ = default_phantom
    slices = decompose(vol, "axial")
    assert generate_prompts(slices) == generate_prompts(slices)


def test_promptset_invariants():
    with pytest.raises(ValueError):
        PromptSet(box=(5, 5, 4, 9), inclusions=())
    with pytest.raises(ValueError):
        PromptSet(box=(0, 0, 9, 9), inclusions=((15, 3),))
    with pytest.raises(ValueError):
        PromptSet(box=(0, 0, 9, 9), inclusions=((3, 3),), exclusions=((3, 3),))


def test_prompt_config_validation():
    with pytest.raises(ValueError):
        PromptConfig(k_inclusions=0)
    with pytest.raises(ValueError):
        PromptConfig(margin=-1)
    with pytest.raises(ValueError):
        PromptConfig(rim_width=0)


def test_prompt_json_roundtrip():
    ps = PromptSet(box=(1, 2, 30, 40), inclusions=((5, 6), (7, 8)), exclusions=((0, 2),))
    assert prompt_from_obj(prompt_to_obj(ps)) == ps
    dump = prompts_to_obj([(0, ps), (1, None)], "axial", (0.0, 200.0))
    parsed = prompts_from_obj(dump)
    assert parsed == {0: ps, 1: None}
    # bare slice maps (manual prompt files) parse too
    assert prompts_from_obj({"4": prompt_to_obj(ps)}) == {4: ps}
