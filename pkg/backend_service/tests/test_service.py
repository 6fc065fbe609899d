"""Protocol conformance for the echo-mode service.

Covers the acceptance gate: a 50-request golden transcript byte-compared
after JSON canonicalization, survival of injected malformed lines, and a
clean zero exit at end-of-input.
"""
import base64
import json
import random
import subprocess
import sys

import pytest

SERVICE = [sys.executable, "-m", "sam_backend", "--mode", "echo"]


def canonical(line: str) -> bytes:
    return json.dumps(json.loads(line), sort_keys=True, separators=(",", ":")).encode()


def expected_echo_response(req: dict, threshold: int = 128) -> dict:
    """Independent oracle: plain-Python thresholding and run-length coding."""
    w, h = req["width"], req["height"]
    pixels = base64.b64decode(req["pixels_b64"])
    x0, y0, x1, y1 = req["box"]
    bits = []
    for y in range(h):
        for x in range(w):
            inside = x0 <= x <= x1 and y0 <= y <= y1
            bits.append(1 if inside and pixels[y * w + x] >= threshold else 0)
    runs, current, count = [], 0, 0
    for b in bits:
        if b == current:
            count += 1
        else:
            runs.append(count)
            current, count = b, 1
    runs.append(count)
    return {"id": req["id"], "candidates": [{"rle": runs, "score": 0.5}]}


def make_requests(n: int = 50, seed: int = 1234) -> list[dict]:
    rng = random.Random(seed)
    out = []
    for i in range(1, n + 1):
        w = rng.randint(3, 24)
        h = rng.randint(3, 24)
        pixels = bytes(rng.randrange(256) for _ in range(w * h))
        x0 = rng.randrange(w)
        x1 = rng.randrange(x0, w)
        y0 = rng.randrange(h)
        y1 = rng.randrange(y0, h)
        out.append(
            {
                "id": i,
                "width": w,
                "height": h,
                "pixels_b64": base64.b64encode(pixels).decode("ascii"),
                "box": [x0, y0, x1, y1],
                "inclusions": [[x0, y0]],
                "exclusions": [],
            }
        )
    return out


def run_service(stdin_text: str, args=()):
    return subprocess.run(
        SERVICE + list(args),
        input=stdin_text,
        capture_output=True,
        text=True,
        timeout=60,
    )


def test_golden_transcript_50_requests():
    requests = make_requests(50)
    proc = run_service("".join(json.dumps(r) + "\n" for r in requests))
    assert proc.returncode == 0, proc.stderr
    lines = proc.stdout.splitlines()
    assert len(lines) == 50
    for req, line in zip(requests, lines):
        assert canonical(line) == canonical(json.dumps(expected_echo_response(req)))


def test_responses_preserve_order_and_ids():
    requests = make_requests(20, seed=77)
    proc = run_service("".join(json.dumps(r) + "\n" for r in requests))
    ids = [json.loads(line)["id"] for line in proc.stdout.splitlines()]
    assert ids == [r["id"] for r in requests]


def test_rle_sum_invariant_holds():
    requests = make_requests(20, seed=99)
    proc = run_service("".join(json.dumps(r) + "\n" for r in requests))
    for req, line in zip(requests, proc.stdout.splitlines()):
        obj = json.loads(line)
        for cand in obj["candidates"]:
            runs = cand["rle"]
            assert sum(runs) == req["width"] * req["height"]
            assert runs[0] >= 0 and all(r > 0 for r in runs[1:])


def test_echo_mode_is_deterministic():
    payload = "".join(json.dumps(r) + "\n" for r in make_requests(10, seed=5))
    first = run_service(payload)
    second = run_service(payload)
    assert first.stdout == second.stdout


def test_survives_malformed_lines_and_exits_zero():
    requests = make_requests(4, seed=3)
    chunks = [
        json.dumps(requests[0]),
        "{this is not json",
        json.dumps(requests[1]),
        '"just a string"',
        json.dumps({"id": 9, "width": 2, "height": 2, "pixels_b64": "!!!", "box": [0, 0, 1, 1]}),
        json.dumps(requests[2]),
        json.dumps(requests[3]),
    ]
    proc = run_service("".join(c + "\n" for c in chunks))
    assert proc.returncode == 0, proc.stderr
    lines = [json.loads(l) for l in proc.stdout.splitlines()]
    assert len(lines) == 7
    # malformed JSON reports the last seen id; the first bad line saw id 1
    assert lines[1] == {"id": 1, "error": lines[1]["error"]}
    assert "error" in lines[1] and "error" in lines[3] and "error" in lines[4]
    assert lines[4]["id"] == 9
    assert lines[5]["id"] == requests[2]["id"] and "candidates" in lines[5]
    assert lines[6]["id"] == requests[3]["id"]


def test_eof_exits_zero_with_no_output():
    proc = run_service("")
    assert proc.returncode == 0
    assert proc.stdout == ""


def test_blank_lines_ignored():
    requests = make_requests(2, seed=8)
    payload = "\n" + json.dumps(requests[0]) + "\n\n" + json.dumps(requests[1]) + "\n\n"
    proc = run_service(payload)
    assert proc.returncode == 0
    assert len(proc.stdout.splitlines()) == 2


def test_echo_threshold_flag():
    req = make_requests(1, seed=21)[0]
    lo = run_service(json.dumps(req) + "\n", args=["--echo-threshold", "0"])
    hi = run_service(json.dumps(req) + "\n", args=["--echo-threshold", "255"])
    lo_mask = json.loads(lo.stdout)["candidates"][0]["rle"]
    hi_mask = json.loads(hi.stdout)["candidates"][0]["rle"]
    assert lo_mask != hi_mask


def test_payload_size_mismatch_is_request_error():
    req = make_requests(1)[0]
    req["width"] += 1  # payload no longer matches
    proc = run_service(json.dumps(req) + "\n")
    obj = json.loads(proc.stdout.splitlines()[0])
    assert obj["id"] == req["id"]
    assert "error" in obj
    assert proc.returncode == 0


def test_model_mode_requires_checkpoint():
    proc = run_service("", args=["--mode", "model"])
    assert proc.returncode != 0
    assert "checkpoint" in proc.stderr.lower()


def test_model_mode_startup_failure_is_diagnosed():
    proc = run_service("", args=["--mode", "model", "--checkpoint", "/missing.pth"])
    assert proc.returncode != 0
    assert proc.stderr.strip() != ""
    assert proc.stdout == ""


def test_config_validation():
    from sam_backend import ServiceConfig

    with pytest.raises(ValueError):
        ServiceConfig(mode="model")
    with pytest.raises(ValueError):
        ServiceConfig(mode="weird")
    with pytest.raises(ValueError):
        ServiceConfig(echo_threshold=300)
