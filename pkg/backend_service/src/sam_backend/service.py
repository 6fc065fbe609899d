"""Request loop for the promptable-segmenter service.

Speaks newline-delimited JSON on stdin/stdout: requests carry an 8-bit
grayscale image (base64), a box, and labeled point prompts; responses
carry candidate masks as alternating run lengths (zero-run first) with
scores. Bad requests produce error objects, never process death; only
startup failures exit nonzero. Logging goes to stderr.
"""
from __future__ import annotations

import base64
import binascii
import json
import sys
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ServiceConfig:
    mode: str = "echo"
    checkpoint: str | None = None
    device: str = "cpu"
    echo_threshold: int = 128
    model_type: str = "auto"

    def __post_init__(self):
        if self.mode not in ("echo", "model"):
            raise ValueError(f"mode must be echo or model, got {self.mode!r}")
        if self.mode == "model" and not self.checkpoint:
            raise ValueError("mode=model requires a checkpoint path")
        if not 0 <= self.echo_threshold <= 255:
            raise ValueError("echo threshold must be in [0, 255]")


def rle_encode(mask: np.ndarray) -> list[int]:
    """Row-major alternating run lengths, zero-run first."""
    flat = np.asarray(mask, dtype=bool).ravel()
    if flat.size == 0:
        return [0]
    changes = np.nonzero(np.diff(flat))[0] + 1
    bounds = np.concatenate([[0], changes, [flat.size]])
    runs = [int(r) for r in np.diff(bounds)]
    if flat[0]:
        runs.insert(0, 0)
    return runs


class RequestError(Exception):
    """Problem with one request; reported as an error object."""


def _parse_request(obj):
    if not isinstance(obj, dict):
        raise RequestError("request must be a JSON object")
    try:
        width = int(obj["width"])
        height = int(obj["height"])
        pixels_b64 = obj["pixels_b64"]
        box = [int(v) for v in obj["box"]]
        inclusions = [(int(x), int(y)) for x, y in obj.get("inclusions", [])]
        exclusions = [(int(x), int(y)) for x, y in obj.get("exclusions", [])]
    except (KeyError, TypeError, ValueError) as exc:
        raise RequestError(f"malformed request fields: {exc}") from exc
    if width <= 0 or height <= 0:
        raise RequestError(f"bad raster {width}x{height}")
    if len(box) != 4:
        raise RequestError(f"box must have 4 entries, got {len(box)}")
    try:
        raw = base64.b64decode(pixels_b64, validate=True)
    except (binascii.Error, TypeError) as exc:
        raise RequestError(f"pixels_b64 does not decode: {exc}") from exc
    if len(raw) != width * height:
        raise RequestError(
            f"pixel payload is {len(raw)} bytes, expected {width * height}"
        )
    image = np.frombuffer(raw, dtype=np.uint8).reshape(height, width)
    return image, box, inclusions, exclusions


def _echo_candidates(image, box, threshold):
    h, w = image.shape
    x0, y0, x1, y1 = box
    mask = np.zeros((h, w), dtype=bool)
    ys = slice(max(y0, 0), min(y1, h - 1) + 1)
    xs = slice(max(x0, 0), min(x1, w - 1) + 1)
    mask[ys, xs] = image[ys, xs] >= threshold
    return [(mask, 0.5)]


class SamPredictorAdapter:
    """Thin wrapper so the loop never imports torch in echo mode."""

    def __init__(self, cfg: ServiceConfig):
        from segment_anything import SamPredictor, sam_model_registry

        model_type = cfg.model_type
        if model_type == "auto":
            model_type = _infer_model_type(cfg.checkpoint)
        sam = sam_model_registry[model_type](checkpoint=cfg.checkpoint)
        sam.to(cfg.device)
        self._predictor = SamPredictor(sam)

    def candidates(self, image, box, inclusions, exclusions):
        rgb = np.repeat(image[:, :, None], 3, axis=2)
        self._predictor.set_image(rgb)
        points = list(inclusions) + list(exclusions)
        labels = [1] * len(inclusions) + [0] * len(exclusions)
        masks, scores, _ = self._predictor.predict(
            point_coords=np.asarray(points, dtype=np.float64) if points else None,
            point_labels=np.asarray(labels, dtype=np.int64) if points else None,
            box=np.asarray(box, dtype=np.float64)[None, :],
            multimask_output=True,
        )
        return [
            (masks[i].astype(bool), float(np.clip(scores[i], 0.0, 1.0)))
            for i in range(masks.shape[0])
        ]


def _infer_model_type(checkpoint: str) -> str:
    name = checkpoint.lower()
    for key in ("vit_h", "vit_l", "vit_b"):
        if key in name:
            return key
    return "vit_h"


def serve(cfg: ServiceConfig, stdin=None, stdout=None) -> int:
    """Run the request loop until end-of-input; returns the exit status."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout

    predictor = None
    if cfg.mode == "model":
        try:
            predictor = SamPredictorAdapter(cfg)
        except Exception as exc:  # noqa: BLE001 - any startup failure is fatal
            print(f"sam-backend: cannot start model mode: {exc}", file=sys.stderr)
            return 1

    def emit(obj):
        stdout.write(json.dumps(obj, separators=(",", ":")) + "\n")
        stdout.flush()

    last_id = -1
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            emit({"id": last_id, "error": f"bad JSON: {exc}"})
            continue
        request_id = obj.get("id", -1) if isinstance(obj, dict) else -1
        if isinstance(request_id, int):
            last_id = request_id
        else:
            request_id, last_id = -1, -1
        try:
            image, box, inclusions, exclusions = _parse_request(obj)
            if cfg.mode == "echo":
                candidates = _echo_candidates(image, box, cfg.echo_threshold)
            else:
                candidates = predictor.candidates(image, box, inclusions, exclusions)
            emit(
                {
                    "id": request_id,
                    "candidates": [
                        {"rle": rle_encode(mask), "score": score}
                        for mask, score in candidates
                    ],
                }
            )
        except RequestError as exc:
            emit({"id": request_id, "error": str(exc)})
        except Exception as exc:  # noqa: BLE001 - requests must not kill the loop
            emit({"id": request_id, "error": f"internal error: {exc}"})
    return 0
