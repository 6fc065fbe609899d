"""Wire protocol to an out-of-process promptable segmenter.

One UTF-8 JSON object per line over the child's standard streams.
Request keys: id, width, height, pixels_b64, box, inclusions, exclusions.
Response keys: id, candidates (list of {rle, score}) or id, error.
Masks travel as alternating run lengths, zero-run first. A transport is
a serial channel: one in-flight request per process.
"""
from __future__ import annotations

import base64
import json
import shlex
import subprocess
import threading
from queue import Empty, Queue

import numpy as np

from .errors import BackendUnavailable, BadRunLength, EmptyPromptSet, ProtocolError, ProtocolTimeout
from .prompts import PromptSet
from .slicing import SliceImage


def rle_encode(mask: np.ndarray) -> list[int]:
    """Row-major run lengths, alternating and starting with a zero run."""
    flat = np.asarray(mask, dtype=bool).ravel()
    if flat.size == 0:
        return [0]
    changes = np.nonzero(np.diff(flat))[0] + 1
    bounds = np.concatenate([[0], changes, [flat.size]])
    runs = np.diff(bounds).tolist()
    if flat[0]:  # first run must describe zeros
        runs.insert(0, 0)
    return [int(r) for r in runs]


def rle_decode(runs: list[int], width: int, height: int) -> np.ndarray:
    """Inverse of rle_encode; validates positivity and the sum invariant."""
    if not runs:
        raise BadRunLength("empty run list")
    values = [int(r) for r in runs]
    if values[0] < 0 or any(r <= 0 for r in values[1:]):
        raise BadRunLength(f"runs after the first must be positive, got {values}")
    total = sum(values)
    if total != width * height:
        raise BadRunLength(f"runs sum to {total}, expected {width * height}")
    bits = np.zeros(total, dtype=bool)
    pos = 0
    value = False
    for run in values:
        if value:
            bits[pos : pos + run] = True
        pos += run
        value = not value
    return bits.reshape(height, width)


def encode_request(request_id: int, img: SliceImage, prompts: PromptSet) -> str:
    if not prompts.inclusions:
        raise EmptyPromptSet("request needs at least one inclusion point")
    obj = {
        "id": request_id,
        "width": img.width,
        "height": img.height,
        "pixels_b64": base64.b64encode(img.pixels.tobytes()).decode("ascii"),
        "box": list(prompts.box),
        "inclusions": [list(p) for p in prompts.inclusions],
        "exclusions": [list(p) for p in prompts.exclusions],
    }
    return json.dumps(obj, separators=(",", ":"))


def decode_response(line: str, expect_id: int, width: int, height: int):
    """Parse one response line into [(mask, score), ...]."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"response is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ProtocolError("response must be a JSON object")
    if obj.get("id") != expect_id:
        raise ProtocolError(f"response id {obj.get('id')!r} does not match request {expect_id}")
    if "error" in obj:
        raise ProtocolError(f"backend error: {obj['error']}")
    raw = obj.get("candidates")
    if not isinstance(raw, list) or not raw:
        raise ProtocolError("response candidates missing or empty")
    candidates = []
    for item in raw:
        try:
            runs = item["rle"]
            score = float(item["score"])
        except (TypeError, KeyError, ValueError) as exc:
            raise ProtocolError(f"malformed candidate: {item!r}") from exc
        if not 0.0 <= score <= 1.0:
            raise ProtocolError(f"candidate score {score} outside [0, 1]")
        candidates.append((rle_decode(runs, width, height), score))
    return candidates


class ProcessBackend:
    """Client side of the protocol, owning one spawned backend process."""

    def __init__(self, command, timeout: float = 120.0):
        if isinstance(command, str):
            command = shlex.split(command)
        self.command = list(command)
        self.timeout = timeout
        self._proc: subprocess.Popen | None = None
        self._lines: Queue = Queue()
        self._next_id = 1

    def identity(self) -> str:
        return "process:" + " ".join(self.command)

    def _ensure_started(self):
        if self._proc is not None:
            return
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise BackendUnavailable(f"cannot spawn backend {self.command}: {exc}") from exc
        reader = threading.Thread(target=self._pump, args=(self._proc,), daemon=True)
        reader.start()

    def _pump(self, proc):
        for line in proc.stdout:
            self._lines.put(line)
        self._lines.put(None)  # end of stream sentinel

    def predict(self, img: SliceImage, prompts: PromptSet):
        self._ensure_started()
        request_id = self._next_id
        self._next_id += 1
        line = encode_request(request_id, img, prompts)
        try:
            self._proc.stdin.write(line + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise BackendUnavailable(
                f"backend pipe closed: {exc}", exit_status=self._proc.poll()
            ) from exc
        try:
            reply = self._lines.get(timeout=self.timeout)
        except Empty:
            raise ProtocolTimeout(
                f"no response within {self.timeout}s from {self.command}"
            ) from None
        if reply is None:
            raise BackendUnavailable(
                "backend process exited mid-conversation",
                exit_status=self._proc.wait(),
            )
        return decode_response(reply, request_id, img.width, img.height)

    def close(self):
        if self._proc is None:
            return
        try:
            if self._proc.stdin:
                self._proc.stdin.close()
            self._proc.wait(timeout=10)
        except Exception:
            self._proc.kill()
        self._proc = None

    def __enter__(self):
        self._ensure_started()
        return self

    def __exit__(self, *exc):
        self.close()
