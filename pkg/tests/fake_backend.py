"""Minimal protocol peer for transport tests, independent of the package.

Modes: echo (threshold-in-box mask), bad-id, garbage, die, sleep.
"""
import base64
import json
import sys
import time


def rle(bits):
    runs = []
    current, count = 0, 0
    for b in bits:
        if b == current:
            count += 1
        else:
            runs.append(count)
            current, count = b, 1
    runs.append(count)
    return runs


def main():
    mode = sys.argv[1] if len(sys.argv) > 1 else "echo"
    for line in sys.stdin:
        req = json.loads(line)
        if mode == "die":
            sys.exit(3)
        if mode == "sleep":
            time.sleep(30)
        if mode == "garbage":
            print("not json at all")
            sys.stdout.flush()
            continue
        w, h = req["width"], req["height"]
        pixels = base64.b64decode(req["pixels_b64"])
        x0, y0, x1, y1 = req["box"]
        bits = []
        for y in range(h):
            for x in range(w):
                inside = x0 <= x <= x1 and y0 <= y <= y1
                bits.append(1 if inside and pixels[y * w + x] >= 128 else 0)
        reply = {
            "id": req["id"] + 1 if mode == "bad-id" else req["id"],
            "candidates": [{"rle": rle(bits), "score": 0.5}],
        }
        print(json.dumps(reply))
        sys.stdout.flush()


if __name__ == "__main__":
    main()
