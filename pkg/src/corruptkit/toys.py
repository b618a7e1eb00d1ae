"""Reference plug-ins speaking the NDJSON protocol, for tests and demos.

Run as ``python -m corruptkit.toys <role> [options]``.  Roles:

``hf``        score = normalised high-frequency energy of the image
``constant``  always answer ``--value``
``die``       answer ``--after`` items, then exit
``sleep``     wait ``--seconds`` before every answer
``identity``  transform: copy input bytes to ``--out``
``median``    transform: median-filter into ``--out``
``missing``   transform: answer with a path that does not exist
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import shutil
import sys
import time

import numpy as np
from scipy import ndimage

from .corrupt import blur
from .imgcore import load_image, save_image

HF_SCALE = 12.0


def hf_energy(img) -> float:
    """Mean absolute 4-neighbour Laplacian of the luma channel."""
    luma = np.asarray(img, dtype=np.float64) @ np.array([0.299, 0.587, 0.114])
    lap = ndimage.laplace(luma, mode="mirror")
    return float(np.mean(np.abs(lap)))


def hf_score(img, scale: float = HF_SCALE) -> float:
    """Map high-frequency energy into [0, 1): ``e / (e + scale)``."""
    e = hf_energy(img)
    return e / (e + scale)


def _serve(handle, stdin=sys.stdin, stdout=sys.stdout):
    for line in stdin:
        if not line.strip():
            continue
        req = json.loads(line)
        resp = handle(req)
        if resp is None:
            return
        stdout.write(json.dumps(resp) + "\n")
        stdout.flush()


def _out_path(out_dir, req, ext):
    tag = hashlib.sha1(req["id"].encode("utf-8")).hexdigest()[:8]
    name = f"{tag}_{os.path.basename(req['path'])}"
    return os.path.join(out_dir, os.path.splitext(name)[0] + ext)


def main(argv=None):
    ap = argparse.ArgumentParser(prog="python -m corruptkit.toys")
    ap.add_argument("role", choices=["hf", "constant", "die", "sleep", "identity", "median", "missing"])
    ap.add_argument("--value", type=float, default=0.5)
    ap.add_argument("--after", type=int, default=1)
    ap.add_argument("--seconds", type=float, default=5.0)
    ap.add_argument("--scale", type=float, default=HF_SCALE)
    ap.add_argument("--kernel", type=int, default=3)
    ap.add_argument("--out", default=None)
    args = ap.parse_args(argv)

    if args.role in ("identity", "median") and not args.out:
        ap.error(f"{args.role} needs --out")
    if args.out:
        os.makedirs(args.out, exist_ok=True)

    count = 0

    def handle(req):
        nonlocal count
        count += 1
        role = args.role
        if role == "hf":
            return {"id": req["id"], "score": hf_score(load_image(req["path"]), args.scale)}
        if role == "constant":
            return {"id": req["id"], "score": args.value}
        if role == "die":
            if count > args.after:
                sys.exit(1)
            return {"id": req["id"], "score": args.value}
        if role == "sleep":
            time.sleep(args.seconds)
            return {"id": req["id"], "score": args.value}
        if role == "identity":
            dst = _out_path(args.out, req, os.path.splitext(req["path"])[1])
            shutil.copyfile(req["path"], dst)
            return {"id": req["id"], "path": os.path.abspath(dst)}
        if role == "median":
            dst = _out_path(args.out, req, ".png")
            save_image(blur(load_image(req["path"]), "median", args.kernel), dst)
            return {"id": req["id"], "path": os.path.abspath(dst)}
        return {"id": req["id"], "path": os.path.join(os.sep, "nonexistent", req["id"] + ".png")}

    _serve(handle)


if __name__ == "__main__":
    main()
