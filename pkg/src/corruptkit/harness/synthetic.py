"""Synthetic real/fake corpus on which the ``hf`` toy detector is separable.

"Real" images are smooth colour fields with mid-frequency texture; "fake"
images carry an additional fine-grain (per-pixel) texture.  The toy
detector scores high-frequency energy, so on unaltered data it ranks every
fake above every real, while blur and strong noise erode that margin.
"""
from __future__ import annotations

import os

import numpy as np
from scipy import ndimage

from ..imgcore import derive_rng, save_image
from .manifest import ManifestEntry, write_manifest

SIZE = 64


def _field(gen, size, smooth):
    f = ndimage.gaussian_filter(gen.standard_normal((size, size)), smooth, mode="wrap")
    return f / (f.std() + 1e-12)


def make_image(label: str, gen: np.random.Generator, size: int = SIZE) -> np.ndarray:
    base = np.stack([_field(gen, size, 8.0) for _ in range(3)], axis=2)
    img = 128.0 + 30.0 * base
    mid = _field(gen, size, 1.5)[:, :, None]
    img += gen.uniform(6.0, 12.0) * mid
    if label == "fake":
        fine = gen.standard_normal((size, size))[:, :, None]
        img += gen.uniform(5.0, 9.0) * fine
    return np.clip(np.floor(img + 0.5), 0, 255).astype(np.uint8)


def make_corpus(out_dir, n: int = 20, seed: int = 0, size: int = SIZE) -> str:
    """Write ``n`` PNGs (alternating real/fake) plus ``manifest.csv``.

    Returns the manifest path.  Output is a pure function of the arguments.
    """
    os.makedirs(out_dir, exist_ok=True)
    entries = []
    for i in range(n):
        label = "real" if i % 2 == 0 else "fake"
        item_id = f"{label}_{i:04d}"
        gen = derive_rng(seed, item_id, "synthetic").generator
        fname = f"{item_id}.png"
        save_image(make_image(label, gen, size), os.path.join(out_dir, fname))
        entries.append(ManifestEntry(fname, label, item_id))
    path = os.path.join(out_dir, "manifest.csv")
    write_manifest(entries, path)
    return path
