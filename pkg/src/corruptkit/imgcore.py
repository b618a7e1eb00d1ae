"""Image buffers, codec I/O and deterministic random streams.

Images are plain ``numpy.ndarray`` objects of shape ``(height, width, 3)`` and
dtype ``uint8`` (row-major, interleaved RGB).  :func:`check_image` is the
validation gate used by every public operator.
"""
from __future__ import annotations

import hashlib
import io
import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image, UnidentifiedImageError

from .exceptions import ImageFormatError, ParameterError

__all__ = [
    "check_image",
    "check_images",
    "load_image",
    "save_image",
    "encode_image",
    "decode_image",
    "derive_rng",
    "RngStream",
    "psnr",
]

_SUPPORTED_FORMATS = {"PNG", "JPEG"}


def check_image(img, *, copy=False) -> np.ndarray:
    """Validate ``img`` and return it as an ``(H, W, 3)`` uint8 array.

    Grayscale ``(H, W)`` / ``(H, W, 1)`` inputs are replicated to three
    channels and a fourth (alpha) channel is dropped.  Integer arrays are
    accepted if every sample lies in ``[0, 255]``; float arrays are rejected
    because their scale is ambiguous.
    """
    arr = np.asarray(img)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise ParameterError(f"expected an (H, W, 3) image, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ParameterError(f"image must be at least 1x1, got shape {arr.shape}")
    c = arr.shape[2]
    if c == 1:
        arr = np.repeat(arr, 3, axis=2)
    elif c == 4:
        arr = arr[:, :, :3]
    elif c != 3:
        raise ParameterError(f"unsupported channel count {c}")

    if arr.dtype == np.uint8:
        return arr.copy() if copy else arr
    if arr.dtype.kind not in "iub":
        raise ParameterError(f"image dtype must be integral, got {arr.dtype}")
    if arr.size and (arr.min() < 0 or arr.max() > 255):
        raise ParameterError("image samples must lie in [0, 255]")
    return arr.astype(np.uint8)


def _to_rgb(im: Image.Image) -> np.ndarray:
    if im.mode in ("I;16", "I;16B", "I;16L", "I"):
        arr = np.asarray(im, dtype=np.int64)
        arr = np.clip(arr >> 8 if arr.max() > 255 else arr, 0, 255)
        return check_image(arr.astype(np.uint8))
    if im.mode == "P" and "transparency" in im.info:
        im = im.convert("RGBA")
    if im.mode != "RGB":
        im = im.convert("RGB")
    return check_image(np.asarray(im, dtype=np.uint8), copy=True)


def decode_image(data: bytes) -> np.ndarray:
    """Decode PNG or JPEG bytes into an RGB buffer."""
    try:
        with Image.open(io.BytesIO(data)) as im:
            if im.format not in _SUPPORTED_FORMATS:
                raise ImageFormatError(f"unsupported image format {im.format!r}")
            im.load()
            return _to_rgb(im)
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise ImageFormatError(f"cannot decode image: {exc}") from exc


def load_image(path) -> np.ndarray:
    """Read a PNG or JPEG file into an ``(H, W, 3)`` uint8 array.

    Raises ``FileNotFoundError`` (an ``OSError``) for missing files and
    :class:`ImageFormatError` for undecodable content.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    try:
        return decode_image(data)
    except ImageFormatError as exc:
        raise ImageFormatError(f"{os.fspath(path)}: {exc}") from exc


def _check_quality(quality) -> int:
    if isinstance(quality, bool) or int(quality) != quality or not 1 <= quality <= 100:
        raise ParameterError(f"JPEG quality must be an integer in [1, 100], got {quality!r}")
    return int(quality)


def encode_image(img, format="png", quality=None) -> bytes:
    """Encode ``img`` to PNG or baseline JPEG bytes.

    JPEG uses IJG quality scaling and 4:2:0 chroma subsampling, without
    Huffman optimisation, so the output is a pure function of pixels and
    ``quality``.
    """
    arr = check_image(img)
    fmt = format.lower()
    buf = io.BytesIO()
    pil = Image.fromarray(arr, mode="RGB")
    if fmt == "png":
        pil.save(buf, format="PNG")
    elif fmt in ("jpeg", "jpg"):
        q = _check_quality(95 if quality is None else quality)
        pil.save(buf, format="JPEG", quality=q, subsampling=2, optimize=False,
                 progressive=False)
    else:
        raise ParameterError(f"unknown format {format!r}; expected 'png' or 'jpeg'")
    return buf.getvalue()


def save_image(img, path, format="png", quality=None) -> None:
    """Write ``img`` to ``path`` as PNG (lossless) or JPEG."""
    data = encode_image(img, format=format, quality=quality)
    with open(path, "wb") as fh:
        fh.write(data)


def psnr(reference, distorted) -> float:
    """Peak signal-to-noise ratio in dB between two 8-bit images."""
    a = check_image(reference).astype(np.float64)
    b = check_image(distorted).astype(np.float64)
    if a.shape != b.shape:
        raise ParameterError(f"shape mismatch {a.shape} vs {b.shape}")
    mse = np.mean((a - b) ** 2)
    if mse == 0:
        return float("inf")
    return float(10.0 * np.log10(255.0**2 / mse))


@dataclass
class RngStream:
    """A PCG64 stream tied to a ``(master_seed, item_id, stage)`` triple.

    Single-consumer: draw from ``generator`` directly.  Use :meth:`child` to
    derive an independent sub-stream instead of sharing one between workers.
    """

    master_seed: int
    item_id: str
    stage: str
    generator: np.random.Generator = field(repr=False, compare=False)

    @property
    def provenance(self):
        return (self.master_seed, self.item_id, self.stage)

    def child(self, name) -> "RngStream":
        return derive_rng(self.master_seed, self.item_id, f"{self.stage}/{name}")

    def fresh(self) -> "RngStream":
        """A new stream with the same provenance, rewound to the start."""
        return derive_rng(*self.provenance)


def _seed_words(master_seed: int, item_id: str, stage: str) -> list[int]:
    if not 0 <= master_seed < 2**64:
        raise ParameterError(f"master seed must be a 64-bit unsigned integer, got {master_seed}")
    h = hashlib.sha256()
    h.update(master_seed.to_bytes(8, "little"))
    for part in (item_id, stage):
        raw = part.encode("utf-8")
        h.update(len(raw).to_bytes(8, "little"))
        h.update(raw)
    digest = h.digest()
    return [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 32, 4)]


def derive_rng(master_seed: int, item_id: str, stage: str) -> RngStream:
    """Derive a reproducible random stream from a provenance triple.

    The triple is hashed with SHA-256 (length-prefixed fields, so no two
    triples share an encoding) and the digest seeds numpy's ``PCG64`` via
    ``SeedSequence``.  Same triple, same draws, on every platform.
    """
    seed = int(master_seed)
    words = _seed_words(seed, str(item_id), str(stage))
    gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(words)))
    return RngStream(seed, str(item_id), str(stage), gen)


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    raise ParameterError(f"expected an RngStream or numpy Generator, got {type(rng).__name__}")


def check_images(X) -> list[np.ndarray]:
    """Validate a batch: an ``(N, H, W, 3)`` array or a sequence of images."""
    if isinstance(X, np.ndarray) and X.ndim == 4:
        return [check_image(x) for x in X]
    if isinstance(X, np.ndarray) and X.ndim in (2, 3):
        raise ParameterError("expected a batch of images; wrap a single image in a list")
    return [check_image(x) for x in X]
