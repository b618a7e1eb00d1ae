"""Parameterised corruption operators and the default severity grid.

All operators take and return ``(H, W, 3)`` uint8 arrays and never mutate
their input.  Stochastic operators draw exclusively from the ``rng`` they are
given; deterministic ones accept no rng at all.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np
from PIL import Image
from scipy import ndimage

from .exceptions import ParameterError
from .imgcore import as_generator, check_image, decode_image, encode_image

__all__ = [
    "gaussian_noise",
    "poisson_gaussian_noise",
    "blur",
    "gaussian_kernel",
    "gaussian_sigma",
    "encode_jpeg",
    "jpeg_round_trip",
    "resize_degrade",
    "gamma",
    "linear_adjust",
    "CorruptionSpec",
    "SeverityGrid",
    "UNALTERED",
    "apply_spec",
    "builtin_grid",
    "parse_spec",
]

BLUR_FILTERS = ("gaussian", "average", "median")
RESIZE_FACTORS = (2, 4, 8, 16)
MAX_KERNEL = 31


def _quantize(x: np.ndarray) -> np.ndarray:
    # round half up, then saturate
    return np.clip(np.floor(x + 0.5), 0, 255).astype(np.uint8)


def _lut_apply(img: np.ndarray, lut: np.ndarray) -> np.ndarray:
    return lut[img]


def _is_number(x) -> bool:
    return isinstance(x, (int, float, np.integer, np.floating)) and not isinstance(x, bool)


# --------------------------------------------------------------------------- noise

def gaussian_noise(img, sigma, rng) -> np.ndarray:
    """Add i.i.d. zero-mean Gaussian noise with std ``sigma`` (8-bit units)."""
    arr = check_image(img)
    if not _is_number(sigma) or not math.isfinite(sigma) or sigma < 0:
        raise ParameterError(f"sigma must be a finite number >= 0, got {sigma!r}")
    gen = as_generator(rng)
    if sigma == 0:
        return arr.copy()
    noise = gen.standard_normal(arr.shape) * float(sigma)
    return _quantize(arr.astype(np.float64) + noise)


def poisson_gaussian_noise(img, a, b, rng) -> np.ndarray:
    """Signal-dependent noise with variance ``a*y + b`` on ``y = img/255``.

    ``a`` scales the Poissonian (photon) term and ``b`` is the constant
    Gaussian floor, both in normalised [0, 1] intensity units.
    """
    arr = check_image(img)
    for name, v in (("a", a), ("b", b)):
        if not _is_number(v) or not math.isfinite(v) or v < 0:
            raise ParameterError(f"{name} must be a finite number >= 0, got {v!r}")
    gen = as_generator(rng)
    if a == 0 and b == 0:
        return arr.copy()
    y = arr.astype(np.float64) / 255.0
    std = np.sqrt(a * y + b)
    return _quantize(255.0 * (y + std * gen.standard_normal(arr.shape)))


# --------------------------------------------------------------------------- blur

def gaussian_sigma(kernel: int) -> float:
    """Kernel-size to sigma convention: ``0.15 * k + 0.35``."""
    return 0.15 * kernel + 0.35


def _check_kernel(kernel) -> int:
    if isinstance(kernel, bool) or not _is_number(kernel) or int(kernel) != kernel:
        raise ParameterError(f"kernel must be an odd integer, got {kernel!r}")
    k = int(kernel)
    if k % 2 == 0 or not 3 <= k <= MAX_KERNEL:
        raise ParameterError(f"kernel must be odd and within [3, {MAX_KERNEL}], got {k}")
    return k


def _gaussian_1d(k: int) -> np.ndarray:
    x = np.arange(k, dtype=np.float64) - (k - 1) / 2
    w = np.exp(-(x**2) / (2.0 * gaussian_sigma(k) ** 2))
    return w / w.sum()


def gaussian_kernel(kernel: int) -> np.ndarray:
    """The normalised ``k x k`` Gaussian kernel used by :func:`blur`."""
    g = _gaussian_1d(_check_kernel(kernel))
    return np.outer(g, g)


def blur(img, filter, kernel) -> np.ndarray:
    """Per-channel smoothing with reflect-101 borders.

    ``gaussian`` and ``average`` are separable and run as two 1-D passes in
    float64 followed by a single rounding step; ``median`` takes the
    ``k x k`` window median of each channel.
    """
    arr = check_image(img)
    k = _check_kernel(kernel)
    if filter not in BLUR_FILTERS:
        raise ParameterError(f"filter must be one of {BLUR_FILTERS}, got {filter!r}")
    if filter == "median":
        return ndimage.median_filter(arr, size=(k, k, 1), mode="mirror")
    w = _gaussian_1d(k) if filter == "gaussian" else np.full(k, 1.0 / k)
    out = arr.astype(np.float64)
    out = ndimage.correlate1d(out, w, axis=0, mode="mirror")
    out = ndimage.correlate1d(out, w, axis=1, mode="mirror")
    return _quantize(out)


# --------------------------------------------------------------------------- jpeg / resize

def encode_jpeg(img, quality) -> bytes:
    return encode_image(img, format="jpeg", quality=quality)


def jpeg_round_trip(img, quality) -> np.ndarray:
    """Encode as baseline JPEG (IJG tables, 4:2:0) and decode back."""
    return decode_image(encode_jpeg(img, quality))


def resize_degrade(img, factor) -> np.ndarray:
    """Downscale by ``1/factor`` with box filtering, then bilinear upscale back."""
    arr = check_image(img)
    if isinstance(factor, bool) or factor not in RESIZE_FACTORS:
        raise ParameterError(f"factor must be one of {RESIZE_FACTORS}, got {factor!r}")
    f = int(factor)
    h, w = arr.shape[:2]
    if h < f or w < f:
        raise ParameterError(f"image {w}x{h} is smaller than resize factor {f}")
    pil = Image.fromarray(arr, mode="RGB")
    small = pil.resize((w // f, h // f), Image.Resampling.BOX)
    return np.asarray(small.resize((w, h), Image.Resampling.BILINEAR), dtype=np.uint8).copy()


# --------------------------------------------------------------------------- enhancement

def gamma(img, g) -> np.ndarray:
    """Power-law transfer ``255 * (in/255) ** g``."""
    arr = check_image(img)
    if not _is_number(g) or not math.isfinite(g) or g <= 0:
        raise ParameterError(f"gamma must be a finite number > 0, got {g!r}")
    lut = _quantize(255.0 * (np.arange(256) / 255.0) ** float(g))
    return _lut_apply(arr, lut)


def linear_adjust(img, alpha, beta) -> np.ndarray:
    """Contrast/brightness adjustment ``alpha * in + beta`` with saturation."""
    arr = check_image(img)
    if not _is_number(alpha) or not math.isfinite(alpha) or alpha <= 0:
        raise ParameterError(f"alpha must be a finite number > 0, got {alpha!r}")
    if not _is_number(beta) or not math.isfinite(beta):
        raise ParameterError(f"beta must be a finite number, got {beta!r}")
    lut = _quantize(float(alpha) * np.arange(256, dtype=np.float64) + float(beta))
    return _lut_apply(arr, lut)


# --------------------------------------------------------------------------- specs

REQUIRED_PARAMS: Mapping[str, tuple[str, ...]] = {
    "unaltered": (),
    "gaussian_noise": ("sigma",),
    "poisson_gaussian_noise": ("a", "b"),
    "gaussian_blur": ("kernel",),
    "average_blur": ("kernel",),
    "median_blur": ("kernel",),
    "jpeg": ("quality",),
    "resize_degrade": ("factor",),
    "gamma": ("g",),
    "linear_adjust": ("alpha", "beta"),
    "compose": (),
}

STOCHASTIC_KINDS = frozenset({"gaussian_noise", "poisson_gaussian_noise"})

# parameter plotted on the x axis of a severity sweep
SEVERITY_PARAM: Mapping[str, str] = {
    "gaussian_noise": "sigma",
    "poisson_gaussian_noise": "a",
    "gaussian_blur": "kernel",
    "average_blur": "kernel",
    "median_blur": "kernel",
    "jpeg": "quality",
    "resize_degrade": "factor",
    "gamma": "g",
    "linear_adjust": "alpha",
}

_INT_PARAMS = {"kernel", "quality", "factor"}


@dataclass(frozen=True, eq=True)
class CorruptionSpec:
    """A named corruption: ``kind`` plus exactly the parameters it needs.

    ``compose`` specs carry at least two ``children`` applied left to right.
    """

    kind: str
    params: Mapping[str, float] = field(default_factory=dict)
    label: str = ""
    children: tuple["CorruptionSpec", ...] = ()

    def __post_init__(self):
        if self.kind not in REQUIRED_PARAMS:
            raise ParameterError(f"unknown corruption kind {self.kind!r}")
        required = set(REQUIRED_PARAMS[self.kind])
        params = dict(self.params)
        if set(params) != required:
            raise ParameterError(
                f"{self.kind} needs params {sorted(required)}, got {sorted(params)}"
            )
        for k, v in params.items():
            if not _is_number(v):
                raise ParameterError(f"param {k!r} of {self.kind} must be numeric, got {v!r}")
            if k in _INT_PARAMS:
                if int(v) != v:
                    raise ParameterError(f"param {k!r} of {self.kind} must be an integer")
                params[k] = int(v)
        children = tuple(self.children)
        if self.kind == "compose":
            if len(children) < 2:
                raise ParameterError("compose needs at least two child specs")
            if not all(isinstance(c, CorruptionSpec) for c in children):
                raise ParameterError("compose children must be CorruptionSpec instances")
        elif children:
            raise ParameterError(f"only compose specs take children, not {self.kind}")
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "children", children)
        if not self.label:
            object.__setattr__(self, "label", self._default_label())

    def _default_label(self) -> str:
        if self.kind == "compose":
            return "+".join(c.label for c in self.children)
        if not self.params:
            return self.kind
        args = ",".join(f"{k}={_fmt(v)}" for k, v in self.params.items())
        return f"{self.kind}:{args}"

    @property
    def severity(self):
        """Value of the kind's severity parameter, or ``None``."""
        name = SEVERITY_PARAM.get(self.kind)
        return None if name is None else self.params[name]

    @property
    def is_stochastic(self) -> bool:
        if self.kind == "compose":
            return any(c.is_stochastic for c in self.children)
        return self.kind in STOCHASTIC_KINDS

    @property
    def ends_with_jpeg(self) -> bool:
        if self.kind == "compose":
            return self.children[-1].ends_with_jpeg
        return self.kind == "jpeg"

    def to_dict(self) -> dict:
        d = {"label": self.label, "kind": self.kind, "params": dict(self.params)}
        if self.children:
            d["children"] = [c.to_dict() for c in self.children]
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "CorruptionSpec":
        if not isinstance(d, Mapping) or "kind" not in d:
            raise ParameterError(f"corruption spec must be an object with a 'kind', got {d!r}")
        children = tuple(cls.from_dict(c) for c in d.get("children", ()))
        return cls(
            kind=d["kind"],
            params=dict(d.get("params", {})),
            label=d.get("label", ""),
            children=children,
        )


def _fmt(v) -> str:
    return f"{v:g}" if isinstance(v, float) else str(v)


UNALTERED = CorruptionSpec("unaltered", label="unaltered")


def apply_spec(img, spec: CorruptionSpec, rng=None) -> np.ndarray:
    """Apply ``spec`` to ``img``.

    ``rng`` must be an :class:`~corruptkit.imgcore.RngStream` whenever the
    spec has a stochastic component.  Child ``i`` of a compose spec draws
    from ``rng.child(i)``.
    """
    if not isinstance(spec, CorruptionSpec):
        raise ParameterError(f"expected a CorruptionSpec, got {type(spec).__name__}")
    p = spec.params
    kind = spec.kind
    if kind == "compose":
        out = check_image(img)
        for i, child in enumerate(spec.children):
            child_rng = rng.child(i) if (rng is not None and child.is_stochastic) else None
            out = apply_spec(out, child, child_rng)
        return out
    if kind in STOCHASTIC_KINDS and rng is None:
        raise ParameterError(f"{kind} requires a random stream")
    if kind == "unaltered":
        return check_image(img, copy=True)
    if kind == "gaussian_noise":
        return gaussian_noise(img, p["sigma"], rng)
    if kind == "poisson_gaussian_noise":
        return poisson_gaussian_noise(img, p["a"], p["b"], rng)
    if kind.endswith("_blur"):
        return blur(img, kind[: -len("_blur")], p["kernel"])
    if kind == "jpeg":
        return jpeg_round_trip(img, p["quality"])
    if kind == "resize_degrade":
        return resize_degrade(img, p["factor"])
    if kind == "gamma":
        return gamma(img, p["g"])
    if kind == "linear_adjust":
        return linear_adjust(img, p["alpha"], p["beta"])
    raise ParameterError(f"unknown corruption kind {kind!r}")  # pragma: no cover


def parse_spec(text: str) -> CorruptionSpec:
    """Parse the command-line form ``kind:name=value,name=value``.

    >>> parse_spec("gamma:g=0.75").params
    {'g': 0.75}
    """
    kind, _, rest = text.partition(":")
    params = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        name, eq, value = item.partition("=")
        if not eq:
            raise ParameterError(f"malformed parameter {item!r} in spec {text!r}")
        try:
            num = float(value)
        except ValueError:
            raise ParameterError(f"parameter {name!r} is not a number: {value!r}") from None
        params[name.strip()] = int(num) if num.is_integer() and "." not in value else num
    return CorruptionSpec(kind.strip(), params)


# --------------------------------------------------------------------------- grid

class SeverityGrid(Sequence):
    """Ordered, uniquely-labelled evaluation cells; ``unaltered`` is first.

    The unaltered cell is inserted automatically when absent.
    """

    def __init__(self, cells):
        cells = list(cells)
        if not cells or cells[0].kind != "unaltered":
            cells.insert(0, UNALTERED)
        labels = [c.label for c in cells]
        if labels[0] != "unaltered":
            raise ParameterError("the first grid cell must be labelled 'unaltered'")
        if any(c.kind == "unaltered" for c in cells[1:]) or "unaltered" in labels[1:]:
            raise ParameterError("'unaltered' may only appear once, as the first cell")
        dupes = sorted({x for x in labels if labels.count(x) > 1})
        if dupes:
            raise ParameterError(f"duplicate grid labels: {dupes}")
        self._cells = tuple(cells)

    def __getitem__(self, i):
        return self._cells[i]

    def __len__(self):
        return len(self._cells)

    def __iter__(self) -> Iterator[CorruptionSpec]:
        return iter(self._cells)

    def __eq__(self, other):
        return isinstance(other, SeverityGrid) and self._cells == other._cells

    def __repr__(self):
        return f"SeverityGrid({len(self)} cells)"

    @property
    def labels(self) -> list[str]:
        return [c.label for c in self._cells]

    def get(self, label: str) -> CorruptionSpec:
        for c in self._cells:
            if c.label == label:
                return c
        raise KeyError(label)

    def to_dict(self) -> dict:
        return {"cells": [c.to_dict() for c in self._cells]}

    def to_json(self, path=None, **kw):
        text = json.dumps(self.to_dict(), indent=2, **kw)
        if path is None:
            return text
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")

    @classmethod
    def from_dict(cls, d: Mapping) -> "SeverityGrid":
        if not isinstance(d, Mapping) or not isinstance(d.get("cells"), list):
            raise ParameterError("grid document must be an object with a 'cells' list")
        return cls(CorruptionSpec.from_dict(c) for c in d["cells"])

    @classmethod
    def from_json(cls, path) -> "SeverityGrid":
        with open(path, encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ParameterError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(doc)


def load_grid(source) -> SeverityGrid:
    """``"builtin"`` or a path to a grid JSON file."""
    if source is None or source == "builtin":
        return builtin_grid()
    return SeverityGrid.from_json(source)


def builtin_grid() -> SeverityGrid:
    """The default evaluation grid (34 cells, ``unaltered`` first)."""
    S = CorruptionSpec
    cells = [UNALTERED]
    cells += [S("jpeg", {"quality": q}, f"JPEG {q}") for q in (95, 60, 30)]
    cells += [S("gaussian_noise", {"sigma": s}, f"Gau Noise {s}") for s in (5, 10, 20, 30, 40, 50)]
    cells.append(S("poisson_gaussian_noise", {"a": 0.01, "b": 1e-4}, "Pois-Gau Noise"))
    for kind, name in (("gaussian_blur", "Gau"), ("average_blur", "Avg"), ("median_blur", "Median")):
        cells += [S(kind, {"kernel": k}, f"{name} Blur {k}") for k in (3, 7, 11)]
    cells += [S("gamma", {"g": g}, f"Gamma Corr {g:g}") for g in (0.1, 0.75, 2.5)]
    cells += [
        S("linear_adjust", {"alpha": a, "beta": b}, f"Linear {a:g},{b:g}")
        for a, b in ((0.5, 0), (1.5, 0), (1, -50), (1, 50))
    ]
    cells += [S("resize_degrade", {"factor": f}, f"Resize x{f}") for f in (4, 8, 16)]

    gn = S("gaussian_noise", {"sigma": 30})
    gb = S("gaussian_blur", {"kernel": 7})
    gc = S("gamma", {"g": 0.75})
    jp = S("jpeg", {"quality": 60})
    cells += [
        S("compose", label="GN+GB", children=(gn, gb)),
        S("compose", label="GN+JPEG", children=(gn, jp)),
        S("compose", label="GB+GN+GC", children=(gb, gn, gc)),
        S("compose", label="All", children=(gc, gb, gn, jp)),
    ]
    return SeverityGrid(cells)
