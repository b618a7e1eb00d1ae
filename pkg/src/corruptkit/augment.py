"""Stochastic training-augmentation chain.

The chain applies, in this fixed order, each with its own probability::

    enhancement (brightness | contrast) -> blur (gaussian | average)
        -> additive Gaussian noise -> JPEG re-compression

:func:`sample_chain` draws the decisions into an :class:`AugmentTrace`,
:func:`apply_trace` replays them, and :func:`augment` does both.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from typing import Optional

import numpy as np

from . import corrupt
from .exceptions import ParameterError
from .imgcore import as_generator, check_image

__all__ = [
    "AugmentConfig",
    "AugmentTrace",
    "MODES",
    "PRESETS",
    "preset",
    "sample_chain",
    "apply_trace",
    "augment",
    "brightness",
    "contrast",
]

MODES = ("stochastic", "non_stochastic", "noise_only")


def _check_prob(name, p):
    if not isinstance(p, (int, float)) or isinstance(p, bool) or not 0.0 <= p <= 1.0:
        raise ParameterError(f"{name} must be a probability in [0, 1], got {p!r}")


def _check_interval(name, r, *, integer=False):
    if len(r) != 2:
        raise ParameterError(f"{name} must be a (low, high) pair, got {r!r}")
    lo, hi = r
    if not all(math.isfinite(v) for v in (lo, hi)) or lo > hi:
        raise ParameterError(f"{name} must satisfy low <= high, got {r!r}")
    if integer and (int(lo) != lo or int(hi) != hi):
        raise ParameterError(f"{name} bounds must be integers, got {r!r}")
    return (int(lo), int(hi)) if integer else (float(lo), float(hi))


@dataclass(frozen=True)
class AugmentConfig:
    """Probabilities and parameter ranges of the augmentation chain.

    Defaults are the published values: enhancement 50% with factor in
    [0.5, 1.5], blur 50% with odd kernel in [3, 15], noise 30% with sigma in
    [0, 50], JPEG 70% with quality in [10, 95].
    """

    p_enh: float = 0.5
    enh_factor_range: tuple = (0.5, 1.5)
    p_blur: float = 0.5
    blur_kernel_range: tuple = (3, 15)
    p_noise: float = 0.3
    noise_sigma_range: tuple = (0.0, 50.0)
    p_jpeg: float = 0.7
    jpeg_quality_range: tuple = (10, 95)
    mode: str = "stochastic"

    def __post_init__(self):
        for name in ("p_enh", "p_blur", "p_noise", "p_jpeg"):
            _check_prob(name, getattr(self, name))
        enh = _check_interval("enh_factor_range", self.enh_factor_range)
        if enh[0] <= 0:
            raise ParameterError("enhancement factors must be > 0")
        kern = _check_interval("blur_kernel_range", self.blur_kernel_range, integer=True)
        if kern[0] % 2 == 0 or kern[1] % 2 == 0 or kern[0] < 3 or kern[1] > corrupt.MAX_KERNEL:
            raise ParameterError(
                f"blur_kernel_range bounds must be odd and within [3, {corrupt.MAX_KERNEL}], "
                f"got {self.blur_kernel_range!r}"
            )
        sig = _check_interval("noise_sigma_range", self.noise_sigma_range)
        if sig[0] < 0:
            raise ParameterError("noise sigma must be >= 0")
        q = _check_interval("jpeg_quality_range", self.jpeg_quality_range, integer=True)
        if q[0] < 1 or q[1] > 100:
            raise ParameterError("jpeg_quality_range must lie within [1, 100]")
        if self.mode not in MODES:
            raise ParameterError(f"mode must be one of {MODES}, got {self.mode!r}")
        object.__setattr__(self, "enh_factor_range", enh)
        object.__setattr__(self, "blur_kernel_range", kern)
        object.__setattr__(self, "noise_sigma_range", sig)
        object.__setattr__(self, "jpeg_quality_range", q)

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d) -> "AugmentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ParameterError(f"unknown augment config keys: {sorted(unknown)}")
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})

    @classmethod
    def from_json(cls, path) -> "AugmentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


PRESETS = {
    "paper-default": AugmentConfig(),
    "gn-only": AugmentConfig(mode="noise_only"),
    "non-stochastic": AugmentConfig(mode="non_stochastic"),
}


def preset(name: str) -> AugmentConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise ParameterError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


@dataclass(frozen=True)
class AugmentTrace:
    """The sampled decisions of one chain run.

    Parameters of a stage are ``None`` (and its kind ``"none"``) exactly when
    the stage was skipped.
    """

    enh_applied: bool = False
    enh_kind: str = "none"
    enh_factor: Optional[float] = None
    blur_applied: bool = False
    blur_kind: str = "none"
    blur_kernel: Optional[int] = None
    noise_applied: bool = False
    noise_sigma: Optional[float] = None
    jpeg_applied: bool = False
    jpeg_quality: Optional[int] = None

    def validate(self) -> "AugmentTrace":
        def stage(name, applied, kind_ok, params):
            present = [p is not None for p in params]
            if applied and not (kind_ok and all(present)):
                raise ParameterError(f"{name} stage is applied but its parameters are missing")
            if not applied and (kind_ok or any(present)):
                raise ParameterError(f"{name} stage is skipped but carries parameters")

        stage("enhancement", self.enh_applied, self.enh_kind != "none", [self.enh_factor])
        if self.enh_kind not in ("none", "brightness", "contrast"):
            raise ParameterError(f"unknown enhancement kind {self.enh_kind!r}")
        stage("blur", self.blur_applied, self.blur_kind != "none", [self.blur_kernel])
        if self.blur_kind not in ("none", "gaussian", "average"):
            raise ParameterError(f"unknown blur kind {self.blur_kind!r}")
        stage("noise", self.noise_applied, self.noise_applied, [self.noise_sigma])
        stage("jpeg", self.jpeg_applied, self.jpeg_applied, [self.jpeg_quality])
        return self

    @property
    def is_empty(self) -> bool:
        return not (self.enh_applied or self.blur_applied or self.noise_applied or self.jpeg_applied)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d) -> "AugmentTrace":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known}).validate()


def sample_chain(cfg: AugmentConfig, rng) -> AugmentTrace:
    """Draw one set of chain decisions from ``rng``.

    Draw order is fixed (flag, kind, parameter per stage, in chain order) and
    parameters are drawn only for applied stages, so a trace is a pure
    function of the configuration and the stream's provenance.
    """
    gen = as_generator(rng)
    mode = cfg.mode

    def flip(p):
        if mode == "non_stochastic":
            return True
        return bool(gen.random() < p)

    t = {}
    if mode != "noise_only" and flip(cfg.p_enh):
        t["enh_applied"] = True
        t["enh_kind"] = "brightness" if gen.random() < 0.5 else "contrast"
        t["enh_factor"] = float(gen.uniform(*cfg.enh_factor_range))
    if mode != "noise_only" and flip(cfg.p_blur):
        lo, hi = cfg.blur_kernel_range
        t["blur_applied"] = True
        t["blur_kind"] = "gaussian" if gen.random() < 0.5 else "average"
        t["blur_kernel"] = lo + 2 * int(gen.integers(0, (hi - lo) // 2 + 1))
    if flip(cfg.p_noise):
        t["noise_applied"] = True
        t["noise_sigma"] = float(gen.uniform(*cfg.noise_sigma_range))
    if mode != "noise_only" and flip(cfg.p_jpeg):
        lo, hi = cfg.jpeg_quality_range
        t["jpeg_applied"] = True
        t["jpeg_quality"] = int(gen.integers(lo, hi + 1))
    return AugmentTrace(**t)


def brightness(img, factor) -> np.ndarray:
    """Scale every sample by ``factor`` (``linear_adjust(factor, 0)``)."""
    return corrupt.linear_adjust(img, factor, 0.0)


def gray_mean(img) -> float:
    """Mean luma (ITU-R 601 weights) of an RGB image."""
    x = check_image(img).astype(np.float64)
    return float(np.mean(x @ np.array([0.299, 0.587, 0.114])))


def contrast(img, factor) -> np.ndarray:
    """Blend about the mean luma: ``mean + factor * (in - mean)``.

    Expressed as ``linear_adjust(factor, mean * (1 - factor))``.
    """
    return corrupt.linear_adjust(img, factor, gray_mean(img) * (1.0 - factor))


def apply_trace(img, trace: AugmentTrace, rng) -> np.ndarray:
    """Replay ``trace`` on ``img``; only the noise stage consumes ``rng``."""
    out = check_image(img, copy=True)
    trace.validate()
    if trace.enh_applied:
        op = brightness if trace.enh_kind == "brightness" else contrast
        out = op(out, trace.enh_factor)
    if trace.blur_applied:
        out = corrupt.blur(out, trace.blur_kind, trace.blur_kernel)
    if trace.noise_applied:
        out = corrupt.gaussian_noise(out, trace.noise_sigma, rng)
    if trace.jpeg_applied:
        out = corrupt.jpeg_round_trip(out, trace.jpeg_quality)
    return out


def augment(img, cfg: AugmentConfig, rng):
    """Sample a chain and apply it with the same stream.

    Returns ``(augmented_image, trace)``.
    """
    trace = sample_chain(cfg, rng)
    return apply_trace(img, trace, rng), trace
