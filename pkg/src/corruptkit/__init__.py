"""Seed-reproducible image corruption, augmentation and robustness benchmarking."""
from .augment import AugmentConfig, AugmentTrace, apply_trace, augment, sample_chain
from .corrupt import (
    CorruptionSpec,
    SeverityGrid,
    apply_spec,
    blur,
    builtin_grid,
    gamma,
    gaussian_noise,
    jpeg_round_trip,
    linear_adjust,
    poisson_gaussian_noise,
    resize_degrade,
)
from .imgcore import RngStream, check_image, derive_rng, load_image, save_image
from .metrics import EvalMetrics, accuracy, auc, evaluate, f1

__version__ = "0.1.0"


def __getattr__(name):
    # sklearn is slow to import; load the estimator wrappers on first use
    if name in ("AugmentTransformer", "CorruptionTransformer"):
        from . import estimators

        return getattr(estimators, name)
    raise AttributeError(f"module 'corruptkit' has no attribute {name!r}")
