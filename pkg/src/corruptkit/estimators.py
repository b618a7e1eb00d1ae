"""scikit-learn compatible wrappers around the corruption and augmentation ops.

Both transformers are stateless: ``fit`` only validates parameters.  Each
image is processed with its own stream ``derive_rng(seed, item_id, stage)``,
where ``item_id`` defaults to the image's position in the batch, so results
do not depend on batch composition when explicit ids are supplied.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .augment import AugmentConfig, apply_trace, preset, sample_chain
from .corrupt import CorruptionSpec, apply_spec, parse_spec
from .exceptions import ParameterError
from .imgcore import check_images, derive_rng


def _ids(n, item_ids):
    if item_ids is None:
        return [str(i) for i in range(n)]
    ids = [str(i) for i in item_ids]
    if len(ids) != n:
        raise ParameterError(f"got {len(ids)} item ids for {n} images")
    return ids


def _pack(X, outputs):
    if isinstance(X, np.ndarray) and X.ndim == 4:
        return np.stack(outputs)
    return outputs


class CorruptionTransformer(TransformerMixin, BaseEstimator):
    """Apply one corruption to a batch of images.

    Parameters
    ----------
    spec : CorruptionSpec, dict or str
        The corruption, e.g. ``"jpeg:quality=60"``.
    seed : int
        Master seed for stochastic corruptions.
    """

    def __init__(self, spec="unaltered", seed=0):
        self.spec = spec
        self.seed = seed

    def _resolve_spec(self):
        if isinstance(self.spec, CorruptionSpec):
            return self.spec
        if isinstance(self.spec, dict):
            return CorruptionSpec.from_dict(self.spec)
        if isinstance(self.spec, str):
            return parse_spec(self.spec)
        raise ParameterError(f"cannot interpret spec {self.spec!r}")

    def fit(self, X=None, y=None):
        self.spec_ = self._resolve_spec()
        return self

    def transform(self, X, item_ids=None):
        check_is_fitted(self, "spec_")
        imgs = check_images(X)
        out = [
            apply_spec(img, self.spec_, derive_rng(self.seed, i, self.spec_.label))
            for img, i in zip(imgs, _ids(len(imgs), item_ids))
        ]
        return _pack(X, out)


class AugmentTransformer(TransformerMixin, BaseEstimator):
    """Offline version of the stochastic training-augmentation chain.

    ``config`` is an :class:`AugmentConfig`, a dict of its fields, or a
    preset name (``"paper-default"``, ``"gn-only"``, ``"non-stochastic"``).
    """

    def __init__(self, config="paper-default", seed=0, stage="augment"):
        self.config = config
        self.seed = seed
        self.stage = stage

    def fit(self, X=None, y=None):
        cfg = self.config
        if isinstance(cfg, str):
            cfg = preset(cfg)
        elif isinstance(cfg, dict):
            cfg = AugmentConfig.from_dict(cfg)
        elif not isinstance(cfg, AugmentConfig):
            raise ParameterError(f"cannot interpret augment config {cfg!r}")
        self.config_ = cfg
        return self

    def transform_with_traces(self, X, item_ids=None):
        check_is_fitted(self, "config_")
        imgs = check_images(X)
        out, traces = [], []
        for img, i in zip(imgs, _ids(len(imgs), item_ids)):
            rng = derive_rng(self.seed, i, self.stage)
            trace = sample_chain(self.config_, rng)
            out.append(apply_trace(img, trace, rng))
            traces.append(trace)
        return _pack(X, out), traces

    def transform(self, X, item_ids=None):
        return self.transform_with_traces(X, item_ids)[0]
