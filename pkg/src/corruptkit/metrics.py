"""Score-based binary classification metrics (ACC, ROC-AUC, F1).

Labels are ``0`` for real and ``1`` for fake; scores are in ``[0, 1]`` with
higher meaning "more fake".  Functions take a sequence of
``(label, score)`` pairs (or :class:`ScoredSample`) or, like scikit-learn,
separate ``y_true``/``y_score`` arrays.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import ParameterError, UndefinedMetricError

__all__ = [
    "ScoredSample",
    "EvalMetrics",
    "Confusion",
    "auc",
    "auc_bruteforce",
    "confusion",
    "accuracy",
    "f1",
    "youden_threshold",
    "evaluate",
    "parse_threshold_policy",
]

REAL, FAKE = 0, 1


class ScoredSample(NamedTuple):
    label: int
    score: float


class Confusion(NamedTuple):
    tp: int
    fp: int
    tn: int
    fn: int


@dataclass(frozen=True)
class EvalMetrics:
    acc: float
    auc: float
    f1: float
    threshold: float
    n_real: int
    n_fake: int

    def to_dict(self):
        return asdict(self)


def _as_arrays(samples, scores=None):
    if scores is None:
        pairs = list(samples)
        labels = np.array([p[0] for p in pairs], dtype=np.int64)
        values = np.array([p[1] for p in pairs], dtype=np.float64)
    else:
        labels = np.asarray(samples, dtype=np.int64).ravel()
        values = np.asarray(scores, dtype=np.float64).ravel()
        if labels.shape != values.shape:
            raise ParameterError("labels and scores must have the same length")
    if labels.size and not np.isin(labels, (REAL, FAKE)).all():
        raise ParameterError("labels must be 0 (real) or 1 (fake)")
    if values.size and (not np.isfinite(values).all() or values.min() < 0 or values.max() > 1):
        raise ParameterError("scores must be finite and lie in [0, 1]")
    return labels, values


def auc(samples, scores=None) -> float:
    """Area under the ROC curve as the Mann-Whitney statistic.

    ``P(score_fake > score_real) + 0.5 * P(tie)``, computed from integer
    counts over the sorted distinct scores, so it is exact up to the final
    division.
    """
    labels, values = _as_arrays(samples, scores)
    n_fake = int(labels.sum())
    n_real = labels.size - n_fake
    if n_fake == 0 or n_real == 0:
        raise UndefinedMetricError("AUC needs at least one real and one fake sample")
    uniq, inv = np.unique(values, return_inverse=True)
    fake_per = np.bincount(inv[labels == FAKE], minlength=uniq.size).astype(np.int64)
    real_per = np.bincount(inv[labels == REAL], minlength=uniq.size).astype(np.int64)
    reals_below = np.concatenate(([0], np.cumsum(real_per)[:-1]))
    # doubled to stay integral: 2*wins + ties
    twice_u = int(2 * np.dot(fake_per, reals_below) + np.dot(fake_per, real_per))
    return twice_u / (2 * n_fake * n_real)


def auc_bruteforce(samples, scores=None) -> float:
    """O(n^2) pairwise reference implementation of :func:`auc`."""
    labels, values = _as_arrays(samples, scores)
    fakes = values[labels == FAKE]
    reals = values[labels == REAL]
    if fakes.size == 0 or reals.size == 0:
        raise UndefinedMetricError("AUC needs at least one real and one fake sample")
    wins = ties = 0
    for f in fakes.tolist():
        for r in reals.tolist():
            if f > r:
                wins += 1
            elif f == r:
                ties += 1
    return (2 * wins + ties) / (2 * fakes.size * reals.size)


def confusion(samples, threshold, scores=None) -> Confusion:
    """Counts with "predict fake iff score >= threshold"."""
    labels, values = _as_arrays(samples, scores)
    pred = values >= threshold
    fake = labels == FAKE
    return Confusion(
        tp=int(np.sum(pred & fake)),
        fp=int(np.sum(pred & ~fake)),
        tn=int(np.sum(~pred & ~fake)),
        fn=int(np.sum(~pred & fake)),
    )


def _counts(samples_or_counts, threshold, scores):
    if isinstance(samples_or_counts, Confusion):
        return samples_or_counts
    return confusion(samples_or_counts, threshold, scores)


def accuracy(samples, threshold=0.5, scores=None) -> float:
    """``(tp + tn) / n``.  ``samples`` may also be a :class:`Confusion`."""
    c = _counts(samples, threshold, scores)
    n = sum(c)
    if n == 0:
        raise UndefinedMetricError("accuracy of an empty sample set is undefined")
    return (c.tp + c.tn) / n


def f1(samples, threshold=0.5, scores=None) -> float:
    """``2tp / (2tp + fp + fn)``.

    When there are no positives at all and none predicted
    (``tp = fp = fn = 0``) the score is defined as 1.0: every sample was a
    correctly rejected real one.
    """
    c = _counts(samples, threshold, scores)
    if sum(c) == 0:
        raise UndefinedMetricError("F1 of an empty sample set is undefined")
    denom = 2 * c.tp + c.fp + c.fn
    if denom == 0:
        return 1.0
    return 2 * c.tp / denom


def youden_threshold(samples, scores=None) -> float:
    """Threshold maximising ``TPR - FPR``; ties go to the lowest threshold."""
    labels, values = _as_arrays(samples, scores)
    n_fake = int(labels.sum())
    n_real = labels.size - n_fake
    if n_fake == 0 or n_real == 0:
        raise UndefinedMetricError("Youden threshold needs both classes")
    candidates = np.unique(values)
    best_t, best_j = None, -math.inf
    for t in candidates.tolist():
        pred = values >= t
        tpr = np.sum(pred & (labels == FAKE)) / n_fake
        fpr = np.sum(pred & (labels == REAL)) / n_real
        j = tpr - fpr
        if j > best_j:
            best_t, best_j = t, j
    return float(best_t)


def parse_threshold_policy(policy):
    """Normalise a threshold policy.

    Accepts a number, ``"youden"``, ``"fixed"``, ``"fixed(0.4)"`` or
    ``"fixed:0.4"``.  Returns either a float or the string ``"youden"``.
    """
    if policy is None:
        return 0.5
    if isinstance(policy, (int, float)) and not isinstance(policy, bool):
        t = float(policy)
    else:
        text = str(policy).strip().lower()
        if text == "youden":
            return "youden"
        if text == "fixed":
            return 0.5
        for prefix, suffix in (("fixed(", ")"), ("fixed:", "")):
            if text.startswith(prefix) and text.endswith(suffix):
                text = text[len(prefix) : len(text) - len(suffix)]
                break
        try:
            t = float(text)
        except ValueError:
            raise ParameterError(f"unknown threshold policy {policy!r}") from None
    if not math.isfinite(t):
        raise ParameterError(f"threshold must be finite, got {t}")
    return t


def evaluate(samples, threshold_policy=0.5, scores=None) -> EvalMetrics:
    """Compute ACC, AUC and F1 for one set of scored samples."""
    labels, values = _as_arrays(samples, scores)
    policy = parse_threshold_policy(threshold_policy)
    a = auc(labels, values)
    t = youden_threshold(labels, values) if policy == "youden" else policy
    c = confusion(labels, t, values)
    return EvalMetrics(
        acc=accuracy(c),
        auc=a,
        f1=f1(c),
        threshold=float(t),
        n_real=int(np.sum(labels == REAL)),
        n_fake=int(np.sum(labels == FAKE)),
    )
