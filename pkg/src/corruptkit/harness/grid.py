"""Corruption-grid execution: corrupt test images, score, aggregate."""
from __future__ import annotations

import logging
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

from ..corrupt import CorruptionSpec, SeverityGrid, apply_spec, encode_jpeg
from ..exceptions import CorruptkitError, DetectorError
from ..imgcore import derive_rng, load_image, save_image
from ..metrics import evaluate
from .protocol import DetectorEndpoint, score_images

log = logging.getLogger(__name__)

_UNSAFE = re.compile(r"[/\\\x00]")


class CellError(CorruptkitError):
    """A non-detector failure inside one grid cell; ``cell`` names it."""

    def __init__(self, message, cell):
        super().__init__(f"[cell {cell!r}] {message}")
        self.cell = cell


def safe_name(text: str) -> str:
    """Turn a label or item id into a single path component."""
    name = _UNSAFE.sub("__", str(text)).strip()
    if name in ("", ".", ".."):
        name = f"_{name}_"
    return name


@dataclass(frozen=True)
class ReportRow:
    detector: str
    cell: str
    n: int
    acc: float
    auc: float
    f1: float
    seed: int
    kind: str = ""
    severity: Optional[float] = None
    n_failed: int = 0
    threshold: float = 0.5

    CSV_FIELDS = ("detector", "cell", "n", "acc", "auc", "f1", "seed")


def _until_final_jpeg(img, spec, rng):
    # every stage except the trailing JPEG, with apply_spec's stream layout
    if spec.kind == "jpeg":
        return img, spec.params["quality"]
    *head, last = spec.children
    for i, child in enumerate(head):
        img = apply_spec(img, child, rng.child(i) if child.is_stochastic else None)
    sub = rng.child(len(head)) if last.is_stochastic else None
    return _until_final_jpeg(img, last, sub)


def materialize(src_path, item_id, spec: CorruptionSpec, seed: int, out_dir) -> str:
    """Write the corrupted version of one image; returns the output path.

    The stream is ``derive_rng(seed, item_id, spec.label)``.  Specs whose
    last stage is JPEG are stored as the JPEG bytes themselves, everything
    else as PNG.
    """
    img = load_image(src_path)
    rng = derive_rng(seed, item_id, spec.label)
    stem = os.path.join(out_dir, safe_name(item_id))
    if not spec.ends_with_jpeg:
        path = stem + ".png"
        save_image(apply_spec(img, spec, rng), path)
        return path
    img, quality = _until_final_jpeg(img, spec, rng)
    path = stem + ".jpg"
    with open(path, "wb") as fh:
        fh.write(encode_jpeg(img, quality))
    return path


def _run_cell(entries, spec, detector, seed, workdir, threshold):
    label = spec.label
    try:
        if spec.kind == "unaltered":
            images = [(e.item_id, e.path) for e in entries]
        else:
            cell_dir = os.path.join(workdir, safe_name(label))
            os.makedirs(cell_dir, exist_ok=True)
            images = [(e.item_id, materialize(e.path, e.item_id, spec, seed, cell_dir)) for e in entries]
        scores = score_images(detector, images)
    except DetectorError as exc:
        exc.cell = label
        raise
    except (OSError, CorruptkitError) as exc:
        raise CellError(str(exc), label) from exc

    targets = {e.item_id: e.target for e in entries}
    labels = [targets[i] for i, _ in scores]
    values = [s for _, s in scores]
    n_failed = len(entries) - len(scores)
    if n_failed:
        log.warning("cell %r: %d item(s) excluded", label, n_failed)
    try:
        m = evaluate(labels, threshold, scores=values)
    except CorruptkitError as exc:
        raise CellError(str(exc), label) from exc
    sev = spec.severity
    return ReportRow(
        detector=detector.name,
        cell=label,
        n=len(scores),
        acc=m.acc,
        auc=m.auc,
        f1=m.f1,
        seed=int(seed),
        kind=spec.kind,
        severity=None if sev is None else float(sev),
        n_failed=n_failed,
        threshold=m.threshold,
    )


def run_grid(manifest, grid: SeverityGrid, detector: DetectorEndpoint, seed: int,
             workdir, threshold=0.5, jobs: int = 1) -> list[ReportRow]:
    """Evaluate ``detector`` on every cell of ``grid``.

    Cells run on up to ``jobs`` threads, each driving its own detector
    process.  Row order and values do not depend on ``jobs``.
    """
    entries = list(manifest)
    if not entries:
        raise CorruptkitError("manifest is empty")
    os.makedirs(workdir, exist_ok=True)
    dirs = [safe_name(c.label) for c in grid]
    if len(set(dirs)) != len(dirs):
        raise CorruptkitError("grid labels collide after path sanitising")
    names = [safe_name(e.item_id) for e in entries]
    if len(set(names)) != len(names):
        raise CorruptkitError("manifest item ids collide after path sanitising")

    def task(spec):
        return _run_cell(entries, spec, detector, seed, workdir, threshold)

    if jobs <= 1:
        return [task(spec) for spec in grid]
    with ThreadPoolExecutor(max_workers=int(jobs)) as pool:
        futures = [pool.submit(task, spec) for spec in grid]
        return [f.result() for f in futures]
