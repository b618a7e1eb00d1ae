"""CSV manifests of labelled test images (header ``path,label[,id]``)."""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass

from ..exceptions import ManifestError

LABELS = {"real": 0, "fake": 1}


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: str
    item_id: str

    @property
    def target(self) -> int:
        return LABELS[self.label]


def load_manifest(path) -> list[ManifestEntry]:
    """Parse a manifest; relative image paths resolve against its directory."""
    base = os.path.dirname(os.path.abspath(path))
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ManifestError(f"{path}: empty manifest, expected header 'path,label[,id]'")
        header = [h.strip().lower() for h in header]
        if header[:2] != ["path", "label"] or header[2:] not in ([], ["id"]):
            raise ManifestError(f"{path}: bad header {header!r}, expected 'path,label[,id]'")
        has_id = len(header) == 3

        entries, seen = [], {}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ManifestError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            raw_path, label = row[0].strip(), row[1].strip().lower()
            if label not in LABELS:
                raise ManifestError(
                    f"{path}:{lineno}: unknown label {row[1]!r} (expected 'real' or 'fake')"
                )
            item_id = row[2].strip() if has_id and row[2].strip() else raw_path
            if item_id in seen:
                raise ManifestError(
                    f"{path}:{lineno}: duplicate id {item_id!r} (first seen on line {seen[item_id]})"
                )
            seen[item_id] = lineno
            full = raw_path if os.path.isabs(raw_path) else os.path.join(base, raw_path)
            entries.append(ManifestEntry(os.path.normpath(full), label, item_id))
    return entries


def write_manifest(entries, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "label", "id"])
        for e in entries:
            w.writerow([e.path, e.label, e.item_id])
