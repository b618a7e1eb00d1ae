"""Report files: per-cell CSV/JSON plus a long-format severity sweep."""
from __future__ import annotations

import csv
import json
import os
from dataclasses import asdict, fields

from ..corrupt import builtin_grid
from ..exceptions import CorruptkitError, MergeError
from .grid import ReportRow

SWEEP_FIELDS = ("series", "detector", "kind", "cell", "severity", "auc")


def sweep_path(path) -> str:
    stem, _ = os.path.splitext(os.fspath(path))
    return stem + ".sweep.csv"


def _num(x) -> str:
    return repr(float(x)) if isinstance(x, float) else str(x)


def sweep_rows(rows, series=None, kind=None) -> list[dict]:
    """Long-format rows for single-parameter cells, severity ascending.

    Kinds keep the order in which they first appear in ``rows``; compose and
    unaltered cells have no severity axis and are skipped.
    """
    order, groups = [], {}
    for r in rows:
        if r.severity is None or (kind is not None and r.kind != kind):
            continue
        if r.kind not in groups:
            order.append(r.kind)
            groups[r.kind] = []
        groups[r.kind].append(r)
    out = []
    for k in order:
        for r in sorted(groups[k], key=lambda r: (r.severity, r.cell)):
            out.append({
                "series": series or r.detector,
                "detector": r.detector,
                "kind": r.kind,
                "cell": r.cell,
                "severity": _num(r.severity),
                "auc": _num(r.auc),
            })
    return out


def write_sweep(records, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=SWEEP_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerows(records)


def emit_report(rows, format, path, sweep=True) -> None:
    """Write ``rows`` as CSV (``detector,cell,n,acc,auc,f1,seed``) or JSON.

    Unless ``sweep`` is false, a companion ``<stem>.sweep.csv`` is written
    next to it.
    """
    rows = list(rows)
    if not rows:
        raise CorruptkitError("cannot emit an empty report")
    fmt = format.lower()
    if fmt == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(ReportRow.CSV_FIELDS)
            for r in rows:
                w.writerow([_num(getattr(r, f)) for f in ReportRow.CSV_FIELDS])
    elif fmt == "json":
        with open(path, "w", encoding="utf-8") as fh:
            json.dump([asdict(r) for r in rows], fh, indent=2)
            fh.write("\n")
    else:
        raise CorruptkitError(f"unknown report format {format!r}; expected 'csv' or 'json'")
    if sweep:
        write_sweep(sweep_rows(rows), sweep_path(path))


def read_report(path) -> list[ReportRow]:
    """Load a CSV or JSON report written by :func:`emit_report`.

    CSV reports carry no kind/severity columns; those are recovered from
    the builtin grid when the cell label matches one of its cells.
    """
    names = {f.name for f in fields(ReportRow)}
    try:
        if os.fspath(path).lower().endswith(".json"):
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
            if not isinstance(doc, list):
                raise CorruptkitError(f"{path}: expected a JSON array of rows")
            return [ReportRow(**{k: v for k, v in d.items() if k in names}) for d in doc]

        known = {c.label: c for c in builtin_grid()}
        out = []
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != ReportRow.CSV_FIELDS:
                raise CorruptkitError(f"{path}: unexpected columns {reader.fieldnames}")
            for d in reader:
                spec = known.get(d["cell"])
                sev = spec.severity if spec is not None else None
                out.append(ReportRow(
                    detector=d["detector"], cell=d["cell"], n=int(d["n"]),
                    acc=float(d["acc"]), auc=float(d["auc"]), f1=float(d["f1"]),
                    seed=int(d["seed"]),
                    kind=spec.kind if spec is not None else "",
                    severity=None if sev is None else float(sev),
                ))
            return out
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptkitError(f"{path}: malformed report ({exc})") from exc


def merge_reports(paths, kind=None) -> list[dict]:
    """Merge reports into one long-format sweep table.

    Each report becomes one series per detector, named after the detector,
    or ``<file stem>:<detector>`` when that name would repeat.  All reports
    must share the same ordered set of cells.
    """
    paths = list(paths)
    if not paths:
        raise MergeError("no report files given")
    loaded = [(p, read_report(p)) for p in paths]
    ref_path, ref_rows = loaded[0]
    ref_cells = _cells(ref_rows)
    for p, rows in loaded[1:]:
        if _cells(rows) != ref_cells:
            raise MergeError(f"{p} was produced with a different grid than {ref_path}")

    seen = {}
    for p, rows in loaded:
        for det in dict.fromkeys(r.detector for r in rows):
            seen[det] = seen.get(det, 0) + 1
    out = []
    for p, rows in loaded:
        stem = os.path.splitext(os.path.basename(p))[0]
        for det in dict.fromkeys(r.detector for r in rows):
            series = det if seen[det] == 1 else f"{stem}:{det}"
            out += sweep_rows([r for r in rows if r.detector == det], series=series, kind=kind)
    return out


def _cells(rows):
    return list(dict.fromkeys(r.cell for r in rows))
