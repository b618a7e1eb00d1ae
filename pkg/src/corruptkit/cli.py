"""Command-line entry point: ``corruptkit {corrupt,augment,bench,report}``.

Exit status: 0 success, 1 internal error, 2 input error, 3 detector or
protocol error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from .augment import AugmentConfig, apply_trace, preset, sample_chain
from .corrupt import load_grid, parse_spec
from .exceptions import CorruptkitError, DetectorError
from .harness import (
    BenchConfig,
    CellError,
    ManifestEntry,
    emit_report,
    load_manifest,
    materialize,
    merge_reports,
    run_grid,
    safe_name,
)
from .harness.report import SWEEP_FIELDS
from .imgcore import derive_rng, load_image, save_image

log = logging.getLogger("corruptkit")

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT, EXIT_DETECTOR = 0, 1, 2, 3
IMAGE_EXTS = (".png", ".jpg", ".jpeg")


class InputError(CorruptkitError):
    pass


def collect_inputs(source) -> list[ManifestEntry]:
    """Entries from a manifest CSV, or from every PNG/JPEG in a directory.

    Directory items are labelled ``real`` and identified by file stem.
    """
    if os.path.isdir(source):
        entries, seen = [], set()
        for name in sorted(os.listdir(source)):
            stem, ext = os.path.splitext(name)
            if ext.lower() not in IMAGE_EXTS:
                continue
            if stem in seen:
                raise InputError(f"{source}: two images share the stem {stem!r}")
            seen.add(stem)
            entries.append(ManifestEntry(os.path.join(source, name), "real", stem))
        if not entries:
            raise InputError(f"{source}: no PNG or JPEG files found")
        return entries
    if os.path.isfile(source):
        return load_manifest(source)
    raise InputError(f"input {source!r} does not exist")


def _map(fn, items, jobs):
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def cmd_corrupt(args) -> int:
    entries = collect_inputs(args.input)
    if args.spec:
        cells = [parse_spec(args.spec)]
    else:
        cells = [c for c in load_grid(args.grid) if c.kind != "unaltered"]
    for spec in cells:
        cell_dir = os.path.join(args.out, safe_name(spec.label))
        os.makedirs(cell_dir, exist_ok=True)
        _map(lambda e: materialize(e.path, e.item_id, spec, args.seed, cell_dir), entries, args.jobs)
        print(f"{spec.label}: {len(entries)} image(s) -> {cell_dir}")
    return EXIT_OK


def cmd_augment(args) -> int:
    entries = collect_inputs(args.input)
    cfg = AugmentConfig.from_json(args.config) if args.config else preset(args.preset)
    os.makedirs(args.out, exist_ok=True)

    def one(entry):
        rng = derive_rng(args.seed, entry.item_id, "augment")
        trace = sample_chain(cfg, rng)
        img = apply_trace(load_image(entry.path), trace, rng)
        save_image(img, os.path.join(args.out, safe_name(entry.item_id) + ".png"))
        return trace

    traces = _map(one, entries, args.jobs)
    trace_path = args.trace or os.path.join(args.out, "trace.jsonl")
    with open(trace_path, "w", encoding="utf-8") as fh:
        for entry, trace in zip(entries, traces):
            fh.write(json.dumps({"id": entry.item_id, **trace.to_dict()}) + "\n")
    applied = sum(not t.is_empty for t in traces)
    print(f"augmented {len(entries)} image(s) ({applied} altered) -> {args.out}; trace {trace_path}")
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = BenchConfig.from_json(args.config)
    grid = load_grid(cfg.grid)
    entries = load_manifest(cfg.manifest)
    rows = run_grid(entries, grid, cfg.detector, cfg.seed, cfg.workdir,
                    threshold=cfg.threshold, jobs=args.jobs)
    os.makedirs(os.path.dirname(os.path.abspath(cfg.report)), exist_ok=True)
    emit_report(rows, cfg.format, cfg.report)
    width = max(len(r.cell) for r in rows)
    print(f"{'cell':<{width}}  {'n':>5}  {'AUC':>7}")
    for r in rows:
        warn = f"  ({r.n_failed} excluded)" if r.n_failed else ""
        print(f"{r.cell:<{width}}  {r.n:>5}  {100 * r.auc:7.2f}{warn}")
    print(f"report: {cfg.report}")
    return EXIT_OK


def cmd_report(args) -> int:
    records = merge_reports(args.reports, kind=args.sweep)
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.DictWriter(out, fieldnames=SWEEP_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerows(records)
    finally:
        if args.out:
            out.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="corruptkit", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("corrupt", help="write corrupted copies of test images")
    p.add_argument("input", help="image directory or manifest CSV")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--spec", help="single corruption, e.g. 'jpeg:quality=60'")
    g.add_argument("--grid", help="'builtin' or a grid JSON file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_corrupt)

    p = sub.add_parser("augment", help="apply the stochastic augmentation chain offline")
    p.add_argument("input", help="image directory or manifest CSV")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--preset", default="paper-default",
                   choices=["paper-default", "gn-only", "non-stochastic"])
    g.add_argument("--config", help="AugmentConfig JSON file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--trace", help="JSON-lines trace file (default: <out>/trace.jsonl)")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("bench", help="run a detector over a corruption grid")
    p.add_argument("config", help="benchmark config JSON")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="merge reports into a plot-ready sweep CSV")
    p.add_argument("reports", nargs="+", help="report files (CSV or JSON)")
    p.add_argument("--sweep", metavar="KIND", help="keep only this corruption kind")
    p.add_argument("--out", help="output CSV (default: stdout)")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "jobs", 1) < 1:
        print("corruptkit: error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except DetectorError as exc:
        print(f"corruptkit: detector error: {exc}", file=sys.stderr)
        return EXIT_DETECTOR
    except CellError as exc:
        code = EXIT_DETECTOR if isinstance(exc.__cause__, DetectorError) else EXIT_INPUT
        print(f"corruptkit: error: {exc}", file=sys.stderr)
        return code
    except (CorruptkitError, OSError) as exc:
        print(f"corruptkit: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"corruptkit: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
