"""Benchmark harness: manifests, external endpoints, grid runs, reports."""
from .config import BenchConfig
from .grid import CellError, ReportRow, materialize, run_grid, safe_name
from .manifest import ManifestEntry, load_manifest, write_manifest
from .protocol import DetectorEndpoint, score_images, transform_images
from .report import emit_report, merge_reports, read_report, sweep_path, sweep_rows

__all__ = [
    "BenchConfig",
    "CellError",
    "DetectorEndpoint",
    "ManifestEntry",
    "ReportRow",
    "emit_report",
    "load_manifest",
    "materialize",
    "merge_reports",
    "read_report",
    "run_grid",
    "safe_name",
    "score_images",
    "sweep_path",
    "sweep_rows",
    "transform_images",
    "write_manifest",
]
