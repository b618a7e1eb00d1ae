"""JSON configuration for a benchmark run."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from ..exceptions import ParameterError
from ..metrics import parse_threshold_policy
from .protocol import DetectorEndpoint

WORKDIR_ENV = "CORRUPTKIT_WORKDIR"


@dataclass
class BenchConfig:
    """Example::

        {"seed": 0, "manifest": "data/manifest.csv", "grid": "builtin",
         "detector": {"command": ["python", "-m", "corruptkit.toys", "hf"]},
         "workdir": "work", "threshold": "fixed(0.5)", "report": "report.csv"}

    Relative paths resolve against the config file's directory.
    """

    manifest: str
    detector: DetectorEndpoint
    seed: int = 0
    grid: str = "builtin"
    workdir: str = field(default_factory=lambda: os.environ.get(WORKDIR_ENV, "corruptkit-work"))
    threshold: object = 0.5
    report: str = "report.csv"
    format: str = ""

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ParameterError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        self.threshold = parse_threshold_policy(self.threshold)
        if not self.format:
            self.format = "json" if self.report.lower().endswith(".json") else "csv"
        if self.format not in ("csv", "json"):
            raise ParameterError(f"report format must be csv or json, got {self.format!r}")

    @classmethod
    def from_dict(cls, d, base_dir="."):
        allowed = {"manifest", "detector", "seed", "grid", "workdir", "threshold", "report", "format"}
        unknown = set(d) - allowed
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        for key in ("manifest", "detector"):
            if key not in d:
                raise ParameterError(f"config is missing {key!r}")
        d = dict(d)
        det = d["detector"]
        if isinstance(det, (str, list)):
            det = {"command": det}
        d["detector"] = DetectorEndpoint.from_dict(det)

        def resolve(p):
            return p if os.path.isabs(p) else os.path.normpath(os.path.join(base_dir, p))

        for key in ("manifest", "workdir", "report"):
            if key in d:
                d[key] = resolve(d[key])
        if d.get("grid", "builtin") != "builtin":
            d["grid"] = resolve(d["grid"])
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        with open(path, encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ParameterError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(doc, dict):
            raise ParameterError(f"{path}: config must be a JSON object")
        return cls.from_dict(doc, base_dir=os.path.dirname(os.path.abspath(path)))
