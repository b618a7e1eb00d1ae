"""Drive external detector / transform processes over NDJSON stdin/stdout.

Request, one per line::

    {"id": "<item>", "path": "<abs path>"}

Detector response: ``{"id": "<item>", "score": <float in [0, 1]>}``.
Transform response: ``{"id": "<item>", "path": "<abs output path>"}``.

Responses may arrive in any order; the child exits when its stdin closes.
"""
from __future__ import annotations

import collections
import json
import logging
import math
import os
import queue
import shlex
import subprocess
import threading
from dataclasses import dataclass, field

from ..exceptions import DetectorError, ParameterError, ProtocolError

log = logging.getLogger(__name__)

_EOF = object()


@dataclass(frozen=True)
class DetectorEndpoint:
    """How to launch an external scoring (or transform) process.

    ``timeout`` is the longest wait, in seconds, for the next response while
    requests are outstanding; items still pending when it expires are marked
    failed and excluded.
    """

    command: tuple = ()
    timeout: float = 60.0
    batch_size: int = 16
    name: str = ""
    env: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        cmd = self.command
        if isinstance(cmd, str):
            cmd = shlex.split(cmd)
        cmd = tuple(str(c) for c in cmd)
        if not cmd:
            raise ParameterError("detector command must be non-empty")
        if not self.timeout > 0:
            raise ParameterError(f"timeout must be > 0, got {self.timeout!r}")
        if int(self.batch_size) != self.batch_size or self.batch_size < 1:
            raise ParameterError(f"batch_size must be a positive integer, got {self.batch_size!r}")
        object.__setattr__(self, "command", cmd)
        if not self.name:
            object.__setattr__(self, "name", os.path.basename(cmd[-1]) or cmd[0])

    @classmethod
    def from_dict(cls, d) -> "DetectorEndpoint":
        allowed = {"command", "timeout", "batch_size", "name", "env"}
        unknown = set(d) - allowed
        if unknown:
            raise ParameterError(f"unknown detector keys: {sorted(unknown)}")
        return cls(**d)


class _Session:
    """One child process plus a reader thread feeding a line queue."""

    def __init__(self, endpoint: DetectorEndpoint):
        env = dict(os.environ, **endpoint.env) if endpoint.env else None
        try:
            self.proc = subprocess.Popen(
                endpoint.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
                env=env,
            )
        except OSError as exc:
            raise DetectorError(f"cannot launch {' '.join(endpoint.command)!r}: {exc}") from exc
        self.lines: queue.Queue = queue.Queue()
        self.stderr_tail = collections.deque(maxlen=20)
        self._threads = [
            threading.Thread(target=self._pump_stdout, daemon=True),
            threading.Thread(target=self._pump_stderr, daemon=True),
        ]
        for t in self._threads:
            t.start()

    def _pump_stdout(self):
        for line in self.proc.stdout:
            self.lines.put(line)
        self.lines.put(_EOF)

    def _pump_stderr(self):
        for line in self.proc.stderr:
            self.stderr_tail.append(line.rstrip("\n"))

    def send(self, obj) -> bool:
        try:
            self.proc.stdin.write(json.dumps(obj) + "\n")
            self.proc.stdin.flush()
            return True
        except (BrokenPipeError, OSError, ValueError):
            return False

    def close(self, timeout=5.0):
        try:
            self.proc.stdin.close()
        except OSError:
            pass
        try:
            self.proc.wait(timeout=timeout)
        except subprocess.TimeoutExpired:
            self.proc.kill()
            self.proc.wait()
        for t in self._threads:
            t.join(timeout=1.0)

    def kill(self):
        if self.proc.poll() is None:
            self.proc.kill()
        self.close(timeout=1.0)

    def diagnostic(self) -> str:
        tail = "\n".join(self.stderr_tail)
        return f"; stderr: {tail}" if tail else ""


def _check_score(item_id, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProtocolError(f"item {item_id!r}: score must be a number, got {value!r}")
    if not math.isfinite(value) or not 0.0 <= value <= 1.0:
        raise ProtocolError(f"item {item_id!r}: score {value!r} outside [0, 1]")
    return float(value)


def _check_output_path(item_id, value):
    if not isinstance(value, str) or not value:
        raise ProtocolError(f"item {item_id!r}: response lacks an output 'path'")
    if not os.path.isfile(value):
        raise ProtocolError(f"item {item_id!r}: output file {value!r} does not exist")
    return value


def _exchange(endpoint: DetectorEndpoint, images, key: str, check):
    items = [(str(i), os.path.abspath(p)) for i, p in images]
    ids = [i for i, _ in items]
    if len(set(ids)) != len(ids):
        raise ParameterError("item ids passed to an endpoint must be unique")
    results: dict = {}
    failed: set = set()
    if not items:
        return results, failed

    sess = _Session(endpoint)
    try:
        bs = int(endpoint.batch_size)
        for start in range(0, len(items), bs):
            batch = items[start : start + bs]
            for item_id, path in batch:
                if not sess.send({"id": item_id, "path": path}):
                    raise DetectorError(
                        f"{endpoint.name}: process exited early "
                        f"({len(results)} of {len(items)} items answered){sess.diagnostic()}",
                        partial=len(results),
                    )
            pending = {i for i, _ in batch}
            while pending:
                try:
                    line = sess.lines.get(timeout=endpoint.timeout)
                except queue.Empty:
                    log.warning(
                        "%s: timed out after %.1fs; excluding %d item(s)",
                        endpoint.name, endpoint.timeout, len(pending),
                    )
                    failed |= pending
                    pending = set()
                    break
                if line is _EOF:
                    raise DetectorError(
                        f"{endpoint.name}: process exited before completion "
                        f"({len(results)} of {len(items)} items answered){sess.diagnostic()}",
                        partial=len(results),
                    )
                if not line.strip():
                    continue
                try:
                    msg = json.loads(line)
                except json.JSONDecodeError:
                    raise ProtocolError(
                        f"{endpoint.name}: malformed response line {line.strip()!r}",
                        partial=len(results),
                    ) from None
                if not isinstance(msg, dict) or "id" not in msg:
                    raise ProtocolError(f"{endpoint.name}: response without 'id': {line.strip()!r}",
                                        partial=len(results))
                item_id = str(msg["id"])
                if item_id in failed:
                    continue  # late answer for an item already given up on
                if item_id not in pending:
                    raise ProtocolError(f"{endpoint.name}: response for unexpected item {item_id!r}",
                                        partial=len(results))
                if key not in msg:
                    raise ProtocolError(f"item {item_id!r}: response lacks {key!r}",
                                        partial=len(results))
                try:
                    results[item_id] = check(item_id, msg[key])
                except ProtocolError as exc:
                    exc.partial = len(results)
                    raise
                pending.discard(item_id)
    except BaseException:
        sess.kill()
        raise
    sess.close()
    return results, failed


def score_images(endpoint: DetectorEndpoint, images) -> list[tuple[str, float]]:
    """Score ``(item_id, path)`` pairs with an external detector.

    Returns ``(item_id, score)`` in input order.  Items that timed out are
    left out (and logged); compare lengths to count them.
    """
    images = list(images)
    results, failed = _exchange(endpoint, images, "score", _check_score)
    if failed:
        log.warning("%s: %d item(s) excluded after timeout", endpoint.name, len(failed))
    return [(str(i), results[str(i)]) for i, _ in images if str(i) in results]


def transform_images(endpoint: DetectorEndpoint, images) -> list[tuple[str, str]]:
    """Run ``(item_id, path)`` pairs through an external image-to-image plug-in.

    Returns ``(item_id, output_path)`` in input order, omitting timed-out items.
    """
    images = list(images)
    results, failed = _exchange(endpoint, images, "path", _check_output_path)
    if failed:
        log.warning("%s: %d item(s) excluded after timeout", endpoint.name, len(failed))
    return [(str(i), results[str(i)]) for i, _ in images if str(i) in results]
