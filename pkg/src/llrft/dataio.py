"""Experiment artifact persistence.

Demonstrations travel as JSON-Lines with a fixed key order and 17
significant digits per float, so identical data always produces identical
bytes and every 64-bit value survives a round trip.  Token sequences use one
JSON integer array per line.  Training curves are CSV.  All writes go
through a temp file plus rename, so readers never observe partial files.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .codec import ActionChunk
from .policy import PromptContext
from .tasks import Demonstration
from .training import CURVE_COLUMNS

# 17 significant decimal digits: the shortest count that round-trips every
# IEEE 754 double exactly.
_FLOAT_FMT = ".17g"


def _fmt(value: float) -> str:
    return format(float(value), _FLOAT_FMT)


def atomic_write_text(path, text: str) -> None:
    """Write via a temp file in the target directory, then rename over the
    destination, so a crash never leaves a half-written artifact."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def demo_to_line(demo: Demonstration) -> str:
    obs = ", ".join(_fmt(v) for v in demo.context.observation)
    chunk = ", ".join(
        "[" + ", ".join(_fmt(v) for v in row) + "]" for row in demo.chunk.values
    )
    return (
        f'{{"task_id": {demo.context.instruction_id}, '
        f'"demo_index": {demo.demo_index}, '
        f'"obs": [{obs}], "chunk": [{chunk}]}}'
    )


def write_demos(demos, path) -> None:
    """One compact JSON object per line, keys always
    {task_id, demo_index, obs, chunk}; byte-deterministic for equal input."""
    atomic_write_text(path, "".join(demo_to_line(d) + "\n" for d in demos))


def _parse_demo_record(record: dict, line_no: int, shape: list) -> Demonstration:
    for key in ("task_id", "demo_index", "obs", "chunk"):
        if key not in record:
            raise ValueError(f"line {line_no}: missing key {key!r}")
    task_id = record["task_id"]
    demo_index = record["demo_index"]
    if not isinstance(task_id, int) or not isinstance(demo_index, int):
        raise ValueError(f"line {line_no}: task_id and demo_index must be integers")
    obs = record["obs"]
    chunk = record["chunk"]
    if not isinstance(obs, list) or not isinstance(chunk, list) or not chunk:
        raise ValueError(f"line {line_no}: obs and chunk must be non-empty arrays")
    widths = {len(row) if isinstance(row, list) else -1 for row in chunk}
    if len(widths) != 1 or -1 in widths:
        raise ValueError(f"line {line_no}: chunk rows must share one width")
    h, d = len(chunk), widths.pop()
    if len(obs) != d - 1:
        raise ValueError(
            f"line {line_no}: obs length {len(obs)} does not match pose "
            f"dimension {d - 1}"
        )
    if shape and (h, d) != tuple(shape):
        raise ValueError(
            f"line {line_no}: chunk shape ({h}, {d}) differs from earlier "
            f"records {tuple(shape)}"
        )
    if not shape:
        shape.extend((h, d))
    try:
        context = PromptContext(
            observation=np.asarray(obs, dtype=np.float64),
            instruction_id=task_id,
        )
        parsed = ActionChunk(np.asarray(chunk, dtype=np.float64))
    except (TypeError, ValueError) as exc:
        raise ValueError(f"line {line_no}: {exc}") from exc
    return Demonstration(context=context, chunk=parsed, demo_index=demo_index)


def read_demos(path) -> list:
    """Order-preserving load; any malformed line fails with its 1-based
    line number."""
    demos = []
    shape: list = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                raise ValueError(f"line {line_no}: blank line")
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"line {line_no}: invalid JSON ({exc.msg})") from exc
            if not isinstance(record, dict):
                raise ValueError(f"line {line_no}: expected a JSON object")
            demos.append(_parse_demo_record(record, line_no, shape))
    return demos


def write_tokens(token_lists, path) -> None:
    """One JSON integer array per line."""
    lines = []
    for tokens in token_lists:
        lines.append("[" + ", ".join(str(int(t)) for t in tokens) + "]\n")
    atomic_write_text(path, "".join(lines))


def read_tokens(path) -> list:
    """Load one token sequence per line, 1-based line numbers in errors."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"line {line_no}: invalid JSON ({exc.msg})") from exc
            if not isinstance(row, list) or not all(
                isinstance(t, int) and not isinstance(t, bool) for t in row
            ):
                raise ValueError(f"line {line_no}: expected an array of integers")
            out.append(row)
    return out


def write_curves(rows, path) -> None:
    """Training curves as CSV with the fixed schema
    step,mean_mdpr,mean_qacr,mean_ctar,mean_fcr,objective."""
    lines = [",".join(CURVE_COLUMNS) + "\n"]
    for row in rows:
        step, *values = row
        lines.append(",".join([str(int(step))] + [_fmt(v) for v in values]) + "\n")
    atomic_write_text(path, "".join(lines))


def write_report(report: dict, path) -> None:
    """Deterministic pretty-printed JSON (sorted keys)."""
    atomic_write_text(path, json.dumps(report, sort_keys=True, indent=2) + "\n")
