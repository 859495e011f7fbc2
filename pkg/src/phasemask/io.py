"""CSV/JSON writers shared by the CLI."""

from __future__ import annotations

import io
import json
import math
from datetime import datetime, timezone

import numpy as np

from . import __version__


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        obj = float(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def metadata(config: dict, timestamp: bool = True, **extra) -> dict:
    meta = {"version": __version__, "config": config}
    meta.update(extra)
    if timestamp:
        meta["generated_at"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return _plain(meta)


def dumps_json(obj) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if not math.isfinite(v):
        return ""
    return format(v, ".17g")


def dumps_csv(header: list[str], rows, meta: dict | None = None) -> str:
    buf = io.StringIO()
    if meta is not None:
        buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_cell(v) for v in row) + "\n")
    return buf.getvalue()


def read_csv(text: str) -> tuple[dict | None, list[str], list[list[str]]]:
    """Inverse of :func:`dumps_csv`, returning ``(metadata, header, rows)``."""
    lines = text.splitlines()
    meta = None
    if lines and lines[0].startswith("# "):
        meta = json.loads(lines[0][2:])
        lines = lines[1:]
    header = lines[0].split(",")
    return meta, header, [ln.split(",") for ln in lines[1:] if ln]
