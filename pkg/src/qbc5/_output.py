"""CSV/JSON writers that stamp every file with its config and code digest."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path

import numpy as np

_PKG = Path(__file__).resolve().parent


def code_version() -> str:
    """sha256 over the package's Python sources, in sorted path order."""
    h = hashlib.sha256()
    for path in sorted(_PKG.glob("*.py")):
        h.update(path.name.encode())
        h.update(path.read_bytes())
    return h.hexdigest()


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def metadata(command: str, config: dict) -> dict:
    return {"command": command, "config": _plain(config), "code_version": code_version()}


def render_json(meta: dict, body: dict) -> str:
    return json.dumps(_plain({"metadata": meta, **body}), indent=2, sort_keys=True) + "\n"


def render_csv(meta: dict, rows: list[dict], fields: list[str]) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(_plain(meta), sort_keys=True) + "\n")
    w = csv.DictWriter(buf, fieldnames=fields, extrasaction="ignore", lineterminator="\r\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: _plain(v) for k, v in row.items()})
    return buf.getvalue()


def emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        print(text, end="")
