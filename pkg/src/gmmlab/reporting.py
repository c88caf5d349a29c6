"""Deterministic CSV/JSON emission and run provenance.

CSV floats carry 17 significant digits (lossless float64 round-trip); JSON
uses Python's shortest-round-trip float repr, which is equally lossless.
Reports are pure functions of (config, seed): same inputs, same bytes.
"""

from __future__ import annotations

import hashlib
import json
from typing import Iterable, Sequence

import numpy as np

from . import __version__

__all__ = ["fmt_float", "csv_text", "json_text", "config_hash", "provenance"]


def fmt_float(x: float) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(
            v if isinstance(v, str) else fmt_float(v) for v in row))
    return "\n".join(lines) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def json_text(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def config_hash(config: dict) -> str:
    canon = json.dumps(_jsonable(config), sort_keys=True,
                       separators=(",", ":")).encode()
    return hashlib.sha256(canon).hexdigest()


def provenance(config: dict, seed: int) -> dict:
    return {
        "config_hash": config_hash(config),
        "seed": int(seed),
        "code_version": __version__,
        "package": "gmmlab",
    }
