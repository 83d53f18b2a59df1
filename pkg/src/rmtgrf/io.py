"""Raw little-endian float64 arrays with JSON sidecars.

``<stem>.bin`` holds the array row-major, ``<stem>.json`` holds the shape
and free-form metadata.  Writing is byte-reproducible: JSON keys are sorted
and floats use repr round-tripping.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np


def _stem(path) -> Path:
    p = Path(path)
    return p.with_suffix("") if p.suffix in (".bin", ".json") else p


def write_array(path, array, meta: dict | None = None) -> Path:
    stem = _stem(path)
    stem.parent.mkdir(parents=True, exist_ok=True)
    arr = np.ascontiguousarray(array, dtype="<f8")
    stem.with_suffix(".bin").write_bytes(arr.tobytes(order="C"))
    sidecar = dict(meta or {})
    sidecar["shape"] = list(arr.shape)
    sidecar["dtype"] = "float64-le"
    stem.with_suffix(".json").write_text(json.dumps(to_jsonable(sidecar), indent=1, sort_keys=True) + "\n")
    return stem.with_suffix(".bin")


def read_array(path) -> tuple[np.ndarray, dict]:
    stem = _stem(path)
    meta = json.loads(stem.with_suffix(".json").read_text())
    raw = np.frombuffer(stem.with_suffix(".bin").read_bytes(), dtype="<f8")
    return raw.reshape(meta["shape"]).astype(float), meta


def write_json(path, obj) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(to_jsonable(obj), indent=1, sort_keys=True) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj
