"""Versioned JSON checkpoint for named parameter arrays.

Format (documented contract, see README):

    {
      "format_version": 1,
      "meta": { ... arbitrary JSON ... },
      "params": { "<name>": {"shape": [d0, d1, ...], "data": [flat floats]} }
    }

Floats are serialized through Python's shortest round-trip repr, so a
save/load cycle reproduces every value bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import ContractError
from .tensor import Tensor

FORMAT_VERSION = 1


def save_params(path: str | Path, params: dict, meta: dict | None = None) -> None:
    """Write parameters (Tensors or arrays) to `path`."""
    payload = {"format_version": FORMAT_VERSION, "meta": meta or {}, "params": {}}
    for name, p in params.items():
        arr = p.data if isinstance(p, Tensor) else np.asarray(p, dtype=np.float64)
        payload["params"][name] = {
            "shape": list(arr.shape),
            "data": [float(v) for v in arr.reshape(-1)],
        }
    Path(path).write_text(json.dumps(payload))


def load_params(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    """Read a checkpoint; returns (name -> array, meta)."""
    payload = json.loads(Path(path).read_text())
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise ContractError(f"unsupported checkpoint format_version {version!r}")
    out: dict[str, np.ndarray] = {}
    for name, entry in payload["params"].items():
        arr = np.array(entry["data"], dtype=np.float64).reshape(entry["shape"])
        out[name] = arr
    return out, payload.get("meta", {})
