"""JSON emission for fitted models.

Floats are rendered with 17 significant digits, enough for exact
float64 round-trips, so serialized models reload bit-identically.
"""

from __future__ import annotations

import json

import numpy as np


def _render(obj, out: list, indent: int) -> None:
    pad = "  " * indent
    if isinstance(obj, dict):
        out.append("{\n")
        items = list(obj.items())
        for i, (key, val) in enumerate(items):
            out.append(f'{pad}  {json.dumps(key)}: ')
            _render(val, out, indent + 1)
            out.append(",\n" if i < len(items) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        out.append("[")
        for i, val in enumerate(seq):
            _render(val, out, indent)
            if i < len(seq) - 1:
                out.append(", ")
        out.append("]")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, (float, np.floating)):
        out.append(f"{float(obj):.17g}")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif obj is None:
        out.append("null")
    else:
        out.append(json.dumps(obj))


def dumps(obj) -> str:
    out: list = []
    _render(obj, out, 0)
    out.append("\n")
    return "".join(out)


def dump(obj, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(obj))


def load(path):
    with open(path) as fh:
        return json.load(fh)
