"""Deterministic file emission: CSV and JSON writers.

Every file embeds the fully resolved config so runs are self-describing,
and floats print with 17 significant digits so values round-trip exactly.
Rerunning with an identical config must produce byte-identical files.
"""

from __future__ import annotations

import json
import math
from pathlib import Path


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        return f"{v:.17g}"
    return str(v)


def config_json(config: dict) -> str:
    return json.dumps(config, sort_keys=True, separators=(",", ":"))


def write_csv(path: Path, fieldnames: list[str], rows: list[dict], config: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# config: {config_json(config)}", ",".join(fieldnames)]
    for row in rows:
        lines.append(",".join(format_value(row.get(name)) for name in fieldnames))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def write_json(path: Path, payload: dict, config: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    body = {"config": config, **payload}
    text = json.dumps(_jsonable(body), sort_keys=True, indent=2)
    path.write_text(text + "\n", encoding="utf-8", newline="\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and math.isnan(obj):
        return None
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        try:
            return _jsonable(obj.item())
        except (AttributeError, ValueError):
            pass
    if hasattr(obj, "tolist"):
        return _jsonable(obj.tolist())
    return obj


def read_data_csv(path: Path):
    """Load an input data file: one sample per row, header line required.

    Returns the matrix transposed to the internal sample-per-column layout.
    """
    import numpy as np

    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines()
             if ln.strip() and not ln.startswith("#")]
    if len(lines) < 2:
        raise ValueError(f"data file {path} needs a header and at least one sample row")
    rows = []
    for ln in lines[1:]:
        rows.append([float(tok) for tok in ln.split(",")])
    arr = np.asarray(rows, dtype=np.float64)
    return arr.T
