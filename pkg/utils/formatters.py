"""
Report formatting utilities
"""

import json
import math
import sys
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from services.phases import wrap_angle

FLOAT_FORMAT = "%.17g"


def format_float(x: float) -> str:
    """17 significant digits; non-finite values become JSON null"""
    x = float(x)
    if not math.isfinite(x):
        return "null"
    text = FLOAT_FORMAT % x
    if text in ("-0", "0"):
        return "0"
    return text


def angle_entry(value) -> Dict[str, Any]:
    """Unwrapped angle next to its [0, 2 pi) display value"""
    if isinstance(value, complex):
        return {"unwrapped": value, "mod_2pi": complex(wrap_angle(value.real), value.imag)}
    return {"unwrapped": float(value), "mod_2pi": wrap_angle(value)}


def _plain(obj: Any) -> Any:
    if isinstance(obj, np.ndarray):
        return [_plain(x) for x in obj.tolist()]
    if isinstance(obj, (np.complexfloating,)):
        return complex(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(x) for x in obj]
    return obj


def _json_text(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    close = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, complex):
        return f"[{format_float(obj.real)}, {format_float(obj.imag)}]"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_json_text(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + close + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(x, (dict, list)) for x in obj):
            return "[" + ", ".join(_json_text(x, indent, level + 1) for x in obj) + "]"
        items = [f"{pad}{_json_text(x, indent, level + 1)}" for x in obj]
        return "[\n" + ",\n".join(items) + "\n" + close + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def format_json(report: Any, indent: int = 2) -> str:
    """Deterministic JSON; complex numbers become [re, im]"""
    return _json_text(_plain(report), indent, 0) + "\n"


def flatten_report(report: Dict[str, Any], prefix: str = "") -> Dict[str, Any]:
    """Nested report -> flat columns; complex values split into _re/_im"""
    flat: Dict[str, Any] = {}
    for key, value in _plain(report).items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(flatten_report(value, f"{name}_"))
        elif isinstance(value, list):
            flat.update(flatten_report({str(i): v for i, v in enumerate(value)}, f"{name}_"))
        elif isinstance(value, complex):
            flat[f"{name}_re"] = value.real
            flat[f"{name}_im"] = value.imag
        else:
            flat[name] = value
    return flat


def _csv_cell(value: Any) -> Any:
    if isinstance(value, bool):
        return "true" if value else "false"
    return value


def format_csv(rows: List[Dict[str, Any]], columns: Optional[List[str]] = None) -> str:
    """CSV with 17 significant digits; None/NaN cells are left empty"""
    frame = pd.DataFrame([{k: _csv_cell(v) for k, v in row.items()} for row in rows], columns=columns)
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, na_rep="", lineterminator="\n")


def format_report(report: Dict[str, Any], output_format: str) -> str:
    if output_format == "csv":
        return format_csv([flatten_report(report)])
    return format_json(report)


def write_output(text: str, destination: Optional[str] = None):
    """Write to a file, or stdout when no destination is given"""
    if destination:
        with open(destination, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()
