"""Deterministic CSV/JSON writers (17 significant digits, fixed key order)."""
from __future__ import annotations

import io
import json
import math
from typing import Any, Iterable, Mapping, Sequence


def fmt(x: Any) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    return str(x)


def _plain(obj: Any) -> Any:
    if hasattr(obj, "tolist") and getattr(obj, "ndim", 0) > 0:
        return obj.tolist()
    if hasattr(obj, "item") and callable(obj.item) and not isinstance(obj, (dict, list, tuple)):
        return obj.item()
    return obj


def _emit(obj: Any, indent: int, level: int) -> str:
    obj = _plain(obj)
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, (bool, str)):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        # non-finite values have no JSON literal; emit them as strings
        return fmt(obj) if math.isfinite(obj) else json.dumps(fmt(obj))
    if isinstance(obj, Mapping):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_emit(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}{_emit(v, indent, level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def csv_text(params: Mapping[str, Any], columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """CSV with a '# key = value' header block echoing the resolved parameters."""
    buf = io.StringIO()
    for key, value in params.items():
        if isinstance(value, (dict, list)):
            value = _emit(value, 0, 0).replace("\n", " ")
        buf.write(f"# {key} = {fmt(value)}\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def json_text(payload: Mapping[str, Any]) -> str:
    return _emit(payload, 2, 0) + "\n"
