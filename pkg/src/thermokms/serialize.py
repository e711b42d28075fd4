"""JSON and CSV encodings with round-trip exact floats.

Every float is written with 17 significant digits (``'.17g'``), enough to
recover the double bit for bit, and every container is emitted in a fixed
key order, so equal inputs give byte-identical files.
"""

from __future__ import annotations

import io
import json
import math

import numpy as np

from .algebra import GeneratorTerm
from .measures import CylinderMeasure
from .shift import CylinderFunction

FLOAT_FMT = ".17g"


def format_float(x):
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    s = format(x, FLOAT_FMT)
    # keep a float marker so readers do not reparse "1" as an int
    if s.lstrip("-").isdigit():
        s += ".0"
    return s


def to_jsonable(obj):
    """Recursively convert package objects and numpy scalars to plain JSON data."""
    if isinstance(obj, CylinderFunction):
        return function_to_dict(obj)
    if isinstance(obj, CylinderMeasure):
        return measure_to_dict(obj)
    if isinstance(obj, GeneratorTerm):
        return term_to_dict(obj)
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    return obj


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    close = " " * (indent * level)
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (list, dict)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + close + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            pad + json.dumps(k, ensure_ascii=False) + ": " + _encode(v, indent, level + 1)
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + close + "}"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj, indent=2):
    """Deterministic JSON text; floats with 17 significant digits."""
    return _encode(to_jsonable(obj), indent, 0) + "\n"


def loads(text):
    return json.loads(text)


def write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(obj))


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


# -- package objects ----------------------------------------------------------


def function_to_dict(f):
    """``{"k", "depth", "values"}``; complex values become ``[re, im]`` pairs."""
    if f.values.dtype.kind == "c":
        values = [[float(z.real), float(z.imag)] for z in f.values]
    else:
        values = [float(v) for v in f.values]
    return {"k": f.k, "depth": f.depth, "values": values}


def function_from_dict(d):
    vals = d["values"]
    if vals and isinstance(vals[0], (list, tuple)):
        vals = [complex(re, im) for re, im in vals]
    return CylinderFunction(d["k"], d["depth"], vals)


def measure_to_dict(m):
    return {"k": m.k, "depth": m.depth, "masses": [float(v) for v in m.masses]}


def measure_from_dict(d):
    return CylinderMeasure(d["k"], d["depth"], d["masses"])


def term_to_dict(t):
    return {"f": function_to_dict(t.f), "n": t.n, "g": function_to_dict(t.g)}


def term_from_dict(d):
    return GeneratorTerm(function_from_dict(d["f"]), int(d["n"]), function_from_dict(d["g"]))


def decode(d):
    """Rebuild a package object from its dict form, by key signature."""
    if isinstance(d, dict):
        keys = set(d)
        if keys == {"k", "depth", "values"}:
            return function_from_dict(d)
        if keys == {"k", "depth", "masses"}:
            return measure_from_dict(d)
        if keys == {"f", "n", "g"}:
            return term_from_dict(d)
        return {k: decode(v) for k, v in d.items()}
    if isinstance(d, list):
        return [decode(v) for v in d]
    return d


# -- CSV ----------------------------------------------------------------------


def csv_text(header, rows):
    """Comma-separated, header row, LF line endings, 17-digit floats."""
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, (float, np.floating)):
                cells.append(format_float(v))
            else:
                cells.append(str(v))
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(csv_text(header, rows))


def read_csv(path):
    """``(header, rows)`` with every cell parsed as float."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    header = lines[0].split(",")
    rows = [[float(c) for c in line.split(",")] for line in lines[1:] if line]
    return header, rows
