"""Canonical text encoding for persisted artifacts.

Every file is line-delimited JSON (or CSV for logs/reports) with floats
rendered at 17 significant digits, which round-trips 64-bit values exactly
and keeps outputs byte-identical across runs.
"""

import json

import numpy as np

from .errors import MissingInput, SchemaVersionMismatch

FORMAT_VERSION = 1


def fmt_float(x) -> str:
    return format(float(x), ".17g")


def encode(obj) -> str:
    """Deterministic JSON text: dict order preserved, floats at 17 digits."""
    if isinstance(obj, dict):
        return "{" + ",".join(json.dumps(str(k)) + ":" + encode(v) for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(encode(v) for v in obj) + "]"
    if isinstance(obj, np.ndarray):
        return encode(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if obj is None:
        return "null"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def decode(text: str):
    return json.loads(text)


def write_lines(path, lines):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line)
            fh.write("\n")


def read_lines(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read().splitlines()
    except FileNotFoundError:
        raise MissingInput(f"no such file: {path}") from None


def check_header(header: dict, kind: str, path="<data>"):
    """Validate the version/kind fields of a persisted artifact."""
    version = header.get("version")
    if version != FORMAT_VERSION:
        raise SchemaVersionMismatch(
            f"{path}: format version {version!r}, expected {FORMAT_VERSION}")
    actual = header.get("kind")
    if actual != kind:
        raise SchemaVersionMismatch(f"{path}: kind {actual!r}, expected {kind!r}")


def write_csv(path, columns, rows):
    """CSV with a version header row; floats at 17 significant digits."""
    lines = [f"piirl_version,{FORMAT_VERSION}", ",".join(columns)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, (float, np.floating)):
                cells.append(fmt_float(v))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    write_lines(path, lines)


def read_csv(path):
    """Returns (columns, rows of strings); validates the version row."""
    lines = read_lines(path)
    if not lines or not lines[0].startswith("piirl_version,"):
        raise SchemaVersionMismatch(f"{path}: missing version row")
    version = lines[0].split(",", 1)[1]
    if version != str(FORMAT_VERSION):
        raise SchemaVersionMismatch(f"{path}: format version {version}, expected {FORMAT_VERSION}")
    columns = lines[1].split(",")
    rows = [line.split(",") for line in lines[2:] if line]
    return columns, rows
