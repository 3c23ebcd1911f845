"""File formats: matrices, pure states, ladder normal forms, CSV and JSON output."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .linalg import as_matrix

__all__ = [
    "InputError",
    "parse_json_bytes",
    "matrix_from_json",
    "matrix_to_json",
    "load_matrix",
    "save_matrix",
    "load_state",
    "save_state",
    "load_normal_form",
    "round_sig",
    "dumps",
    "write_json",
    "write_csv",
]


class InputError(ValueError):
    """Malformed input file."""


def parse_json_bytes(raw: bytes, source: str = "<input>"):
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise InputError(f"{source}: invalid UTF-8 at byte offset {exc.start}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise InputError(f"{source}: malformed JSON at byte offset {offset}: {exc.msg}") from None


def _read(path) -> object:
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    return parse_json_bytes(raw, str(path))


def _complex_list(data, source) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError):
        raise InputError(f"{source}: entries must be [re, im] number pairs") from None
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InputError(f"{source}: entries must be [re, im] number pairs")
    return arr[:, 0] + 1j * arr[:, 1]


def matrix_from_json(obj, source: str = "<input>") -> np.ndarray:
    """``{"rows": r, "cols": c, "data": [[re, im], ...]}`` in row-major order."""
    if not isinstance(obj, dict) or not {"rows", "cols", "data"} <= obj.keys():
        raise InputError(f"{source}: matrix object needs 'rows', 'cols' and 'data'")
    rows, cols = obj["rows"], obj["cols"]
    if not (isinstance(rows, int) and isinstance(cols, int)) or rows < 1 or cols < 1:
        raise InputError(f"{source}: 'rows' and 'cols' must be positive integers")
    z = _complex_list(obj["data"], source)
    if z.size != rows * cols:
        raise InputError(f"{source}: expected {rows * cols} entries, got {z.size}")
    M = z.reshape(rows, cols)
    if not np.all(np.isfinite(M)):
        raise InputError(f"{source}: non-finite entries")
    return M


def matrix_to_json(M) -> dict:
    M = as_matrix(M)
    return {
        "rows": M.shape[0],
        "cols": M.shape[1],
        "data": [[float(z.real), float(z.imag)] for z in M.ravel()],
    }


def load_matrix(path) -> np.ndarray:
    return matrix_from_json(_read(path), str(path))


def save_matrix(path, M) -> None:
    write_json(path, matrix_to_json(M))


def load_state(path):
    """``{"n": qubits, "amplitudes": [[re, im], ...]}`` as a :class:`PureState`."""
    from .local import PureState

    obj = _read(path)
    if not isinstance(obj, dict) or not {"n", "amplitudes"} <= obj.keys():
        raise InputError(f"{path}: state object needs 'n' and 'amplitudes'")
    v = _complex_list(obj["amplitudes"], str(path))
    if not isinstance(obj["n"], int) or v.size != 2 ** obj["n"]:
        raise InputError(f"{path}: expected 2^n amplitudes")
    return PureState(v)


def save_state(path, psi) -> None:
    v = psi.amplitudes
    write_json(path, {"n": int(round(math.log2(v.size))),
                      "amplitudes": [[float(z.real), float(z.imag)] for z in v]})


def load_normal_form(path):
    from .reversal import HamiltonianNormalForm

    return HamiltonianNormalForm.from_json(_read(path))


def round_sig(obj, digits: int = 12):
    """Recursively round floats (and complex parts) to ``digits`` significant digits."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(f"{x:.{digits}g}") if math.isfinite(x) else None
    if isinstance(obj, (complex, np.complexfloating)):
        return [round_sig(obj.real, digits), round_sig(obj.imag, digits)]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return round_sig(obj.tolist(), digits)
    if isinstance(obj, dict):
        return {str(k): round_sig(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_sig(v, digits) for v in obj]
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, digits: int = 12) -> str:
    return json.dumps(round_sig(obj, digits), indent=2) + "\n"


def write_json(path, obj, digits: int = 12) -> None:
    Path(path).write_text(dumps(obj, digits))


def write_csv(path, header, rows, digits: int = 12) -> None:
    def fmt(x):
        if isinstance(x, (bool, np.bool_)):
            return "true" if x else "false"
        if isinstance(x, (float, np.floating)):
            return f"{float(x):.{digits}g}"
        return str(x)

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(x) for x in r])
