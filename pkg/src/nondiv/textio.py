"""Text formats: whitespace matrices, exterior-vector JSON and the report writer."""

from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from .exact_lattice import ExteriorVector, LatticeModule

__all__ = [
    "ConfigError",
    "parse_entry",
    "parse_matrices",
    "read_matrices",
    "matrix_from_json",
    "vector_from_json",
    "vector_to_json",
    "load_config",
    "config_error",
    "dumps",
    "subgroup_from_json",
    "module_from_json",
]

SCHEMA = 1


class ConfigError(ValueError):
    """Malformed input; ``str()`` gives ``source:line: message``."""

    def __init__(self, message: str, source: str = "<config>", line: int = 1):
        super().__init__(f"{source}:{line}: {message}")
        self.source, self.line = source, line


def parse_entry(tok) -> Fraction | float:
    """An integer or p/q string gives a Fraction; a decimal gives a float."""
    if isinstance(tok, bool):
        raise ValueError(f"not a number: {tok!r}")
    if isinstance(tok, (int, Fraction)):
        return Fraction(tok)
    if isinstance(tok, float):
        return tok
    s = str(tok).strip()
    if any(c in s for c in ".eE") and "/" not in s:
        return float(s)
    return Fraction(s)


def _as_array(rows: list[list]) -> np.ndarray:
    """Object array of Fractions if every entry is exact, else float64."""
    if all(isinstance(x, Fraction) for r in rows for x in r):
        out = np.empty((len(rows), len(rows[0]) if rows else 0), dtype=object)
        for i, r in enumerate(rows):
            for j, x in enumerate(r):
                out[i, j] = x
        return out
    return np.array([[float(x) for x in r] for r in rows])


def parse_matrices(text: str, source: str = "<text>") -> list[np.ndarray]:
    """Blank-line separated blocks, one row per line."""
    out, rows, width = [], [], None
    for lineno, line in enumerate(text.splitlines() + [""], start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            if rows:
                out.append(_as_array(rows))
                rows, width = [], None
            continue
        try:
            row = [parse_entry(t) for t in line.split()]
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad matrix entry ({exc})", source, lineno) from None
        if width is not None and len(row) != width:
            raise ConfigError(f"row has {len(row)} entries, expected {width}", source, lineno)
        width = len(row)
        rows.append(row)
    return out


def read_matrices(path: str | Path) -> list[np.ndarray]:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read file ({exc.strerror})", str(p), 1) from None
    mats = parse_matrices(text, str(p))
    if not mats:
        raise ConfigError("no matrix found", str(p), 1)
    return mats


def matrix_from_json(value, where: str = "matrix") -> np.ndarray:
    if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
        raise ValueError(f"{where} must be a nonempty list of rows")
    if len({len(r) for r in value}) != 1:
        raise ValueError(f"{where} has rows of different lengths")
    try:
        return _as_array([[parse_entry(x) for x in r] for r in value])
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"{where}: {exc}") from None


def vector_from_json(obj: dict, n: int) -> ExteriorVector:
    """``{"degree": k, "components": {"1,2": "3/4"}}`` with 1-based indices."""
    k = int(obj["degree"])
    comps = {}
    for key, val in obj.get("components", {}).items():
        idx = tuple(sorted(int(i) - 1 for i in str(key).split(",") if i.strip()))
        if len(idx) != k or len(set(idx)) != k or any(not 0 <= i < n for i in idx):
            raise ValueError(f"component key {key!r} does not name {k} distinct indices in 1..{n}")
        comps[idx] = parse_entry(val)
    return ExteriorVector(n, k, comps)


def vector_to_json(v: ExteriorVector) -> dict:
    return {"degree": v.degree,
            "components": {",".join(str(i + 1) for i in s): _scalar(c)
                           for s, c in sorted(v.nonzero().items(), key=lambda t: t[0][::-1])}}


def module_from_json(rows, n: int | None = None) -> LatticeModule:
    from .exact_lattice import canonicalize

    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise ValueError("a module is a nonempty list of integer rows")
    return canonicalize([[int(x) for x in r] for r in rows], n)


def subgroup_from_json(obj):
    """H as ``{"fixture": "sl2-unipotent" | "sl2-torus", "window": [lo, hi]}`` or explicit fields.

    Explicit form: ``{"lie_basis": [...], "h0": ..., "window": ..., "stable_source": ...}``
    where the stable source is "algebra-closure", ``{"torus": [weights]}`` or a
    list of modules (lists of integer rows).
    """
    from .nondivergence import SubgroupSpec, TorusSource, diagonal_torus, unipotent_sl2

    if isinstance(obj, str):
        obj = {"fixture": obj}
    if not isinstance(obj, dict):
        raise ValueError("H must be an object")
    if "fixture" in obj:
        window = tuple(obj.get("window", (0.0, 1.0)))
        name = obj["fixture"]
        if name == "sl2-unipotent":
            return unipotent_sl2(window)
        if name == "sl2-torus":
            return diagonal_torus(tuple(obj.get("weights", (1, -1))), window)
        raise ValueError(f"unknown subgroup fixture {name!r}")
    basis = [matrix_from_json(X, "lie_basis entry") for X in obj["lie_basis"]]
    n = int(obj.get("n", basis[0].shape[0] if basis else 0))
    h0 = matrix_from_json(obj["h0"], "h0") if obj.get("h0") is not None else None
    src = obj.get("stable_source", "algebra-closure")
    if isinstance(src, dict) and "torus" in src:
        src = TorusSource(tuple(int(w) for w in src["torus"]))
    elif isinstance(src, list):
        src = [module_from_json(r, n) for r in src]
    elif src != "algebra-closure":
        raise ValueError(f"unknown stable_source {src!r}")
    window = obj.get("window", 1.0)
    if isinstance(window, list) and window and not isinstance(window[0], list):
        window = [tuple(window)]
    return SubgroupSpec(n, basis, h0=h0, window=window, stable_source=src)


def load_config(path: str | Path) -> dict:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config ({exc.strerror})", str(p), 1) from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, str(p), exc.lineno) from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object", str(p), 1)
    if cfg.get("schema", SCHEMA) != SCHEMA:
        raise ConfigError(f"unsupported schema {cfg.get('schema')!r} (expected {SCHEMA})",
                          str(p), _line_of(text, "schema"))
    cfg["__source__"] = str(p)
    cfg["__text__"] = text
    return cfg


def _line_of(text: str, key: str) -> int:
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return i
    return 1


def config_error(cfg: dict, key: str, message: str) -> ConfigError:
    return ConfigError(message, cfg.get("__source__", "<args>"), _line_of(cfg.get("__text__", ""), key))


def _scalar(x):
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else int(x)
    return x


def _plain(obj: Any):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items() if not str(k).startswith("__")}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, LatticeModule):
        return [list(r) for r in obj.basis]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, Fraction):
        return _scalar(obj)
    return obj


def _emit(obj, indent: int, level: int) -> str:
    pad, inner = " " * (indent * level), " " * (indent * (level + 1))
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return json.dumps(str(obj))
        text = format(obj, ".17g")
        return text if any(c in text for c in ".e") else text + ".0"
    if isinstance(obj, (int, str)):
        return json.dumps(obj)
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (list, dict)) for v in obj):
            return "[" + ", ".join(_emit(v, indent, 0) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + _emit(v, indent, level + 1) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [inner + json.dumps(k) + ": " + _emit(v, indent, level + 1) for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj: Any, indent: int = 2) -> str:
    """JSON with every float written to 17 significant digits and a schema tag."""
    obj = _plain(obj)
    if isinstance(obj, dict) and "schema" not in obj:
        obj = {"schema": SCHEMA, **obj}
    return _emit(obj, indent, 0) + "\n"
