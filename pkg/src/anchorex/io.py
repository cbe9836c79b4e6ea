"""CSV/JSON input and output, plus config-to-object helpers.

Floats are written with 17 significant digits, enough to round-trip any
IEEE double exactly. JSON reports are emitted with sorted keys and no
run-dependent fields, so equal configs give byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, is_dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .bases import BasisFamily, chebyshev_affine, legendre_affine, real_spherical_harmonics, sine2d
from .errors import ValidationError
from .geometry import Region

GEOMAG_ENV = "ANCHOREX_GEOMAG_CSV"
GEOMAG_FILE = "geomag_br_wmm2025.csv"


def fmt(x: float) -> str:
    return format(float(x), ".17g")


# CSV --------------------------------------------------------------------


def ingest_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read ``coord[, coord...], value`` rows after a header line.

    Returns ``(points, values)`` with ``points`` of shape ``(n, k)``.
    """
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"CSV file not found: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValidationError(f"{path}: empty file")
    header = rows[0]
    if len(header) < 2:
        raise ValidationError(f"{path}:1: header needs at least two columns")
    try:
        [float(h) for h in header]
    except ValueError:
        pass
    else:
        raise ValidationError(f"{path}:1: header row is missing (found numeric data)")
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ValidationError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            vals = [float(c) for c in row]
        except ValueError as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from None
        if not all(math.isfinite(v) for v in vals):
            raise ValidationError(f"{path}:{lineno}: non-finite value")
        data.append(vals)
    if not data:
        raise ValidationError(f"{path}: no data rows")
    arr = np.array(data)
    return arr[:, :-1], arr[:, -1]


def write_csv(path, header, columns) -> None:
    cols = [np.asarray(c, dtype=float).ravel() for c in columns]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([fmt(v) for v in row])


def write_curve(path, x, y, names=("x", "y")) -> None:
    """Two-column plot-data file."""
    write_csv(path, list(names), [x, y])


def geomag_csv_path(explicit=None) -> Path:
    """Explicit path, else ``$ANCHOREX_GEOMAG_CSV``, else the bundled table."""
    if explicit:
        return Path(explicit)
    if os.environ.get(GEOMAG_ENV):
        return Path(os.environ[GEOMAG_ENV])
    return Path(str(resources.files("anchorex") / "data" / GEOMAG_FILE))


# reports ----------------------------------------------------------------


def to_jsonable(obj: Any) -> Any:
    """Plain JSON types; non-finite floats become strings ``"inf"``, ``"-inf"``, ``"nan"``."""
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable(asdict(obj))
    if isinstance(obj, Mapping):
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
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def dumps(report) -> str:
    return json.dumps(to_jsonable(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k in sorted(obj):
            yield from _flatten(obj[k], f"{prefix}.{k}" if prefix else k)
    elif isinstance(obj, list) and any(isinstance(v, (dict, list)) for v in obj):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, obj


def _cell(v) -> str:
    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, float):
        return fmt(v)
    if isinstance(v, list):
        return ";".join(_cell(x) for x in v)
    return str(v)


def emit_report(report, path) -> tuple[Path, Path]:
    """Write ``<path>.json`` and a flat ``key,value`` ``<path>.csv``."""
    base = Path(path)
    if base.suffix in (".json", ".csv"):
        base = base.with_suffix("")
    base.parent.mkdir(parents=True, exist_ok=True)
    data = to_jsonable(report)
    jpath, cpath = base.with_suffix(".json"), base.with_suffix(".csv")
    jpath.write_text(json.dumps(data, sort_keys=True, indent=2, allow_nan=False) + "\n")
    with open(cpath, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["key", "value"])
        for k, v in _flatten(data):
            w.writerow([k, _cell(v)])
    return jpath, cpath


def load_json(path) -> Any:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"JSON file not found: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None


# config objects ---------------------------------------------------------


def _require(cfg: Mapping, key: str, where: str):
    if key not in cfg:
        raise ValidationError(f"{where}: missing required key {key!r}")
    return cfg[key]


def region_from_config(cfg: Mapping) -> Region:
    """``{"kind": ..., "bounds": ..., "resolution": ...}`` to a Region."""
    if isinstance(cfg, Region):
        return cfg
    if not isinstance(cfg, Mapping):
        raise ValidationError(f"region config must be an object, got {type(cfg).__name__}")
    kind = _require(cfg, "kind", "region")
    bounds = _require(cfg, "bounds", "region")
    defaults = {"interval": 401, "interval_union": 401, "sphere_patch": (181, 361),
                "rect2d": (201, 201), "rect2d_minus_patch": (201, 201)}
    res = cfg.get("resolution", defaults.get(kind, 401))
    try:
        if kind == "rect2d_minus_patch":
            outer, exc = bounds
            return Region(kind, (tuple(map(tuple, outer)), tuple(map(tuple, exc))), res)
        if kind in ("sphere_patch", "rect2d", "interval_union"):
            return Region(kind, tuple(tuple(b) for b in bounds), res)
        return Region(kind, tuple(bounds), res)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"bad region bounds {bounds!r}: {exc}") from None


def basis_from_config(cfg: Mapping) -> BasisFamily:
    if isinstance(cfg, BasisFamily):
        return cfg
    if not isinstance(cfg, Mapping):
        raise ValidationError("basis config must be an object")
    fam = _require(cfg, "family", "basis")
    if fam == "legendre_affine":
        b = legendre_affine(int(_require(cfg, "d", "basis")), cfg.get("omega", (-1.0, 1.0)))
    elif fam == "chebyshev_affine":
        b = chebyshev_affine(int(_require(cfg, "d", "basis")), cfg.get("omega", (-1.0, 1.0)))
    elif fam == "real_spherical_harmonics":
        b = real_spherical_harmonics(int(_require(cfg, "l_max", "basis")))
    elif fam == "sine2d":
        b = sine2d(int(_require(cfg, "K", "basis")), cfg.get("modes"))
    else:
        raise ValidationError(f"unknown basis family {fam!r}")
    if cfg.get("indices") is not None:
        b = b.subset(cfg["indices"])
    if int(b.d) < 1:
        raise ValidationError("basis must have at least one function")
    return b
