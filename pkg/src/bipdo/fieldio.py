"""Field files: raw little-endian (re, im) float64 pairs plus a JSON sidecar header."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .lattice import GridSpec, SampledField

FORMAT_VERSION = 1
_DTYPE = np.dtype("<f8")


class FieldFormatError(ValueError):
    pass


def header_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def write_field(path, field: SampledField, **extra) -> Path:
    path = Path(path)
    pairs = np.empty(field.values.shape + (2,), dtype=_DTYPE)
    pairs[..., 0] = field.values.real
    pairs[..., 1] = field.values.imag
    path.write_bytes(np.ascontiguousarray(pairs).tobytes(order="C"))
    header = {
        "format_version": FORMAT_VERSION,
        "axes": field.grid.to_json(),
        "axis_roles": list(field.axis_roles),
    }
    header.update(extra)
    header_path(path).write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
    return path


def read_header(path) -> dict:
    hp = header_path(path)
    try:
        header = json.loads(hp.read_text())
    except FileNotFoundError:
        raise
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FieldFormatError(f"{hp}: malformed header ({exc})") from exc
    if header.get("format_version") != FORMAT_VERSION:
        raise FieldFormatError(f"{hp}: unsupported format_version {header.get('format_version')!r}")
    try:
        header["grid"] = GridSpec.from_pairs((ax["L"], ax["N"]) for ax in header["axes"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FieldFormatError(f"{hp}: bad axes entry ({exc})") from exc
    return header


def read_field(path) -> tuple[SampledField, dict]:
    path = Path(path)
    header = read_header(path)
    grid = header["grid"]
    raw = np.frombuffer(path.read_bytes(), dtype=_DTYPE)
    if raw.size != 2 * grid.size:
        raise FieldFormatError(f"{path}: expected {2 * grid.size} float64 values, found {raw.size}")
    pairs = raw.reshape(grid.shape + (2,))
    values = pairs[..., 0] + 1j * pairs[..., 1]
    roles = tuple(header.get("axis_roles") or ())
    try:
        field = SampledField(grid, values, roles)
    except ValueError as exc:
        raise FieldFormatError(f"{path}: {exc}") from exc
    return field, header
