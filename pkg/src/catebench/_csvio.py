"""Minimal CSV helpers shared by every module that touches disk.

All files are UTF-8, comma-separated, headered, one row per unit, `.` decimal
separator. Floats are written with Python's shortest round-trip repr, so
write-then-read reproduces every value bit-exactly; that in turn is what makes
per-file digests meaningful.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from catebench.exceptions import ValidationError


def format_value(x, kind: str) -> str:
    if kind == "int":
        return str(int(x))
    return repr(float(x))


def render_columns(header, columns, kinds) -> str:
    """Render named columns as CSV text. ``kinds[i]`` is 'int' or 'float'."""
    if not (len(header) == len(columns) == len(kinds)):
        raise ValueError("header/columns/kinds lengths differ")
    n = len(columns[0])
    for name, col in zip(header, columns):
        if len(col) != n:
            raise ValueError(f"column {name} has {len(col)} rows, expected {n}")
    cols = [
        [format_value(v, kind) for v in np.asarray(col).tolist()]
        for col, kind in zip(columns, kinds)
    ]
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in zip(*cols))
    return "\n".join(lines) + "\n"


def write_columns(path, header, columns, kinds) -> None:
    """Write named columns to ``path`` (see render_columns)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_columns(header, columns, kinds), encoding="utf-8")


def read_columns(path, expected_header=None) -> tuple[list[str], np.ndarray]:
    """Read a headered numeric CSV into (header, float64 matrix of shape n x k).

    Raises ValidationError naming the offending row/column on any defect.
    Row numbers in messages are 1-based over data rows (header excluded).
    """
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"{path}: file not found")
    text = path.read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip() != ""]
    if not lines:
        raise ValidationError(f"{path}: empty file")
    header = [h.strip() for h in lines[0].split(",")]
    if expected_header is not None and header != list(expected_header):
        raise ValidationError(
            f"{path}: header mismatch: expected {','.join(expected_header)}, got {','.join(header)}"
        )
    body = lines[1:]
    if not body:
        raise ValidationError(f"{path}: no data rows (header-only file)")
    k = len(header)
    out = np.empty((len(body), k), dtype=np.float64)
    for i, line in enumerate(body):
        parts = line.split(",")
        if len(parts) != k:
            raise ValidationError(
                f"{path}: row {i + 1} has {len(parts)} fields, expected {k}"
            )
        for j, cell in enumerate(parts):
            try:
                out[i, j] = float(cell)
            except ValueError:
                raise ValidationError(
                    f"{path}: non-numeric value {cell.strip()!r} at row {i + 1}, column {header[j]}"
                ) from None
    return header, out
