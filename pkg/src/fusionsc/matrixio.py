"""File formats for matrices, masks, labels, tables, and manifests.

Matrices are CSV with rows as ambient coordinates and columns as data
points; a missing entry is an empty field or the literal NaN.  Masks
are CSV of 0/1 in the same layout.  Labels are one integer per line.
Sweep tables are tab-separated with a header row.  Manifests are JSON.
Floats are written with repr-level precision, so every write/read pair
round-trips bitwise.
"""

import csv
import json

import numpy as np

from .data import MaskedMatrix
from .errors import ParseError, ShapeMismatch

__all__ = [
    "read_matrix",
    "write_matrix",
    "read_mask",
    "write_mask",
    "read_labels",
    "write_labels",
    "write_table",
    "read_manifest",
    "write_manifest",
]


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _read_rows(path) -> list:
    try:
        with open(path, newline="") as handle:
            rows = [row for row in csv.reader(handle) if row]
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror or exc}") from None
    if not rows:
        raise ParseError(f"{path}: file contains no rows")
    width = len(rows[0])
    for t, row in enumerate(rows):
        if len(row) != width:
            raise ParseError(
                f"{path}: row {t} has {len(row)} fields, expected {width}")
    return rows


def read_matrix(path, mask_path=None) -> MaskedMatrix:
    """Load a matrix CSV; empty fields and NaN literals are unobserved.

    A sidecar mask file overrides the inline missing markers entirely:
    entries flagged 0 there are treated as unobserved even if the value
    file holds a number.
    """
    rows = _read_rows(path)
    d, n = len(rows), len(rows[0])
    values = np.zeros((d, n))
    mask = np.ones((d, n), dtype=bool)
    for i, row in enumerate(rows):
        for j, tok in enumerate(row):
            tok = tok.strip()
            if not tok or tok.lower() == "nan":
                mask[i, j] = False
                continue
            try:
                values[i, j] = float(tok)
            except ValueError:
                raise ParseError(
                    f"{path}: row {i}, column {j}: not a number: {tok!r}"
                ) from None
    if mask_path is not None:
        mask = read_mask(mask_path)
        if mask.shape != values.shape:
            raise ShapeMismatch(
                f"mask shape {mask.shape} does not match matrix shape {values.shape}")
    try:
        return MaskedMatrix(values, mask)
    except ShapeMismatch as exc:
        raise ParseError(f"{path}: {exc}") from None


def write_matrix(path, values, mask=None) -> None:
    """Write a matrix CSV; entries where mask is False become empty fields."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise ShapeMismatch(f"expected a 2-D matrix, got shape {values.shape}")
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != values.shape:
            raise ShapeMismatch(
                f"mask shape {mask.shape} does not match matrix shape {values.shape}")
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        for i in range(values.shape[0]):
            if mask is None:
                writer.writerow([_fmt(v) for v in values[i]])
            else:
                writer.writerow([_fmt(v) if m else ""
                                 for v, m in zip(values[i], mask[i])])


def read_mask(path) -> np.ndarray:
    """Load a 0/1 CSV as a boolean mask."""
    rows = _read_rows(path)
    out = np.zeros((len(rows), len(rows[0])), dtype=bool)
    for i, row in enumerate(rows):
        for j, tok in enumerate(row):
            tok = tok.strip()
            if tok == "1":
                out[i, j] = True
            elif tok != "0":
                raise ParseError(
                    f"{path}: row {i}, column {j}: mask entries must be 0 or 1, "
                    f"got {tok!r}")
    return out


def write_mask(path, mask) -> None:
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise ShapeMismatch(f"expected a 2-D mask, got shape {mask.shape}")
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        for row in mask.astype(int):
            writer.writerow(row.tolist())


def read_labels(path) -> np.ndarray:
    """Load labels: one integer per line, blank lines ignored."""
    try:
        with open(path) as handle:
            lines = [ln.strip() for ln in handle]
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror or exc}") from None
    out = []
    for t, ln in enumerate(lines):
        if not ln:
            continue
        try:
            out.append(int(ln))
        except ValueError:
            raise ParseError(f"{path}: line {t + 1}: not an integer: {ln!r}") from None
    if not out:
        raise ParseError(f"{path}: no labels found")
    return np.asarray(out, dtype=np.int64)


def write_labels(path, labels) -> None:
    labels = np.asarray(labels)
    with open(path, "w") as handle:
        for value in labels.ravel():
            handle.write(f"{int(value)}\n")


def write_table(path, header, rows) -> None:
    """Write a tab-separated table with a header row.

    Cells may be strings, integers, booleans (written as 0/1), or
    floats (written with round-trip precision).
    """
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, delimiter="\t", lineterminator="\n")
        writer.writerow(list(header))
        for row in rows:
            out = []
            for cell in row:
                if isinstance(cell, str):
                    out.append(cell)
                elif isinstance(cell, (bool, np.bool_)):
                    out.append(str(int(cell)))
                elif isinstance(cell, (int, np.integer)):
                    out.append(str(int(cell)))
                else:
                    out.append(_fmt(cell))
            writer.writerow(out)


def write_manifest(path, payload: dict) -> None:
    """Write a manifest JSON with stable key order and a trailing newline."""
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def read_manifest(path) -> dict:
    try:
        with open(path) as handle:
            return json.load(handle)
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from None
