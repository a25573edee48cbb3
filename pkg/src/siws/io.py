"""File formats: map CSV, binary map dump and taper CSV."""
from __future__ import annotations

import csv
import struct

import numpy as np

__all__ = [
    "MAGIC",
    "write_map_csv",
    "read_map_csv",
    "write_map_binary",
    "read_map_binary",
    "write_tapers_csv",
    "read_tapers_csv",
]

MAGIC = b"SIWS"
_DTYPES = {1: np.dtype("<f8"), 2: np.dtype("<c16")}
_CODES = {v: k for k, v in _DTYPES.items()}


def _fmt(x) -> str:
    return repr(float(x))


def write_map_csv(values, rows, cols, path, row_label: str = "t") -> None:
    """Header ``row_label, cols...``; each line ``row value, map values...``.

    Maps must be real; complex input with a nonzero imaginary part is refused.
    """
    v = np.asarray(values)
    if np.iscomplexobj(v):
        if np.any(v.imag):
            raise ValueError("map CSV holds real values only; use the binary dump")
        v = v.real
    if v.shape != (len(rows), len(cols)):
        raise ValueError(f"map shape {v.shape} does not match axes ({len(rows)}, {len(cols)})")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([row_label] + [_fmt(c) for c in cols])
        for r, line in zip(rows, v):
            w.writerow([_fmt(r)] + [_fmt(x) for x in line])


def read_map_csv(path):
    """Returns ``(values, rows, cols)``."""
    with open(path, newline="") as fh:
        data = list(csv.reader(fh))
    cols = np.array([float(x) for x in data[0][1:]])
    body = np.array([[float(x) for x in line] for line in data[1:]])
    return body[:, 1:], body[:, 0], cols


def write_map_binary(values, path) -> None:
    """16-byte header (magic, rows, cols, dtype code) then column-major data."""
    v = np.asarray(values)
    if v.ndim != 2:
        raise ValueError("binary maps are two-dimensional")
    dt = np.dtype("<c16") if np.iscomplexobj(v) else np.dtype("<f8")
    with open(path, "wb") as fh:
        fh.write(MAGIC + struct.pack("<III", v.shape[0], v.shape[1], _CODES[dt]))
        fh.write(np.asarray(v, dtype=dt).tobytes(order="F"))


def read_map_binary(path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(16)
        if len(head) != 16 or head[:4] != MAGIC:
            raise ValueError(f"{path}: not a binary map file")
        rows, cols, code = struct.unpack("<III", head[4:])
        if code not in _DTYPES:
            raise ValueError(f"{path}: unknown dtype code {code}")
        dt = _DTYPES[code]
        raw = fh.read()
    if len(raw) != rows * cols * dt.itemsize:
        raise ValueError(f"{path}: truncated map data")
    return np.frombuffer(raw, dtype=dt).reshape((rows, cols), order="F").copy()


def write_tapers_csv(tapers, path) -> None:
    """Rows ``k, lambda_k, part`` then the window samples on the ratio grid.

    Each window takes two rows, ``part = re`` and ``part = im``.
    """
    u = tapers.ratio_grid.u
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "lambda", "part"] + [_fmt(x) for x in u])
        for k, (win, lam) in enumerate(zip(tapers.windows, tapers.weights), start=1):
            w.writerow([k, _fmt(lam), "re"] + [_fmt(x) for x in win.real])
            w.writerow([k, _fmt(lam), "im"] + [_fmt(x) for x in win.imag])


def read_tapers_csv(path):
    """Returns ``(windows, weights, u)``."""
    with open(path, newline="") as fh:
        data = list(csv.reader(fh))
    u = np.array([float(x) for x in data[0][3:]])
    rows = data[1:]
    if len(rows) % 2:
        raise ValueError(f"{path}: expected re/im row pairs")
    wins, lams = [], []
    for re_row, im_row in zip(rows[::2], rows[1::2]):
        if re_row[2] != "re" or im_row[2] != "im":
            raise ValueError(f"{path}: malformed taper rows")
        wins.append(np.array([float(x) for x in re_row[3:]])
                    + 1j * np.array([float(x) for x in im_row[3:]]))
        lams.append(float(re_row[1]))
    return np.array(wins), np.array(lams), u
