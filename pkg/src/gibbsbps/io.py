"""On-disk formats: raw float64 arrays with a text sidecar, and 16-bit PGM previews.

An array ``name.f64`` is little-endian float64 in row-major order; ``name.meta``
holds one line ``<width> <height>`` (for a sinogram: ``<n_angles> <n_detectors>``,
i.e. the number of rows first). Images are written ``<d> <d>``.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .errors import DataFormatError, ShapeError

PGM_MAXVAL = 65535


def _stem(path) -> Path:
    path = Path(path)
    return path.with_suffix("") if path.suffix in (".f64", ".meta", ".pgm") else path


def write_f64(path, array: np.ndarray, header: tuple[int, int] | None = None) -> Path:
    """Write ``array`` as ``<stem>.f64`` plus ``<stem>.meta``; returns the .f64 path.

    ``header`` overrides the two integers in the sidecar; by default it is the
    array shape for 2-D arrays.
    """
    arr = np.asarray(array, dtype="<f8")
    if header is None:
        if arr.ndim != 2:
            raise ShapeError(f"need a 2-D array or an explicit header, got shape {arr.shape}")
        # rows first; images are square so this is also "<width> <height>"
        header = arr.shape
    a, b = (int(h) for h in header)
    if a * b != arr.size:
        raise ShapeError(f"header {a} {b} does not match {arr.size} values")
    stem = _stem(path)
    stem.parent.mkdir(parents=True, exist_ok=True)
    data_path = stem.with_suffix(".f64")
    data_path.write_bytes(np.ascontiguousarray(arr).tobytes(order="C"))
    stem.with_suffix(".meta").write_text(f"{a} {b}\n")
    return data_path


def read_meta(path) -> tuple[int, int]:
    meta = _stem(path).with_suffix(".meta")
    fields = meta.read_text().split()
    try:
        a, b = (int(f) for f in fields)
    except ValueError as exc:
        raise DataFormatError(f"{meta}: expected two integers, got {' '.join(fields)!r}") from exc
    if a < 1 or b < 1:
        raise DataFormatError(f"{meta}: dimensions must be positive, got {a} {b}")
    return a, b


def read_f64(path) -> np.ndarray:
    """Read a ``.f64``/``.meta`` pair as a 2-D array of shape ``(first, second)``."""
    stem = _stem(path)
    a, b = read_meta(stem)
    raw = stem.with_suffix(".f64").read_bytes()
    if len(raw) % 8:
        raise DataFormatError(f"{stem.with_suffix('.f64')}: size {len(raw)} is not a multiple of 8 bytes")
    values = np.frombuffer(raw, dtype="<f8")
    if values.size != a * b:
        raise DataFormatError(f"{stem.with_suffix('.f64')}: {values.size} values but header says {a}x{b}")
    return values.reshape(a, b).astype(float)


def write_pgm(path, image: np.ndarray) -> Path:
    """16-bit binary PGM, min-max scaled to the full range; constant images map to 0."""
    img = np.asarray(image, dtype=float)
    if img.ndim != 2:
        raise ShapeError(f"PGM needs a 2-D image, got shape {img.shape}")
    lo, hi = float(img.min()), float(img.max())
    scaled = np.zeros(img.shape) if hi <= lo else (img - lo) / (hi - lo)
    pixels = np.rint(scaled * PGM_MAXVAL).astype(">u2")
    out = _stem(path).with_suffix(".pgm")
    out.parent.mkdir(parents=True, exist_ok=True)
    height, width = img.shape
    with open(out, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n{PGM_MAXVAL}\n".encode("ascii"))
        fh.write(pixels.tobytes())
    return out


def read_pgm(path) -> np.ndarray:
    """Read a 16-bit P5 file written by :func:`write_pgm` as integer levels."""
    raw = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while raw[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while not raw[pos:pos + 1].isspace():
            pos += 1
        tokens.append(raw[start:pos].decode("ascii"))
    if tokens[0] != "P5":
        raise DataFormatError(f"{path}: not a binary PGM")
    width, height, maxval = (int(t) for t in tokens[1:])
    dtype = ">u2" if maxval > 255 else "u1"
    return np.frombuffer(raw[pos + 1:], dtype=dtype, count=width * height).reshape(height, width)


def write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def ensure_dir(path) -> Path:
    path = Path(path)
    os.makedirs(path, exist_ok=True)
    return path
