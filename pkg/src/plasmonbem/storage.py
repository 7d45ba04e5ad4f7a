"""Binary matrix dumps, deterministic CSV writing, content hashing."""

import hashlib
import json
import struct

import numpy as np

MAGIC = b"NPBM"
VERSION = 1
_HEADER = struct.Struct("<4sIQQI")  # magic, version, rows, cols, element size


def save_matrix(path, mat):
    """Row-major float64 dump with a fixed little-endian header."""
    mat = np.ascontiguousarray(np.asarray(mat, dtype="<f8"))
    if mat.ndim == 1:
        mat = mat[None, :]
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, mat.shape[0], mat.shape[1], 8))
        fh.write(mat.tobytes(order="C"))


def load_matrix(path):
    with open(path, "rb") as fh:
        magic, version, rows, cols, size = _HEADER.unpack(fh.read(_HEADER.size))
        if magic != MAGIC or version != VERSION or size != 8:
            raise ValueError(f"{path}: not a matrix dump (or unsupported version)")
        data = np.frombuffer(fh.read(rows * cols * 8), dtype="<f8")
    if data.size != rows * cols:
        raise ValueError(f"{path}: truncated matrix dump")
    return data.reshape(rows, cols).copy()


def fmt(value):
    """Shortest round-trip decimal form; '.' separator, no locale."""
    return f"{value:.17g}"


def write_csv(path, header, rows):
    """Deterministic CSV: header row, LF endings, %.17g floats."""
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) if isinstance(v, float) else str(v) for v in row))
            fh.write("\n")


def sha256_file(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def canonical_json(obj):
    """Stable JSON encoding used for cache keys and manifests."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def content_key(obj):
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()[:16]
