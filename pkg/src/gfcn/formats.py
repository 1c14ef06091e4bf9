"""On-disk formats shared by the dataset loader, the CLI, and checkpoints.

A matrix block is: 8-byte magic ``GFCNFEAT``, then rows and cols as u32
little-endian, then rows*cols float32 little-endian values in row-major
order. `features.bin` is a single block; a parameter checkpoint is one JSON
header line followed by one block per weight matrix.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"GFCNFEAT"


class DatasetError(Exception):
    """Base for everything wrong with on-disk dataset artifacts."""


class MissingDatasetFile(DatasetError):
    pass


class BadMagic(DatasetError):
    pass


class CountMismatch(DatasetError):
    pass


def write_matrix_block(fh, matrix: np.ndarray) -> None:
    m = np.ascontiguousarray(matrix, dtype="<f4")
    if m.ndim != 2:
        raise ValueError("matrix blocks are 2-D")
    rows, cols = m.shape
    fh.write(MAGIC)
    fh.write(struct.pack("<II", rows, cols))
    fh.write(m.tobytes(order="C"))


def read_matrix_block(fh, what: str = "matrix block") -> np.ndarray:
    magic = fh.read(len(MAGIC))
    if len(magic) < len(MAGIC):
        raise CountMismatch(f"{what}: truncated before magic")
    if magic != MAGIC:
        raise BadMagic(f"{what}: bad magic {magic!r}, expected {MAGIC!r}")
    header = fh.read(8)
    if len(header) < 8:
        raise CountMismatch(f"{what}: truncated header")
    rows, cols = struct.unpack("<II", header)
    want = 4 * rows * cols
    payload = fh.read(want)
    if len(payload) != want:
        raise CountMismatch(
            f"{what}: expected {want} payload bytes for {rows}x{cols}, got {len(payload)}"
        )
    return (
        np.frombuffer(payload, dtype="<f4").reshape(rows, cols).astype(np.float64)
    )


def write_features(path, matrix: np.ndarray) -> None:
    with open(path, "wb") as fh:
        write_matrix_block(fh, matrix)


def read_features(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise MissingDatasetFile(f"missing features file {path}")
    with open(path, "rb") as fh:
        matrix = read_matrix_block(fh, what=str(path))
        trailing = fh.read(1)
    if trailing:
        raise CountMismatch(f"{path}: trailing bytes after the matrix block")
    return matrix


def save_checkpoint(path, params, seed: int) -> None:
    """JSON header line, then theta / theta_skip blocks in layer order."""
    header = {
        "dims": [int(d) for d in params.dims],
        "layer_count": params.num_layers,
        "seed": int(seed),
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("ascii") + b"\n")
        for layer in params.layers:
            write_matrix_block(fh, layer.theta)
            write_matrix_block(fh, layer.theta_skip)


def load_checkpoint(path):
    """Returns (params, header dict). Weights round-trip at float32."""
    from .model import GfcnLayer, GfcnParams

    path = Path(path)
    if not path.is_file():
        raise MissingDatasetFile(f"missing checkpoint {path}")
    with open(path, "rb") as fh:
        line = fh.readline()
        try:
            header = json.loads(line)
        except json.JSONDecodeError as e:
            raise BadMagic(f"{path}: checkpoint header is not JSON: {e}") from e
        for key in ("dims", "layer_count", "seed"):
            if key not in header:
                raise CountMismatch(f"{path}: checkpoint header lacks {key!r}")
        layers = []
        for l in range(int(header["layer_count"])):
            theta = read_matrix_block(fh, what=f"{path} theta[{l}]")
            theta_skip = read_matrix_block(fh, what=f"{path} theta_skip[{l}]")
            layers.append(GfcnLayer(theta, theta_skip))
        trailing = fh.read(1)
    if trailing:
        raise CountMismatch(f"{path}: trailing bytes after the last block")
    params = GfcnParams(layers, [int(d) for d in header["dims"]])
    return params, header
