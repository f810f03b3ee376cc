"""File formats: binary IQ with JSON sidecar, CSV matrices and PGM previews."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

__all__ = ["write_iq", "read_iq", "write_matrix_csv", "read_matrix_csv", "write_pgm"]


def _sidecar(path: Path) -> Path:
    return path.with_name(path.name + ".json")


def write_iq(path, samples, *, sample_rate: float, oversample: int = 1, cp_len: int = 0,
             extra: dict | None = None) -> Path:
    """Write little-endian float32 ``I, Q`` pairs plus ``<path>.json``.

    2-D arrays are stored row-major; the sidecar records the shape.
    """
    path = Path(path)
    x = np.asarray(samples)
    iq = np.empty(x.shape + (2,), dtype="<f4")
    iq[..., 0] = x.real
    iq[..., 1] = x.imag
    path.write_bytes(iq.tobytes(order="C"))
    meta = {
        "sample_rate": float(sample_rate),
        "length": int(x.shape[-1]),
        "shape": list(x.shape),
        "oversample": int(oversample),
        "cp_len": int(cp_len),
        "dtype": "float32le_iq",
    }
    if extra:
        meta.update(extra)
    _sidecar(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path


def read_iq(path):
    """Return ``(samples, meta)`` written by :func:`write_iq`."""
    path = Path(path)
    meta = json.loads(_sidecar(path).read_text())
    raw = np.frombuffer(path.read_bytes(), dtype="<f4")
    shape = tuple(meta.get("shape", [meta["length"]]))
    if raw.size != 2 * int(np.prod(shape)):
        raise ValueError(f"{path}: {raw.size // 2} samples on disk, sidecar says {shape}")
    pairs = raw.reshape(shape + (2,))
    return (pairs[..., 0] + 1j * pairs[..., 1]).astype(np.complex64), meta


def write_matrix_csv(path, matrix, fmt: str = "%.9g") -> Path:
    path = Path(path)
    np.savetxt(path, np.asarray(matrix, dtype=float), delimiter=",", fmt=fmt)
    return path


def read_matrix_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)


def write_pgm(path, image, dynamic_range_db: float = 40.0) -> Path:
    """8-bit binary PGM of ``20 log10 |image|`` clipped to ``dynamic_range_db``."""
    path = Path(path)
    mag = np.abs(np.asarray(image, dtype=complex))
    peak = mag.max()
    if peak > 0:
        db = 20.0 * np.log10(np.maximum(mag / peak, 1e-300))
        level = np.clip((db + dynamic_range_db) / dynamic_range_db, 0.0, 1.0)
    else:
        level = np.zeros_like(mag)
    pix = np.rint(level * 255).astype(np.uint8)
    h, w = pix.shape
    path.write_bytes(f"P5\n{w} {h}\n255\n".encode("ascii") + pix.tobytes())
    return path
