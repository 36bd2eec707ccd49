"""Kernel-bank files, slice images and CSV dumps.

Bank file layout (all little-endian)::

    magic   4 bytes  b"WMCG"
    version u16      1
    c_out   u32
    c_in    u32
    k       u32
    flags   u32      bit 0: normalized bases, bit 1: Haar coefficient applied
    payload c_out * c_in * k**3 float64, row-major (c_o, c_i, z, y, x)
"""

from __future__ import annotations

import struct

import numpy as np

from .conv import KernelBank
from .errors import InvalidArgument

__all__ = [
    "MAGIC",
    "VERSION",
    "encode_bank",
    "decode_bank",
    "write_bank",
    "read_bank",
    "central_slices",
    "encode_pgm",
    "decode_pgm",
    "dump_slices",
]

MAGIC = b"WMCG"
VERSION = 1
_HEADER = struct.Struct("<4sHIIII")
_FLAG_NORMALIZED = 1
_FLAG_HAAR = 2


def encode_bank(bank: KernelBank) -> bytes:
    c_out, c_in, k = bank.shape[:3]
    flags = (_FLAG_NORMALIZED if bank.normalized else 0) | (_FLAG_HAAR if bank.haar_applied else 0)
    header = _HEADER.pack(MAGIC, VERSION, c_out, c_in, k, flags)
    return header + np.ascontiguousarray(bank.values, dtype="<f8").tobytes()


def decode_bank(data: bytes) -> KernelBank:
    if len(data) < _HEADER.size:
        raise InvalidArgument(f"bank file too short for header ({len(data)} bytes)")
    magic, version, c_out, c_in, k, flags = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise InvalidArgument(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise InvalidArgument(f"unsupported bank version {version}")
    if flags & ~(_FLAG_NORMALIZED | _FLAG_HAAR):
        raise InvalidArgument(f"unknown flag bits 0x{flags:x}")
    if min(c_out, c_in, k) < 1:
        raise InvalidArgument(f"bank dims must be positive, got {(c_out, c_in, k)}")
    expected = c_out * c_in * k ** 3 * 8
    payload = data[_HEADER.size:]
    if len(payload) != expected:
        raise InvalidArgument(f"payload is {len(payload)} bytes, header dims need {expected}")
    values = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(c_out, c_in, k, k, k)
    return KernelBank(values, bool(flags & _FLAG_NORMALIZED), bool(flags & _FLAG_HAAR))


def write_bank(path, bank: KernelBank):
    with open(path, "wb") as fh:
        fh.write(encode_bank(bank))


def read_bank(path) -> KernelBank:
    with open(path, "rb") as fh:
        return decode_bank(fh.read())


def central_slices(kernel) -> dict:
    """Central cross-sections of a ``(k, k, k)`` kernel indexed ``[z, y, x]``.

    ``"x"`` is the plane perpendicular to the x axis (a ``(z, y)`` image),
    and likewise for ``"y"`` (``(z, x)``) and ``"z"`` (``(y, x)``).
    """
    K = np.asarray(kernel, dtype=np.float64)
    c = K.shape[0] // 2
    return {"x": K[:, :, c], "y": K[:, c, :], "z": K[c, :, :]}


def encode_pgm(image, lo, hi) -> bytes:
    """Binary 8-bit PGM with ``lo -> 0`` and ``hi -> 255`` linearly."""
    img = np.asarray(image, dtype=np.float64)
    if hi > lo:
        scaled = np.rint((img - lo) / (hi - lo) * 255.0)
    else:
        scaled = np.zeros_like(img)
    pixels = np.clip(scaled, 0, 255).astype(np.uint8)
    h, w = pixels.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + pixels.tobytes()


def decode_pgm(data: bytes) -> np.ndarray:
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5" or len(parts) < 4:
        raise InvalidArgument("not a binary PGM image")
    w, h = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w)


def dump_slices(bank: KernelBank, c_out: int, c_in: int, prefix) -> list:
    """Write the three central slices of ``bank[c_out, c_in]`` as PGM images,
    the shared min/max scaling as a text sidecar, and every voxel as CSV.

    Returns the written paths.
    """
    co, ci = int(c_out), int(c_in)
    if not (0 <= co < bank.shape[0] and 0 <= ci < bank.shape[1]):
        raise InvalidArgument(f"channel pair ({co}, {ci}) outside bank of shape {bank.shape[:2]}")
    K = bank.values[co, ci]
    slices = central_slices(K)
    lo = float(min(s.min() for s in slices.values()))
    hi = float(max(s.max() for s in slices.values()))
    paths = []
    for axis, img in slices.items():
        path = f"{prefix}_perp{axis}.pgm"
        with open(path, "wb") as fh:
            fh.write(encode_pgm(img, lo, hi))
        paths.append(path)
    scale_path = f"{prefix}_scale.txt"
    with open(scale_path, "w", encoding="ascii") as fh:
        fh.write(f"min {lo!r}\nmax {hi!r}\n")
    paths.append(scale_path)
    csv_path = f"{prefix}.csv"
    with open(csv_path, "w", encoding="ascii") as fh:
        fh.write("z,y,x,value\n")
        for (z, y, x), v in np.ndenumerate(K):
            fh.write(f"{z},{y},{x},{float(v)!r}\n")
    paths.append(csv_path)
    return paths
