"""Flat dumps of grid-sampled matrix fields (binary and CSV).

Binary layout: magic b"PARH", version u32, then n1 n2 r as u32, then the
entries as little-endian float64 pairs (re, im), node-major with row-major
matrices.  The CSV variant has one documented header line and rows
``i,j,a,b,re,im``.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import SchemaError

_MAGIC = b"PARH"
_VERSION = 1


def dump_field_binary(field: np.ndarray, path: str | Path) -> None:
    F = np.ascontiguousarray(field, dtype=complex)
    if F.ndim != 4 or F.shape[-1] != F.shape[-2]:
        raise SchemaError("field must have shape (n1, n2, r, r)", "field")
    n1, n2, r, _ = F.shape
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IIII", _VERSION, n1, n2, r))
        inter = np.empty(F.size * 2, dtype="<f8")
        inter[0::2] = F.real.ravel()
        inter[1::2] = F.imag.ravel()
        fh.write(inter.tobytes())


def load_field_binary(path: str | Path) -> np.ndarray:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise SchemaError("not a parh field dump", "magic")
        version, n1, n2, r = struct.unpack("<IIII", fh.read(16))
        if version != _VERSION:
            raise SchemaError(f"unsupported dump version {version}", "version")
        raw = np.frombuffer(fh.read(), dtype="<f8")
    if raw.size != 2 * n1 * n2 * r * r:
        raise SchemaError("truncated field dump", "payload")
    return (raw[0::2] + 1j * raw[1::2]).reshape(n1, n2, r, r)


def dump_field_csv(field: np.ndarray, path: str | Path) -> None:
    F = np.ascontiguousarray(field, dtype=complex)
    if F.ndim != 4 or F.shape[-1] != F.shape[-2]:
        raise SchemaError("field must have shape (n1, n2, r, r)", "field")
    n1, n2, r, _ = F.shape
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# parh-field v{_VERSION} n1={n1} n2={n2} r={r} "
                 "layout=node-major,row-major columns=i,j,a,b,re,im\n")
        for i in range(n1):
            for j in range(n2):
                for a in range(r):
                    for b in range(r):
                        v = F[i, j, a, b]
                        fh.write(f"{i},{j},{a},{b},{v.real:.17g},{v.imag:.17g}\n")


def load_field_csv(path: str | Path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("# parh-field"):
            raise SchemaError("not a parh CSV field dump", "header")
        meta = dict(
            kv.split("=") for kv in header.split() if "=" in kv and not kv.startswith("layout")
            and not kv.startswith("columns")
        )
        n1, n2, r = int(meta["n1"]), int(meta["n2"]), int(meta["r"])
        out = np.zeros((n1, n2, r, r), dtype=complex)
        for line in fh:
            i, j, a, b, re, im = line.strip().split(",")
            out[int(i), int(j), int(a), int(b)] = float(re) + 1j * float(im)
    return out
