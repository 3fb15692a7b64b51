"""Binary checkpoint files for named tensors.

Layout, all little-endian:
    magic "RCCP" | u32 format version | u32 parameter count
    per parameter: u16 name length | name utf-8 | u8 rank | u32 * rank dims
                   | float32 payload (row major)
    trailing u32 CRC32 of everything before it

Loading verifies magic, version, structure and checksum. Values are stored
at 32-bit precision, so save -> load -> save is byte identical even though
in-memory math runs at 64 bits.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

MAGIC = b"RCCP"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


class VersionMismatch(CheckpointError):
    pass


class CorruptFile(CheckpointError):
    pass


def save_tensors(arrays: dict[str, np.ndarray], path: str | Path) -> None:
    chunks = [MAGIC, struct.pack("<II", FORMAT_VERSION, len(arrays))]
    for name, arr in arrays.items():
        blob = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        encoded = name.encode("utf-8")
        if len(encoded) > 0xFFFF:
            raise CheckpointError(f"parameter name too long: {name!r}")
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<B", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(blob)
    body = b"".join(chunks)
    payload = body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)
    Path(path).write_bytes(payload)


def load_tensors(path: str | Path) -> dict[str, np.ndarray]:
    raw = Path(path).read_bytes()
    if len(raw) < len(MAGIC) + 12:
        raise CorruptFile(f"{path}: file too short")
    body, (stored_crc,) = raw[:-4], struct.unpack("<I", raw[-4:])
    if zlib.crc32(body) & 0xFFFFFFFF != stored_crc:
        raise CorruptFile(f"{path}: checksum mismatch")
    if body[:4] != MAGIC:
        raise CorruptFile(f"{path}: bad magic")
    version, count = struct.unpack_from("<II", body, 4)
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"{path}: format version {version}, expected {FORMAT_VERSION}")
    offset = 12
    out: dict[str, np.ndarray] = {}
    try:
        for _ in range(count):
            (name_len,) = struct.unpack_from("<H", body, offset)
            offset += 2
            name = body[offset : offset + name_len].decode("utf-8")
            offset += name_len
            (rank,) = struct.unpack_from("<B", body, offset)
            offset += 1
            dims = struct.unpack_from(f"<{rank}I", body, offset)
            offset += 4 * rank
            n = int(np.prod(dims, dtype=np.int64)) if rank else 1
            payload = body[offset : offset + 4 * n]
            if len(payload) != 4 * n:
                raise CorruptFile(f"{path}: truncated tensor payload for {name!r}")
            offset += 4 * n
            arr = np.frombuffer(payload, dtype="<f4").reshape(dims).astype(np.float64)
            if name in out:
                raise CorruptFile(f"{path}: duplicate tensor name {name!r}")
            out[name] = arr
    except struct.error as exc:
        raise CorruptFile(f"{path}: truncated header ({exc})") from exc
    if offset != len(body):
        raise CorruptFile(f"{path}: {len(body) - offset} trailing bytes")
    return out
