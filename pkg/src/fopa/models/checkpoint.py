"""Binary checkpoints.

Layout: ``b"FOPA1\\n"``, then records of (name_len u32, name, rank u32,
dims u32 × rank, values f64), all little-endian, then a CRC32 (u32) of every
preceding byte.  The model kind and configuration travel as a rank-1 record
named ``__meta__`` holding UTF-8 JSON bytes, one byte per value.
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path

import numpy as np

from ..config import ModelConfig
from .assessors import FopaModel, SopaModel

MAGIC = b"FOPA1\n"
META = "__meta__"


class CheckpointError(ValueError):
    pass


def encode_records(records: list[tuple[str, np.ndarray]]) -> bytes:
    parts = [MAGIC]
    for name, arr in records:
        arr = np.asarray(arr, dtype="<f8")
        nb = name.encode("utf-8")
        parts.append(struct.pack("<I", len(nb)) + nb)
        parts.append(struct.pack("<I", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(np.ascontiguousarray(arr).tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


def decode_records(data: bytes) -> list[tuple[str, np.ndarray]]:
    if not data.startswith(MAGIC):
        raise CheckpointError("bad magic; not a FOPA1 checkpoint")
    if len(data) < len(MAGIC) + 4:
        raise CheckpointError("truncated checkpoint")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(body) & 0xFFFFFFFF != crc:
        raise CheckpointError("CRC32 mismatch; checkpoint corrupted")
    pos = len(MAGIC)
    out = []
    try:
        while pos < len(body):
            (nlen,) = struct.unpack_from("<I", body, pos)
            pos += 4
            name = body[pos : pos + nlen].decode("utf-8")
            pos += nlen
            (rank,) = struct.unpack_from("<I", body, pos)
            pos += 4
            dims = struct.unpack_from(f"<{rank}I", body, pos)
            pos += 4 * rank
            count = int(np.prod(dims)) if rank else 1
            arr = np.frombuffer(body, dtype="<f8", count=count, offset=pos).reshape(dims)
            pos += 8 * count
            out.append((name, arr.astype(np.float64)))
    except (struct.error, ValueError) as e:
        raise CheckpointError(f"malformed record at byte {pos}: {e}") from None
    return out


def save_model(model, path) -> None:
    kind = "sopa" if isinstance(model, SopaModel) else "fopa"
    meta = {"kind": kind, "config": model.cfg.to_dict()}
    if kind == "fopa":
        meta["frozen_bg_encoder"] = model.frozen_bg_encoder
    blob = np.frombuffer(json.dumps(meta, sort_keys=True).encode("utf-8"), dtype=np.uint8).astype(np.float64)
    records = [(META, blob)] + list(model.state_dict().items())
    Path(path).write_bytes(encode_records(records))


def load_model(path):
    records = decode_records(Path(path).read_bytes())
    if not records or records[0][0] != META:
        raise CheckpointError("checkpoint lacks its metadata record")
    meta = json.loads(records[0][1].astype(np.uint8).tobytes().decode("utf-8"))
    cfg = ModelConfig.from_dict(meta["config"])
    rng = np.random.default_rng(0)
    model = SopaModel(cfg, rng) if meta["kind"] == "sopa" else FopaModel(cfg, rng)
    model.load_state_dict(dict(records[1:]))
    if meta["kind"] == "fopa":
        model.frozen_bg_encoder = bool(meta.get("frozen_bg_encoder", False))
    return model
