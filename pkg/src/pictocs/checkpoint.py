"""Binary checkpoint container: magic "CSCP", versioned, CRC32-guarded.

Layout (little-endian throughout):
    magic "CSCP" | u32 version | u32 doc_len | doc (UTF-8 JSON)
    | u32 tensor_count | tensors | u32 crc32-of-everything-before

Each tensor: u32 name_len | name | u32 rank | u32 dims[rank] | f32 data.
The JSON doc holds the model config, training metadata, and the vocabulary,
so a checkpoint file is self-contained for prediction and serving.
"""

from __future__ import annotations

import dataclasses
import hashlib
import io
import json
import struct
import zlib
from pathlib import Path

import numpy as np

from .model import Checkpoint, ModelConfig
from .tokenizer import Vocab

MAGIC = b"CSCP"
VERSION = 1


class CheckpointError(RuntimeError):
    """Checkpoint file is malformed, corrupt, or version-incompatible."""


def _pack_u32(value: int) -> bytes:
    return struct.pack("<I", value)


def serialize_checkpoint(ckpt: Checkpoint) -> bytes:
    doc = {
        "model": dataclasses.asdict(ckpt.config),
        "meta": ckpt.meta,
        "vocab": None
        if ckpt.vocab is None
        else {
            "tokens": ckpt.vocab.tokens,
            "role_tag_ids": list(ckpt.vocab.role_tag_ids),
            "mwe_ids": list(ckpt.vocab.mwe_ids),
        },
    }
    doc_bytes = json.dumps(doc, ensure_ascii=False, sort_keys=True).encode("utf-8")
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(_pack_u32(VERSION))
    buf.write(_pack_u32(len(doc_bytes)))
    buf.write(doc_bytes)
    names = sorted(ckpt.params)
    buf.write(_pack_u32(len(names)))
    for name in names:
        tensor = np.ascontiguousarray(ckpt.params[name], dtype="<f4")
        name_bytes = name.encode("utf-8")
        buf.write(_pack_u32(len(name_bytes)))
        buf.write(name_bytes)
        buf.write(_pack_u32(tensor.ndim))
        for dim in tensor.shape:
            buf.write(_pack_u32(dim))
        buf.write(tensor.tobytes())
    payload = buf.getvalue()
    return payload + _pack_u32(zlib.crc32(payload))


def save_checkpoint(ckpt: Checkpoint, path: str | Path) -> None:
    Path(path).write_bytes(serialize_checkpoint(ckpt))


class _Reader:
    def __init__(self, data: bytes, source: str):
        self.data = data
        self.pos = 0
        self.source = source

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CheckpointError(f"{self.source}: truncated checkpoint")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def deserialize_checkpoint(data: bytes, source: str = "<bytes>") -> Checkpoint:
    if len(data) < 12:
        raise CheckpointError(f"{source}: too short to be a checkpoint")
    payload, crc_bytes = data[:-4], data[-4:]
    if struct.unpack("<I", crc_bytes)[0] != zlib.crc32(payload):
        raise CheckpointError(f"{source}: CRC mismatch (corrupt file)")
    r = _Reader(payload, source)
    if r.take(4) != MAGIC:
        raise CheckpointError(f"{source}: bad magic (not a checkpoint file)")
    version = r.u32()
    if version != VERSION:
        raise CheckpointError(f"{source}: unsupported format version {version}")
    doc = json.loads(r.take(r.u32()).decode("utf-8"))
    config = ModelConfig(**doc["model"])
    params: dict[str, np.ndarray] = {}
    for _ in range(r.u32()):
        name = r.take(r.u32()).decode("utf-8")
        rank = r.u32()
        shape = tuple(r.u32() for _ in range(rank))
        count = int(np.prod(shape)) if shape else 1
        flat = np.frombuffer(r.take(4 * count), dtype="<f4")
        params[name] = flat.reshape(shape).copy()
    if r.pos != len(payload):
        raise CheckpointError(f"{source}: trailing bytes after tensor table")
    vocab = None
    if doc.get("vocab") is not None:
        v = doc["vocab"]
        vocab = Vocab(
            tokens=list(v["tokens"]),
            role_tag_ids=tuple(v["role_tag_ids"]),
            mwe_ids=tuple(v["mwe_ids"]),
        )
    return Checkpoint(config=config, params=params, meta=doc["meta"], vocab=vocab)


def load_checkpoint(path: str | Path) -> Checkpoint:
    return deserialize_checkpoint(Path(path).read_bytes(), source=str(path))


def fingerprint(ckpt: Checkpoint) -> str:
    """Stable identity of a checkpoint's config, metadata, and tensors."""
    return hashlib.sha256(serialize_checkpoint(ckpt)).hexdigest()[:16]
