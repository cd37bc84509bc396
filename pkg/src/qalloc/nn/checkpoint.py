"""Versioned binary checkpoints for a ParameterStore.

Layout: magic, format version, a JSON header (model config, step count,
tensor names and shapes), the raw little-endian float64 tensor payloads
(parameter, then both Adam moments, per tensor), and a trailing SHA-256
over everything before it.  Round-trips are bit-exact.
"""

from __future__ import annotations

import hashlib
import json
import struct

import numpy as np

from .layers import ParameterStore

__all__ = ["CheckpointError", "save_checkpoint", "load_checkpoint", "FORMAT_VERSION"]

_MAGIC = b"QALC"
FORMAT_VERSION = 1
_DIGEST_BYTES = 32


class CheckpointError(RuntimeError):
    """Raised for unreadable, corrupt, or incompatible checkpoint files."""


def save_checkpoint(store: ParameterStore, config: dict, path) -> None:
    header = {
        "config": config,
        "step_count": store.step_count,
        "tensors": [
            {"name": name, "shape": list(tensor.shape)} for name, tensor in store.items()
        ],
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    blob = bytearray()
    blob += _MAGIC
    blob += struct.pack("<I", FORMAT_VERSION)
    blob += struct.pack("<Q", len(header_bytes))
    blob += header_bytes
    for name, tensor in store.items():
        blob += tensor.data.astype("<f8").tobytes()
        blob += store.moment1[name].astype("<f8").tobytes()
        blob += store.moment2[name].astype("<f8").tobytes()
    blob += hashlib.sha256(bytes(blob)).digest()
    with open(path, "wb") as fh:
        fh.write(bytes(blob))


def load_checkpoint(path) -> tuple[ParameterStore, dict]:
    """Rebuild a ParameterStore and its config header from a checkpoint file."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(_MAGIC) + 4 + 8 + _DIGEST_BYTES:
        raise CheckpointError("truncated checkpoint: shorter than any valid file")
    if blob[: len(_MAGIC)] != _MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    digest = blob[-_DIGEST_BYTES:]
    body = blob[:-_DIGEST_BYTES]
    if hashlib.sha256(body).digest() != digest:
        raise CheckpointError("checksum mismatch: checkpoint is corrupt")
    offset = len(_MAGIC)
    (version,) = struct.unpack_from("<I", body, offset)
    offset += 4
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint version {version} (expected {FORMAT_VERSION})"
        )
    (header_len,) = struct.unpack_from("<Q", body, offset)
    offset += 8
    if offset + header_len > len(body):
        raise CheckpointError("truncated checkpoint: header extends past end of file")
    try:
        header = json.loads(body[offset : offset + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"unreadable checkpoint header: {exc}") from exc
    offset += header_len
    store = ParameterStore()
    store.step_count = int(header["step_count"])
    for entry in header["tensors"]:
        shape = tuple(int(s) for s in entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        span = count * 8
        if offset + 3 * span > len(body):
            raise CheckpointError("truncated checkpoint: tensor payload missing")
        data = np.frombuffer(body, dtype="<f8", count=count, offset=offset).reshape(shape)
        offset += span
        m1 = np.frombuffer(body, dtype="<f8", count=count, offset=offset).reshape(shape)
        offset += span
        m2 = np.frombuffer(body, dtype="<f8", count=count, offset=offset).reshape(shape)
        offset += span
        store.create(entry["name"], data.copy())
        store.moment1[entry["name"]] = m1.astype(np.float64).copy()
        store.moment2[entry["name"]] = m2.astype(np.float64).copy()
    if offset != len(body):
        raise CheckpointError("checkpoint has trailing bytes after tensor payload")
    return store, header.get("config", {})
