"""Binary model checkpoints.

Layout:

    magic "KGEC" | version u32 | metadata length u32 | metadata JSON (UTF-8)
    | array count u32 | arrays | payload CRC-32 u32

each array being: name length u16, name UTF-8, ndim u8, dims u32 each, then
raw little-endian float32 data. The CRC covers every byte of the array
section, so a corrupted payload byte is always detected. Integers are
little-endian. Parameters are stored as float32; that is also the canonical
in-memory dtype, making save -> load an exact bitwise roundtrip.
"""

from __future__ import annotations

import io
import json
import os
import struct
import tempfile
import zlib
from dataclasses import asdict, dataclass

import numpy as np

from .errors import (
    BadMagicError,
    ChecksumError,
    ShapeMismatchError,
    TruncatedPayloadError,
    VersionError,
)
from .models import EnergyConfig, ModelParams, model_kind, param_arrays, params_from_arrays

MAGIC = b"KGEC"
FORMAT_VERSION = 1


@dataclass
class CheckpointMetadata:
    model: str
    n_entities: int
    n_relations: int
    dim_e: int
    dim_r: int
    n_bases: int
    norm: str
    normalize_projections: bool
    vocab_hash: str
    train_config: dict
    epoch: int

    def energy_config(self) -> EnergyConfig:
        return EnergyConfig(
            dim_e=self.dim_e,
            dim_r=self.dim_r,
            norm=self.norm,
            n_bases=self.n_bases,
            normalize_projections=self.normalize_projections,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "CheckpointMetadata":
        return cls(**data)


def _expected_shapes(meta: CheckpointMetadata) -> dict[str, tuple[int, ...]]:
    n_e, n_r = meta.n_entities, meta.n_relations
    d_e, d_r, s = meta.dim_e, meta.dim_r, meta.n_bases
    shapes = {"ent": (n_e, d_e), "rel": (n_r, d_r)}
    if meta.model == "transh":
        shapes["normals"] = (n_r, d_e)
    elif meta.model == "transr":
        shapes["proj"] = (n_r, d_r, d_e)
    elif meta.model == "transf":
        shapes["head_bases"] = (s, d_r, d_e)
        shapes["tail_bases"] = (s, d_r, d_e)
        shapes["head_coef"] = (n_r, s)
        shapes["tail_coef"] = (n_r, s)
    return shapes


def save_checkpoint(params: ModelParams, metadata: CheckpointMetadata, path) -> None:
    """Write params + metadata atomically (temp file then rename)."""
    if metadata.model != model_kind(params):
        raise ShapeMismatchError(
            f"metadata says model {metadata.model!r}, params are {model_kind(params)!r}"
        )
    meta_bytes = json.dumps(metadata.to_dict(), sort_keys=False).encode("utf-8")
    arrays = param_arrays(params)

    payload = io.BytesIO()
    payload.write(struct.pack("<I", len(arrays)))
    for name, array in arrays.items():
        data = np.ascontiguousarray(array, dtype="<f4")
        name_bytes = name.encode("utf-8")
        payload.write(struct.pack("<H", len(name_bytes)))
        payload.write(name_bytes)
        payload.write(struct.pack("<B", data.ndim))
        payload.write(struct.pack(f"<{data.ndim}I", *data.shape))
        payload.write(data.tobytes())
    payload_bytes = payload.getvalue()

    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp_path = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(MAGIC)
            handle.write(struct.pack("<I", FORMAT_VERSION))
            handle.write(struct.pack("<I", len(meta_bytes)))
            handle.write(meta_bytes)
            handle.write(payload_bytes)
            handle.write(struct.pack("<I", zlib.crc32(payload_bytes)))
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


class _Reader:
    def __init__(self, data: bytes, offset: int = 0):
        self.data = data
        self.offset = offset

    def take(self, n: int) -> bytes:
        if self.offset + n > len(self.data):
            raise TruncatedPayloadError(
                f"checkpoint ends at byte {len(self.data)}, needed {self.offset + n}"
            )
        chunk = self.data[self.offset : self.offset + n]
        self.offset += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_checkpoint(path) -> tuple[ModelParams, CheckpointMetadata]:
    """Read a checkpoint; raises a distinct error per failure mode
    (magic, version, truncation, checksum, shape)."""
    with open(path, "rb") as handle:
        blob = handle.read()
    reader = _Reader(blob)
    if reader.take(4) != MAGIC:
        raise BadMagicError(f"{path} is not a model checkpoint (bad magic)")
    (version,) = reader.unpack("<I")
    if version != FORMAT_VERSION:
        raise VersionError(f"unsupported checkpoint version {version} (expected {FORMAT_VERSION})")
    (meta_len,) = reader.unpack("<I")
    try:
        metadata = CheckpointMetadata.from_dict(json.loads(reader.take(meta_len)))
    except (ValueError, TypeError) as exc:
        raise ShapeMismatchError(f"unreadable checkpoint metadata: {exc}") from exc

    payload_start = reader.offset
    if len(blob) < payload_start + 4:
        raise TruncatedPayloadError("checkpoint has no payload")
    payload_bytes = blob[payload_start : len(blob) - 4]
    (stored_crc,) = struct.unpack("<I", blob[-4:])
    if zlib.crc32(payload_bytes) != stored_crc:
        raise ChecksumError("checkpoint payload CRC mismatch (corrupted file)")

    reader = _Reader(payload_bytes)
    (n_arrays,) = reader.unpack("<I")
    expected = _expected_shapes(metadata)
    if n_arrays != len(expected):
        raise ShapeMismatchError(
            f"checkpoint holds {n_arrays} arrays, model {metadata.model!r} needs {len(expected)}"
        )
    arrays: dict[str, np.ndarray] = {}
    for _ in range(n_arrays):
        (name_len,) = reader.unpack("<H")
        name = reader.take(name_len).decode("utf-8")
        (ndim,) = reader.unpack("<B")
        shape = reader.unpack(f"<{ndim}I")
        count = int(np.prod(shape, dtype=np.int64)) if ndim else 1
        data = np.frombuffer(reader.take(count * 4), dtype="<f4").reshape(shape)
        if name not in expected:
            raise ShapeMismatchError(f"unexpected array {name!r} for model {metadata.model!r}")
        if tuple(shape) != expected[name]:
            raise ShapeMismatchError(
                f"array {name!r} has shape {tuple(shape)}, metadata implies {expected[name]}"
            )
        arrays[name] = np.array(data, dtype=np.float32)  # own, writable copy
    if reader.offset != len(payload_bytes):
        raise ShapeMismatchError("trailing bytes after declared arrays")
    missing = [name for name in expected if name not in arrays]
    if missing:
        raise ShapeMismatchError(f"checkpoint is missing arrays {missing}")
    ordered = {name: arrays[name] for name in expected}
    return params_from_arrays(metadata.model, ordered), metadata
