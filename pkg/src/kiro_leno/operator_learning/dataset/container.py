"""
The .leno container shared by every persisted artifact.

Layout (little-endian):
    b"LENO1" | u32 format version | u32 header length | UTF-8 JSON header | payload

The header lists the arrays (name, shape, dtype "<f8") in payload order, a
kind tag, free-form metadata and the 64-bit FNV-1a hash of the payload.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np
from loguru import logger

from kiro_leno.operator_learning.errors import ChecksumError, FormatError, TruncatedFileError, VersionMismatchError
from kiro_leno.operator_learning.hashing import fnv1a_64, format_hash

MAGIC = b"LENO1"
FORMAT_VERSION = 1
KINDS = ("basis", "traj", "dataset", "model")
DTYPE = "<f8"
_PREFIX = struct.Struct("<5sII")

HEADER_SCHEMA = {
    "type": "object",
    "required": ["kind", "version", "arrays", "meta", "hash"],
    "properties": {
        "kind": {"enum": list(KINDS)},
        "version": {"type": "integer"},
        "arrays": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "shape", "dtype"],
                "properties": {
                    "name": {"type": "string"},
                    "shape": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                    "dtype": {"const": DTYPE},
                },
            },
        },
        "meta": {"type": "object"},
        "hash": {"type": "string", "pattern": "^0x[0-9a-f]{16}$"},
    },
}


@dataclass
class Container:
    kind: str
    arrays: dict[str, np.ndarray]
    meta: dict[str, Any] = field(default_factory=dict)
    hash: str = ""


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    return value


def encode(kind: str, arrays: dict[str, np.ndarray], meta: dict[str, Any] | None = None) -> tuple[bytes, str]:
    if kind not in KINDS:
        raise FormatError(f"unknown container kind '{kind}'")
    blobs = [np.ascontiguousarray(a, dtype=DTYPE).tobytes() for a in arrays.values()]
    content_hash = format_hash(fnv1a_64(blobs))
    header = {
        "kind": kind,
        "version": FORMAT_VERSION,
        "arrays": [{"name": name, "shape": list(np.shape(a)), "dtype": DTYPE} for name, a in arrays.items()],
        "meta": _jsonable(meta or {}),
        "hash": content_hash,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    return _PREFIX.pack(MAGIC, FORMAT_VERSION, len(header_bytes)) + header_bytes + b"".join(blobs), content_hash


def decode(data: bytes) -> Container:
    if len(data) < _PREFIX.size:
        if not MAGIC.startswith(data[: len(MAGIC)]):
            raise FormatError("not a .leno container (bad magic bytes)")
        raise TruncatedFileError(f"file holds {len(data)} bytes, shorter than the {_PREFIX.size}-byte prefix")
    magic, version, header_len = _PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"not a .leno container (magic {magic!r})")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"container format version {version} is not supported (expected {FORMAT_VERSION})")
    start = _PREFIX.size + header_len
    if len(data) < start:
        raise TruncatedFileError("file ends inside the header")
    try:
        header = json.loads(data[_PREFIX.size : start].decode("utf-8"))
        jsonschema.validate(header, HEADER_SCHEMA)
    except (UnicodeDecodeError, json.JSONDecodeError, jsonschema.ValidationError) as e:
        raise FormatError(f"invalid container header: {e}") from e

    payload = memoryview(data)[start:]
    sizes = [int(np.prod(entry["shape"], dtype=np.int64)) * 8 for entry in header["arrays"]]
    if len(payload) != sum(sizes):
        raise TruncatedFileError(f"payload holds {len(payload)} bytes, header declares {sum(sizes)}")
    if format_hash(fnv1a_64([payload])) != header["hash"]:
        raise ChecksumError(f"payload hash does not match header hash {header['hash']}")

    arrays, offset = {}, 0
    for entry, size in zip(header["arrays"], sizes, strict=True):
        arrays[entry["name"]] = np.frombuffer(payload[offset : offset + size], dtype=DTYPE).reshape(entry["shape"]).copy()
        offset += size
    return Container(header["kind"], arrays, header["meta"], header["hash"])


def write_container(path: Path | str, kind: str, arrays: dict[str, np.ndarray], meta: dict | None = None) -> str:
    """Write a container and return its content hash."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data, content_hash = encode(kind, arrays, meta)
    path.write_bytes(data)
    logger.debug(f"Wrote {kind} container {path} ({len(data)} bytes, hash {content_hash})")
    return content_hash


def read_container(path: Path | str, kind: str | None = None) -> Container:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"container {path} does not exist")
    container = decode(path.read_bytes())
    if kind is not None and container.kind != kind:
        raise FormatError(f"{path} holds a '{container.kind}' container, expected '{kind}'")
    return container
