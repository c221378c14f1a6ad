"""Named weight tensors and the MTDM binary container.

MTDM layout (little-endian)::

    b"MTDM" | u32 version=1 | u32 tensor_count
    per tensor: u16 name_len | name (utf-8) | u8 dtype | u8 rank | rank * u32 dims | payload
    u32 crc32 of every preceding byte

dtype 0 is float32. dtype 1 stores float16 (half-size files); tensors are
widened to float32 on load.
"""
from __future__ import annotations

import struct
import zlib
from collections.abc import Mapping

import numpy as np

from ..errors import (BadMagic, ChecksumMismatch, MissingWeight, ShapeMismatch,
                      TruncatedFile, VersionUnsupported, WeightFileError)
from .spec import ModelSpec, expected_shapes

MAGIC = b"MTDM"
VERSION = 1
DTYPE_F32 = 0
DTYPE_F16 = 1
_DTYPES = {DTYPE_F32: np.dtype("<f4"), DTYPE_F16: np.dtype("<f2")}


class WeightStore(Mapping):
    """Immutable mapping of layer path (e.g. ``blocks.0.expand.weight``) to float32 arrays."""

    def __init__(self, tensors: Mapping[str, np.ndarray]):
        self._t = {}
        for name, arr in tensors.items():
            a = np.array(arr, dtype=np.float32)
            a.setflags(write=False)
            self._t[str(name)] = a

    def __getitem__(self, name):
        try:
            return self._t[name]
        except KeyError:
            raise MissingWeight(f"missing weight tensor {name!r}") from None

    def __iter__(self):
        return iter(self._t)

    def __len__(self):
        return len(self._t)

    @property
    def num_scalars(self) -> int:
        return sum(a.size for a in self._t.values())

    def validate(self, spec: ModelSpec) -> "WeightStore":
        for name, shape in expected_shapes(spec).items():
            if name not in self._t:
                raise MissingWeight(f"missing weight tensor {name!r}")
            if self._t[name].shape != tuple(shape):
                raise ShapeMismatch(f"layer {name!r}: expected shape {tuple(shape)}, "
                                    f"got {self._t[name].shape}")
        return self

    def scaled(self, name: str, factor: float) -> "WeightStore":
        t = dict(self._t)
        t[name] = t[name] * np.float32(factor)
        return WeightStore(t)


def zero_weights(spec: ModelSpec) -> WeightStore:
    return WeightStore({n: np.zeros(s, np.float32) for n, s in expected_shapes(spec).items()})


def random_weights(spec: ModelSpec, seed: int = 0, scale: float = 1.0) -> WeightStore:
    """He-style random weights; useful for exercising the engine without a trained model."""
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shape in expected_shapes(spec).items():
        if name.endswith(".bias"):
            tensors[name] = rng.normal(0.0, 0.01 * scale, shape)
        else:
            fan_in = int(np.prod(shape[1:])) if len(shape) > 1 else 1
            if ".depthwise." in name:
                fan_in = shape[1] * shape[2]
            tensors[name] = rng.normal(0.0, scale * np.sqrt(2.0 / fan_in), shape)
    return WeightStore(tensors)


def dumps(store: Mapping[str, np.ndarray], dtype: int = DTYPE_F32) -> bytes:
    if dtype not in _DTYPES:
        raise ValueError(f"unsupported dtype code {dtype}")
    parts = [MAGIC, struct.pack("<II", VERSION, len(store))]
    for name, arr in store.items():
        raw = name.encode("utf-8")
        arr = np.asarray(arr)
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
        parts.append(struct.pack("<BB", dtype, arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(np.ascontiguousarray(arr, dtype=_DTYPES[dtype]).tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


def save_weights(path, store: Mapping[str, np.ndarray], dtype: int = DTYPE_F32) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps(store, dtype))


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise TruncatedFile(f"unexpected end of file at byte {self.pos} (needed {n} more)")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def loads(buf: bytes, spec: ModelSpec | None = None) -> WeightStore:
    if len(buf) < 4 or buf[:4] != MAGIC:
        raise BadMagic("not an MTDM file (bad magic)")
    r = _Reader(buf)
    r.take(4)
    version, count = r.unpack("<II")
    if version != VERSION:
        raise VersionUnsupported(f"MTDM version {version} is not supported (expected {VERSION})")
    tensors = {}
    for _ in range(count):
        (name_len,) = r.unpack("<H")
        name = r.take(name_len).decode("utf-8")
        dtype, rank = r.unpack("<BB")
        if dtype not in _DTYPES:
            raise WeightFileError(f"tensor {name!r}: unknown dtype code {dtype}")
        dims = r.unpack(f"<{rank}I") if rank else ()
        n = int(np.prod(dims)) if dims else 1
        payload = r.take(n * _DTYPES[dtype].itemsize)
        tensors[name] = np.frombuffer(payload, dtype=_DTYPES[dtype]).reshape(dims)
    body_end = r.pos
    (crc,) = r.unpack("<I")
    if r.pos != len(buf):
        raise WeightFileError(f"{len(buf) - r.pos} trailing bytes after checksum")
    if zlib.crc32(buf[:body_end]) != crc:
        raise ChecksumMismatch("CRC32 mismatch; file is corrupt")
    store = WeightStore(tensors)
    if spec is not None:
        store.validate(spec)
    return store


def load_weights(path, spec: ModelSpec | None = None) -> WeightStore:
    with open(path, "rb") as fh:
        return loads(fh.read(), spec)
