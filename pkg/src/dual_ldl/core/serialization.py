"""Binary model file.

Layout (all little-endian):
    b"DLDL"                      magic
    u32                          format version
    u32 input_dim, u32 output_dim, u32 n_hidden, u32 * n_hidden hidden dims
    u64                          init seed
    f64 * size                   W0, b0, W1, b1, ... in declared order
    u32                          CRC-32 of every preceding byte
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np
import structlog

from dual_ldl.core.net import Layer, PredictorNet
from dual_ldl.errors import ModelFormatError, UnsupportedVersionError
from dual_ldl.models.training import NetConfig

log = structlog.get_logger(__name__)

MAGIC = b"DLDL"
FORMAT_VERSION = 1
_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")


def encode_net(net: PredictorNet) -> bytes:
    cfg = net.config
    parts = [
        MAGIC,
        _U32.pack(FORMAT_VERSION),
        _U32.pack(cfg.input_dim),
        _U32.pack(cfg.output_dim),
        _U32.pack(len(cfg.hidden_dims)),
        *(_U32.pack(d) for d in cfg.hidden_dims),
        _U64.pack(cfg.seed),
    ]
    parts.extend(np.ascontiguousarray(t, dtype="<f8").tobytes() for t in net.parameters())
    body = b"".join(parts)
    return body + _U32.pack(zlib.crc32(body))


class _Reader:
    def __init__(self, data: bytes) -> None:
        self.data = data
        self.offset = 0

    def take(self, size: int, what: str) -> bytes:
        if self.offset + size > len(self.data):
            raise ModelFormatError(f"file truncated while reading {what}", self.offset)
        chunk = self.data[self.offset : self.offset + size]
        self.offset += size
        return chunk

    def u32(self, what: str) -> int:
        return int(_U32.unpack(self.take(4, what))[0])


def decode_net(data: bytes) -> PredictorNet:
    reader = _Reader(data)
    if reader.take(len(MAGIC), "magic") != MAGIC:
        raise ModelFormatError("not a model file (bad magic)", 0)
    version_offset = reader.offset
    version = reader.u32("version")
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(
            f"unsupported model format version {version} (expected {FORMAT_VERSION})",
            version_offset,
        )
    input_dim = reader.u32("input_dim")
    output_dim = reader.u32("output_dim")
    n_hidden = reader.u32("hidden layer count")
    hidden = [reader.u32(f"hidden dim {i}") for i in range(n_hidden)]
    seed = int(_U64.unpack(reader.take(8, "seed"))[0])
    try:
        config = NetConfig(
            input_dim=input_dim, hidden_dims=hidden, output_dim=output_dim, seed=seed
        )
    except ValueError as exc:
        raise ModelFormatError(f"invalid network dimensions: {exc}", version_offset + 4) from exc

    layers: list[Layer] = []
    for idx, (fan_in, fan_out) in enumerate(config.layer_dims()):
        w = np.frombuffer(reader.take(8 * fan_in * fan_out, f"W{idx}"), dtype="<f8")
        b = np.frombuffer(reader.take(8 * fan_out, f"b{idx}"), dtype="<f8")
        layers.append((w.reshape(fan_in, fan_out).astype(np.float64), b.astype(np.float64)))

    checksum_offset = reader.offset
    (stored,) = _U32.unpack(reader.take(4, "checksum"))
    if reader.offset != len(data):
        raise ModelFormatError("trailing bytes after checksum", reader.offset)
    if stored != zlib.crc32(data[:checksum_offset]):
        raise ModelFormatError("checksum mismatch", checksum_offset)
    return PredictorNet(config, layers)


def save_net(net: PredictorNet, path: str | Path) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_bytes(encode_net(net))
    log.info("model_saved", path=str(target), params=net.param_count())
    return target


def load_net(path: str | Path) -> PredictorNet:
    net = decode_net(Path(path).read_bytes())
    log.info("model_loaded", path=str(path), params=net.param_count())
    return net
