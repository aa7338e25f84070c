"""Binary checkpoint format.

Layout: 4 magic bytes, little-endian uint32 format version, little-endian
uint32 descriptor length, UTF-8 JSON descriptor (architecture, normalization
constants, parameter names/shapes in order), then the raw float64
little-endian parameter blobs in descriptor order.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import CheckpointError
from .model import HardnessNet, NetConfig

MAGIC = b"GPRS"
FORMAT_VERSION = 1


def save_checkpoint(model: HardnessNet, path: str | Path) -> None:
    named = model.named_params()
    descriptor = {
        "format_version": FORMAT_VERSION,
        "net": model.cfg.to_dict(),
        "params": [{"name": n, "shape": list(p.value.shape)} for n, p in named],
    }
    blob = json.dumps(descriptor, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for _, p in named:
            fh.write(np.ascontiguousarray(p.value, dtype="<f8").tobytes())


def load_checkpoint(path: str | Path) -> HardnessNet:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12 or data[:4] != MAGIC:
        raise CheckpointError(f"{path}: not a gelpress checkpoint")
    version = struct.unpack("<I", data[4:8])[0]
    if version > FORMAT_VERSION:
        raise CheckpointError(
            f"{path}: format version {version} is newer than supported {FORMAT_VERSION}"
        )
    desc_len = struct.unpack("<I", data[8:12])[0]
    try:
        descriptor = json.loads(data[12 : 12 + desc_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt descriptor: {exc}") from exc

    model = HardnessNet(NetConfig.from_dict(descriptor["net"]), seed=0)
    named = dict(model.named_params())
    offset = 12 + desc_len
    for entry in descriptor["params"]:
        name, shape = entry["name"], tuple(entry["shape"])
        if name not in named:
            raise CheckpointError(f"{path}: unknown parameter {name!r}")
        param = named[name]
        if param.value.shape != shape:
            raise CheckpointError(
                f"{path}: shape mismatch for {name}: file {shape} vs model {param.value.shape}"
            )
        count = int(np.prod(shape)) if shape else 1
        end = offset + 8 * count
        if end > len(data):
            raise CheckpointError(f"{path}: truncated parameter data at {name}")
        param.value[...] = np.frombuffer(data[offset:end], dtype="<f8").reshape(shape)
        offset = end
    if offset != len(data):
        raise CheckpointError(f"{path}: {len(data) - offset} trailing bytes")
    return model
