"""Binary checkpoint container for model parameters and optimizer state.

Layout (all integers little-endian, float data little-endian float64):

    magic   8 bytes   b"GRTCKPT1"
    version u32       currently 1
    conf    u32 + bytes   canonical config text (utf-8), may be empty
    ntens   u32
    per tensor:
        name  u32 + utf-8 bytes
        ndim  u32
        dims  ndim x u64
        data  prod(dims) x f64
    optflag u8        0 = no optimizer state, 1 = present
    if present:
        step  u64
        per tensor (same count/order as parameters):
            m data  f64 array matching the tensor's shape
            v data  f64 array matching the tensor's shape
"""
from __future__ import annotations

import struct

import numpy as np

MAGIC = b"GRTCKPT1"
VERSION = 1


class CheckpointError(RuntimeError):
    pass


def _write_array(fp, arr: np.ndarray) -> None:
    # asarray with order="C" keeps 0-d shapes (ascontiguousarray promotes to 1-d)
    arr = np.asarray(arr, dtype="<f8", order="C")
    fp.write(struct.pack("<I", arr.ndim))
    fp.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
    fp.write(arr.tobytes())


def _read_exact(fp, n: int) -> bytes:
    data = fp.read(n)
    if len(data) != n:
        raise CheckpointError("truncated checkpoint")
    return data


def _read_array(fp) -> np.ndarray:
    ndim = struct.unpack("<I", _read_exact(fp, 4))[0]
    dims = struct.unpack(f"<{ndim}Q", _read_exact(fp, 8 * ndim)) if ndim else ()
    count = int(np.prod(dims)) if dims else 1
    data = np.frombuffer(_read_exact(fp, 8 * count), dtype="<f8").astype(float)
    return data.reshape(dims)


def save_checkpoint(path, params: dict[str, np.ndarray],
                    optimizer_state: dict | None = None,
                    config_text: str = "") -> None:
    names = sorted(params)
    with open(path, "wb") as fp:
        fp.write(MAGIC)
        fp.write(struct.pack("<I", VERSION))
        conf = config_text.encode("utf-8")
        fp.write(struct.pack("<I", len(conf)))
        fp.write(conf)
        fp.write(struct.pack("<I", len(names)))
        for name in names:
            nb = name.encode("utf-8")
            fp.write(struct.pack("<I", len(nb)))
            fp.write(nb)
            _write_array(fp, params[name])
        if optimizer_state is None:
            fp.write(struct.pack("<B", 0))
        else:
            fp.write(struct.pack("<B", 1))
            fp.write(struct.pack("<Q", int(optimizer_state["step"])))
            for name in names:
                _write_array(fp, optimizer_state["m"][name])
                _write_array(fp, optimizer_state["v"][name])


def load_checkpoint(path):
    """Returns (params dict, optimizer state or None, config text)."""
    with open(path, "rb") as fp:
        if _read_exact(fp, 8) != MAGIC:
            raise CheckpointError(f"{path} is not a checkpoint (bad magic)")
        version = struct.unpack("<I", _read_exact(fp, 4))[0]
        if version != VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version}")
        conf_len = struct.unpack("<I", _read_exact(fp, 4))[0]
        config_text = _read_exact(fp, conf_len).decode("utf-8")
        ntens = struct.unpack("<I", _read_exact(fp, 4))[0]
        params: dict[str, np.ndarray] = {}
        names = []
        for _ in range(ntens):
            name_len = struct.unpack("<I", _read_exact(fp, 4))[0]
            name = _read_exact(fp, name_len).decode("utf-8")
            names.append(name)
            params[name] = _read_array(fp)
        flag = struct.unpack("<B", _read_exact(fp, 1))[0]
        state = None
        if flag:
            step = struct.unpack("<Q", _read_exact(fp, 8))[0]
            state = {"step": int(step), "m": {}, "v": {}}
            for name in names:
                state["m"][name] = _read_array(fp)
                state["v"][name] = _read_array(fp)
        return params, state, config_text
