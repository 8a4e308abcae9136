"""Binary file formats: tensors, per-channel affine parameters, weight bundles.

Tensor files are little-endian: magic "EDEA", u16 version (= 1), u8 dtype code
(0 = act8, 1 = wgt8, 2 = acc32), u8 ndim, ndim x u32 dims, then the payload
row-major with channels last.

Affine-parameter (.ncv) files hold, per channel, two little-endian signed
32-bit words carrying the sign-extended 24-bit raw values of k and b.

A weight bundle is one directory with four files per layer:
L{idx}.dwc.w, L{idx}.pwc.w, L{idx}.dwc.ncv, L{idx}.pwc.ncv.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .qformat import RAW_MAX, RAW_MIN, NonConvSet
from .tensors import CODE_DTYPES, DTYPE_CODES, NUMPY_DTYPES, QuantTensor

MAGIC = b"EDEA"
VERSION = 1


def write_tensor(path, t: QuantTensor) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<HBB", VERSION, DTYPE_CODES[t.dtype], t.data.ndim))
        fh.write(struct.pack(f"<{t.data.ndim}I", *t.data.shape))
        fh.write(np.ascontiguousarray(t.data, dtype=t.data.dtype.newbyteorder("<")).tobytes())


def read_tensor(path) -> QuantTensor:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        version, code, ndim = struct.unpack("<HBB", fh.read(4))
        if version != VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        if code not in CODE_DTYPES:
            raise ValueError(f"{path}: unknown dtype code {code}")
        dims = struct.unpack(f"<{ndim}I", fh.read(4 * ndim))
        dtype = CODE_DTYPES[code]
        count = int(np.prod(dims, dtype=np.int64)) if ndim else 1
        raw = fh.read()
    elem = np.dtype(NUMPY_DTYPES[dtype]).newbyteorder("<")
    data = np.frombuffer(raw, dtype=elem, count=count).reshape(dims)
    return QuantTensor(dtype, data.astype(NUMPY_DTYPES[dtype]))


def write_nonconv(path, ncv: NonConvSet) -> None:
    words = np.empty(2 * len(ncv), dtype="<i4")
    words[0::2] = ncv.k_raw
    words[1::2] = ncv.b_raw
    with open(path, "wb") as fh:
        fh.write(words.tobytes())


def read_nonconv(path) -> NonConvSet:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) % 8:
        raise ValueError(f"{path}: truncated parameter file")
    words = np.frombuffer(raw, dtype="<i4")
    k, b = words[0::2], words[1::2]
    if k.size and (min(k.min(), b.min()) < RAW_MIN or max(k.max(), b.max()) > RAW_MAX):
        raise ValueError(f"{path}: raw values outside the 24-bit signed range")
    return NonConvSet(k, b)


def bundle_paths(directory, index: int) -> dict[str, Path]:
    base = Path(directory)
    return {
        "dwc_w": base / f"L{index}.dwc.w",
        "pwc_w": base / f"L{index}.pwc.w",
        "dwc_ncv": base / f"L{index}.dwc.ncv",
        "pwc_ncv": base / f"L{index}.pwc.ncv",
    }
