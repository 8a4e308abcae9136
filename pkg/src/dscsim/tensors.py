"""Channel-last integer tensors used throughout the simulator.

Three element types exist: unsigned 8-bit activations (act8), signed 8-bit
weights (wgt8) and signed 32-bit accumulators (acc32).  Data is stored
row-major with channels last, matching the on-disk layout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NUMPY_DTYPES = {"act8": np.uint8, "wgt8": np.int8, "acc32": np.int32}
DTYPE_CODES = {"act8": 0, "wgt8": 1, "acc32": 2}
CODE_DTYPES = {v: k for k, v in DTYPE_CODES.items()}


@dataclass
class QuantTensor:
    dtype: str
    data: np.ndarray

    def __post_init__(self):
        if self.dtype not in NUMPY_DTYPES:
            raise ValueError(f"unknown dtype tag {self.dtype!r}")
        expect = NUMPY_DTYPES[self.dtype]
        if self.data.dtype != expect:
            # Coerce only when every element is in range for the target type.
            info = np.iinfo(expect)
            if self.data.size and (self.data.min() < info.min or self.data.max() > info.max):
                raise ValueError(f"values out of range for {self.dtype}")
            self.data = self.data.astype(expect)
        self.data = np.ascontiguousarray(self.data)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.data.shape

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, QuantTensor)
            and self.dtype == other.dtype
            and self.dims == other.dims
            and bool(np.array_equal(self.data, other.data))
        )


def zeros(dims: tuple[int, ...], dtype: str) -> QuantTensor:
    return QuantTensor(dtype, np.zeros(dims, dtype=NUMPY_DTYPES[dtype]))
