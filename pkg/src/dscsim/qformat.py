"""Q8.16 fixed-point arithmetic and the fused post-convolution transform.

Between the two convolution engines sits a per-channel affine stage
y = k*x + b that folds dequantization, batch normalization, ReLU and
requantization into one fixed-point multiply-add.  k and b are signed 24-bit
values with 16 fractional bits; the transform is evaluated exactly in integer
arithmetic so results are bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

FRAC_BITS = 16
ONE = 1 << FRAC_BITS
HALF = 1 << (FRAC_BITS - 1)
RAW_MIN = -(1 << 23)
RAW_MAX = (1 << 23) - 1

ACT_MAX = 255  # activations are unsigned 8-bit, post-ReLU
WGT_MIN, WGT_MAX = -128, 127


@dataclass(frozen=True)
class QFixed:
    """Signed Q8.16 scalar: value = raw / 2**16, raw in [-2**23, 2**23 - 1]."""

    raw: int

    def __post_init__(self):
        if not RAW_MIN <= self.raw <= RAW_MAX:
            raise ValueError(f"raw value {self.raw} outside the 24-bit signed range")

    @property
    def value(self) -> float:
        return self.raw / ONE


@dataclass(frozen=True)
class BnQuantParams:
    """Per-channel batch-norm parameters plus the quantization scales of the
    producing convolution (s_a, s_w) and of the consumer (s_a_next)."""

    gamma: float
    beta: float
    mu: float
    sigma_sq: float
    epsilon: float
    s_a: float
    s_w: float
    s_a_next: float


@dataclass(frozen=True)
class NonConvParams:
    """One folded (k, b) pair; saturated marks a fold that overflowed Q8.16."""

    k: QFixed
    b: QFixed
    saturated: bool = False


def round_half_away(x: float) -> int:
    """Round to nearest integer, ties away from zero."""
    return math.floor(x + 0.5) if x >= 0 else -math.floor(-x + 0.5)


def to_fixed(x: float) -> tuple[QFixed, bool]:
    """Quantize a real value to Q8.16.  Returns the fixed-point value and a
    flag telling whether it had to saturate to the representable range."""
    raw = round_half_away(x * ONE)
    saturated = raw < RAW_MIN or raw > RAW_MAX
    return QFixed(min(max(raw, RAW_MIN), RAW_MAX)), saturated


def fold_bn_quant(p: BnQuantParams) -> NonConvParams:
    """Fold dequant + BN + requant into the affine pair (k, b).

    With s = sqrt(sigma_sq + epsilon):
        k = gamma * s_a * s_w / (s * s_a_next)
        b = (beta - gamma * mu / s) / s_a_next
    """
    fields = (p.gamma, p.beta, p.mu, p.sigma_sq, p.epsilon, p.s_a, p.s_w, p.s_a_next)
    if not all(math.isfinite(v) for v in fields):
        raise ValueError("non-finite batch-norm or scale parameter")
    sigma_hat = math.sqrt(p.sigma_sq + p.epsilon)
    k_real = (p.gamma * p.s_a * p.s_w) / (sigma_hat * p.s_a_next)
    b_real = (p.beta - p.gamma * p.mu / sigma_hat) / p.s_a_next
    k, sat_k = to_fixed(k_real)
    b, sat_b = to_fixed(b_real)
    return NonConvParams(k=k, b=b, saturated=sat_k or sat_b)


def nonconv_apply(x: int, p: NonConvParams) -> int:
    """Apply y = clamp(round(max(0, k*x + b)), 0, 255) to a raw accumulator.

    The product k.raw*x and the addend b.raw live in Q.16; ReLU clamps
    negatives before the fractional bits are rounded away (ties away from
    zero).  Integer arithmetic throughout, so the result is bit-exact
    regardless of evaluation strategy.
    """
    t = p.k.raw * int(x) + p.b.raw
    if t < 0:
        return 0
    return min((t + HALF) >> FRAC_BITS, ACT_MAX)


class NonConvSet:
    """Per-channel (k, b) table for one convolution output, with a vectorized
    integer application path used by the engine."""

    def __init__(self, k_raw, b_raw, saturated=None):
        self.k_raw = np.asarray(k_raw, dtype=np.int64)
        self.b_raw = np.asarray(b_raw, dtype=np.int64)
        if self.k_raw.shape != self.b_raw.shape or self.k_raw.ndim != 1:
            raise ValueError("k and b must be 1-d arrays of equal length")
        for arr, name in ((self.k_raw, "k"), (self.b_raw, "b")):
            if arr.size and (arr.min() < RAW_MIN or arr.max() > RAW_MAX):
                raise ValueError(f"{name} raw values outside the 24-bit signed range")
        if saturated is None:
            saturated = np.zeros(self.k_raw.shape, dtype=bool)
        self.saturated = np.asarray(saturated, dtype=bool)

    def __len__(self) -> int:
        return self.k_raw.size

    @classmethod
    def from_params(cls, params: list[NonConvParams]) -> "NonConvSet":
        return cls(
            [p.k.raw for p in params],
            [p.b.raw for p in params],
            [p.saturated for p in params],
        )

    def param(self, channel: int) -> NonConvParams:
        return NonConvParams(
            k=QFixed(int(self.k_raw[channel])),
            b=QFixed(int(self.b_raw[channel])),
            saturated=bool(self.saturated[channel]),
        )

    def pad_to(self, channels: int) -> "NonConvSet":
        """Extend with zero-gain channels (k = b = 0) for padded lanes."""
        extra = channels - len(self)
        if extra < 0:
            raise ValueError("cannot shrink a parameter set")
        if extra == 0:
            return self
        return NonConvSet(
            np.concatenate([self.k_raw, np.zeros(extra, dtype=np.int64)]),
            np.concatenate([self.b_raw, np.zeros(extra, dtype=np.int64)]),
            np.concatenate([self.saturated, np.zeros(extra, dtype=bool)]),
        )

    def apply(self, acc: np.ndarray, channels: np.ndarray | slice | None = None) -> np.ndarray:
        """Vectorized nonconv_apply along the last (channel) axis of acc."""
        k = self.k_raw if channels is None else self.k_raw[channels]
        b = self.b_raw if channels is None else self.b_raw[channels]
        t = acc.astype(np.int64) * k + b
        np.maximum(t, 0, out=t)
        y = (t + HALF) >> FRAC_BITS
        return np.minimum(y, ACT_MAX).astype(np.uint8)
