"""Independent reference implementations used as ground truth.

These deliberately share no code with the engine: convolutions are written
as direct loops over output positions on zero-padded arrays, and the affine
stage has an exact-rational scalar evaluator.  They are slow and that is
fine; their only job is to be obviously correct.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .qformat import ACT_MAX, FRAC_BITS, BnQuantParams, NonConvParams, round_half_away
from .tensors import QuantTensor


def ref_dwc(ifmap: QuantTensor, weights: QuantTensor, stride: int, pad: int) -> QuantTensor:
    """Direct depthwise convolution with zero padding; channels never mix."""
    if ifmap.dtype != "act8" or weights.dtype != "wgt8":
        raise ValueError("expected act8 ifmap and wgt8 weights")
    r, c, d = ifmap.dims
    h, w, wd = weights.dims
    if wd != d:
        raise ValueError(f"weight channels {wd} do not match ifmap channels {d}")
    padded = np.zeros((r + 2 * pad, c + 2 * pad, d), dtype=np.int64)
    padded[pad : pad + r, pad : pad + c, :] = ifmap.data
    wgt = weights.data.astype(np.int64)
    n = (r + 2 * pad - h) // stride + 1
    m = (c + 2 * pad - w) // stride + 1
    out = np.zeros((n, m, d), dtype=np.int64)
    for i in range(n):
        for j in range(m):
            window = padded[i * stride : i * stride + h, j * stride : j * stride + w, :]
            out[i, j, :] = (window * wgt).sum(axis=(0, 1))
    return QuantTensor("acc32", out)


def ref_pwc(act: QuantTensor, weights: QuantTensor) -> QuantTensor:
    """Direct 1x1 convolution: a per-position matrix product over channels."""
    if act.dtype != "act8" or weights.dtype != "wgt8":
        raise ValueError("expected act8 activations and wgt8 weights")
    n, m, d = act.dims
    wd, k = weights.dims
    if wd != d:
        raise ValueError(f"weight rows {wd} do not match activation channels {d}")
    out = np.tensordot(act.data.astype(np.int64), weights.data.astype(np.int64), axes=([2], [0]))
    return QuantTensor("acc32", out)


def ref_chain_real(x, p: BnQuantParams):
    """Real-arithmetic dequant -> BN -> ReLU -> quantize chain.

    Accepts a scalar or array accumulator; the scalar path mirrors the
    formula one step at a time.
    """
    fields = (p.gamma, p.beta, p.mu, p.sigma_sq, p.epsilon, p.s_a, p.s_w, p.s_a_next)
    if not all(math.isfinite(v) for v in fields):
        raise ValueError("non-finite batch-norm or scale parameter")
    sigma_hat = math.sqrt(p.sigma_sq + p.epsilon)
    if isinstance(x, (int, float)):
        x_real = p.s_a * p.s_w * x
        bn = p.gamma * (x_real - p.mu) / sigma_hat + p.beta
        bn = max(bn, 0.0)
        return min(round_half_away(bn / p.s_a_next), ACT_MAX)
    x_real = p.s_a * p.s_w * np.asarray(x, dtype=np.float64)
    bn = p.gamma * (x_real - p.mu) / sigma_hat + p.beta
    bn = np.maximum(bn, 0.0) / p.s_a_next
    y = np.floor(bn + 0.5).astype(np.int64)  # bn >= 0, ties away == ties up
    return np.minimum(y, ACT_MAX)


def ref_nonconv_exact(x: int, p: NonConvParams) -> int:
    """Exact rational evaluation of the quantized affine stage.

    (k.raw*x + b.raw) / 2**16 is formed as a Fraction, ReLU-clamped, rounded
    half away from zero and saturated to the activation range.
    """
    q = Fraction(p.k.raw * int(x) + p.b.raw, 1 << FRAC_BITS)
    if q < 0:
        q = Fraction(0)
    y = (q + Fraction(1, 2)).__floor__()  # q >= 0, ties away == ties up
    return min(y, ACT_MAX)


def ref_layer(layer, ifmap, dwc_w, pwc_w, dwc_ncv, pwc_ncv) -> QuantTensor:
    """Naive end-to-end layer: loop convolutions joined by the affine stage.

    The affine applications reuse the exhaustively verified vectorized path;
    the convolutions themselves stay engine-free.
    """
    acc = ref_dwc(ifmap, dwc_w, layer.stride, layer.pad)
    mid = QuantTensor("act8", dwc_ncv.apply(acc.data))
    acc = ref_pwc(mid, pwc_w)
    return QuantTensor("act8", pwc_ncv.apply(acc.data))
