"""Seeded random data for simulation and golden runs.

Weights are uniform over the signed 8-bit range, activations uniform over
the unsigned range.  Affine parameters are drawn with |k| log-uniform in
[2**-8, 8] (negated with probability 1/4) and b uniform in [-100, 100],
which exercises both ReLU branches and output saturation without a trained
model.  Draw order is fixed, so a seed fully determines all generated data.
"""

from __future__ import annotations

import numpy as np

from .engine import LayerParams
from .qformat import to_fixed
from .qformat import NonConvSet
from .tensors import QuantTensor
from .workload import LayerShape, Network

K_MAG_LO, K_MAG_HI = 2.0**-8, 8.0
B_MAG = 100.0


def random_ifmap(layer: LayerShape, rng: np.random.Generator) -> QuantTensor:
    data = rng.integers(0, 256, size=(layer.R, layer.C, layer.D), dtype=np.int64)
    return QuantTensor("act8", data.astype(np.uint8))


def random_nonconv(channels: int, rng: np.random.Generator) -> NonConvSet:
    mag = np.exp(rng.uniform(np.log(K_MAG_LO), np.log(K_MAG_HI), size=channels))
    sign = np.where(rng.random(channels) < 0.25, -1.0, 1.0)
    b_real = rng.uniform(-B_MAG, B_MAG, size=channels)
    k_raw, b_raw = [], []
    for k, b in zip(mag * sign, b_real):
        k_raw.append(to_fixed(float(k))[0].raw)
        b_raw.append(to_fixed(float(b))[0].raw)
    return NonConvSet(k_raw, b_raw)


def random_layer_params(layer: LayerShape, rng: np.random.Generator) -> LayerParams:
    dwc = rng.integers(-128, 128, size=(3, 3, layer.D), dtype=np.int64)
    pwc = rng.integers(-128, 128, size=(layer.D, layer.K), dtype=np.int64)
    return LayerParams(
        dwc_w=QuantTensor("wgt8", dwc.astype(np.int8)),
        pwc_w=QuantTensor("wgt8", pwc.astype(np.int8)),
        dwc_ncv=random_nonconv(layer.D, rng),
        pwc_ncv=random_nonconv(layer.K, rng),
    )


def random_network_data(net: Network, seed: int) -> tuple[QuantTensor, list[LayerParams]]:
    """Input feature map plus per-layer parameters from one seeded stream."""
    rng = np.random.default_rng(seed)
    input_fmap = random_ifmap(net.layers[0], rng)
    params = [random_layer_params(layer, rng) for layer in net.layers]
    return input_fmap, params


def layer_rng(seed: int, layer_index: int, trial: int = 0) -> np.random.Generator:
    """Independent stream per (seed, layer, trial) so restricting a golden
    run to a layer subset does not change what any layer sees."""
    return np.random.default_rng([seed, layer_index, trial])
