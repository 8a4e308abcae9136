"""Bit-exact functional simulator and analytic performance model of a
dual-engine accelerator for depthwise-separable convolution."""

from .engine import (
    AccessCounters,
    CycleTrace,
    EngineConfig,
    LayerParams,
    dwc_tile,
    pwc_tile,
    run_layer_fused,
    run_layer_sequential,
    run_network,
)
from .qformat import BnQuantParams, NonConvParams, NonConvSet, QFixed, fold_bn_quant, nonconv_apply, to_fixed
from .tensors import QuantTensor
from .workload import (
    LayerShape,
    Network,
    TileConfig,
    builtin_mobilenet_v1_cifar10,
    derive_tile_grid,
    layer_mac_counts,
    load_network,
    validate_network,
)

__version__ = "0.1.0"

__all__ = [
    "AccessCounters",
    "BnQuantParams",
    "CycleTrace",
    "EngineConfig",
    "LayerParams",
    "LayerShape",
    "Network",
    "NonConvParams",
    "NonConvSet",
    "QFixed",
    "QuantTensor",
    "TileConfig",
    "builtin_mobilenet_v1_cifar10",
    "derive_tile_grid",
    "dwc_tile",
    "fold_bn_quant",
    "layer_mac_counts",
    "load_network",
    "nonconv_apply",
    "pwc_tile",
    "run_layer_fused",
    "run_layer_sequential",
    "run_network",
    "to_fixed",
    "validate_network",
    "__version__",
]
