"""Layer geometry for depthwise-separable convolution (DSC) workloads.

A DSC layer is a 3x3 depthwise convolution (DWC) followed by a 1x1 pointwise
convolution (PWC).  This module defines the layer/network shape types, the
built-in MobileNetV1 network at CIFAR10 resolution, operation counting, and
the tile-grid derivation used by both the engine simulator and the analytic
models.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

KERNEL = 3  # DWC kernel extent; the engine geometry is fixed at 3x3


@dataclass(frozen=True)
class LayerShape:
    """Geometry of one DSC layer.

    R, C, D are the input feature-map rows/cols/channels; K is the PWC output
    channel count.  Output extents N, M are derived from stride and padding.
    """

    index: int
    R: int
    C: int
    D: int
    K: int
    stride: int
    pad: int = 1
    H: int = KERNEL
    W: int = KERNEL

    @property
    def N(self) -> int:
        return (self.R + 2 * self.pad - self.H) // self.stride + 1

    @property
    def M(self) -> int:
        return (self.C + 2 * self.pad - self.W) // self.stride + 1


@dataclass(frozen=True)
class Network:
    name: str
    layers: tuple[LayerShape, ...]


@dataclass(frozen=True)
class TileConfig:
    """Tiling parameters: output spatial tile T_n x T_m, channel tile T_d,
    kernel tile T_k.  The input tile extent follows from stride and kernel."""

    T_n: int = 2
    T_m: int = 2
    T_d: int = 8
    T_k: int = 16

    def t_r(self, stride: int) -> int:
        return (self.T_n - 1) * stride + KERNEL

    def t_c(self, stride: int) -> int:
        return (self.T_m - 1) * stride + KERNEL


NATIVE_TILING = TileConfig()

#: Default edge (in output elements) of one buffer-tiled ifmap.  Layers whose
#: output is larger than this are split into multiple buffer tiles, each
#: paying its own pipeline initiation.
DEFAULT_SPATIAL_CAP = 8


@dataclass(frozen=True)
class SpatialTile:
    """One T_n x T_m output tile and the input halo that produces it.

    Input coordinates are relative to the unpadded ifmap and may be negative
    or exceed the ifmap extent; out-of-range positions read as zeros.
    """

    out_row0: int
    out_col0: int
    out_rows: int  # clipped at the layer output border
    out_cols: int
    in_row0: int
    in_col0: int
    in_rows: int  # always the full halo extent T_r
    in_cols: int


@dataclass(frozen=True)
class BufferTile:
    """A group of spatial tiles covering at most spatial_cap output rows/cols."""

    row0: int
    col0: int
    rows: int
    cols: int
    positions: tuple[SpatialTile, ...]


@dataclass(frozen=True)
class TileGrid:
    layer: LayerShape
    cfg: TileConfig
    spatial_cap: int
    buffer_tiles: tuple[BufferTile, ...]
    depth_groups: int
    kernel_groups: int

    @property
    def n_buf(self) -> int:
        return len(self.buffer_tiles)

    @property
    def positions_per_buffer_tile(self) -> int:
        """Spatial tile count of a full (first) buffer tile."""
        return len(self.buffer_tiles[0].positions)


def builtin_mobilenet_v1_cifar10() -> Network:
    """The 13 DSC layers of MobileNetV1 at 32x32 input (CIFAR10).

    The leading standard convolution and the classifier head are not DSC
    layers and are not part of this workload.
    """
    spec = [
        # (R, D, K, stride)
        (32, 32, 64, 1),
        (32, 64, 128, 2),
        (16, 128, 128, 1),
        (16, 128, 256, 2),
        (8, 256, 256, 1),
        (8, 256, 512, 2),
        (4, 512, 512, 1),
        (4, 512, 512, 1),
        (4, 512, 512, 1),
        (4, 512, 512, 1),
        (4, 512, 512, 1),
        (4, 512, 1024, 2),
        (2, 1024, 1024, 1),
    ]
    layers = tuple(
        LayerShape(index=i, R=r, C=r, D=d, K=k, stride=s)
        for i, (r, d, k, s) in enumerate(spec)
    )
    return Network(name="mobilenet_v1_cifar10", layers=layers)


def layer_mac_counts(layer: LayerShape) -> tuple[int, int]:
    """(dwc_macs, pwc_macs) for one layer; one op = one multiply or one add,
    so the op count is twice the MAC count."""
    n, m = layer.N, layer.M
    dwc = n * m * layer.D * layer.H * layer.W
    pwc = n * m * layer.D * layer.K
    return dwc, pwc


def validate_network(net: Network) -> list[str]:
    """Check layer and chaining invariants.  Violations are returned as data,
    one message per breach, each naming the layer index and the failed rule."""
    violations = []
    for layer in net.layers:
        i = layer.index
        if layer.H != KERNEL or layer.W != KERNEL:
            violations.append(f"layer {i}: kernel must be {KERNEL}x{KERNEL}, got {layer.H}x{layer.W}")
        if layer.stride not in (1, 2):
            violations.append(f"layer {i}: stride must be 1 or 2, got {layer.stride}")
        if layer.R < 1 or layer.C < 1:
            violations.append(f"layer {i}: input extent must be positive, got {layer.R}x{layer.C}")
        if layer.D < 1:
            violations.append(f"layer {i}: input channels must be >= 1, got {layer.D}")
        if layer.K < 1:
            violations.append(f"layer {i}: output channels must be >= 1, got {layer.K}")
        if layer.pad < 0:
            violations.append(f"layer {i}: pad must be non-negative, got {layer.pad}")
    for prev, cur in zip(net.layers, net.layers[1:]):
        i = cur.index
        if prev.K != cur.D:
            violations.append(
                f"layer {i}: input channels D={cur.D} do not match layer {prev.index} output channels K={prev.K}"
            )
        if prev.N != cur.R or prev.M != cur.C:
            violations.append(
                f"layer {i}: input extent {cur.R}x{cur.C} does not match layer {prev.index} output {prev.N}x{prev.M}"
            )
    return violations


def derive_tile_grid(
    layer: LayerShape, cfg: TileConfig = NATIVE_TILING, spatial_cap: int = DEFAULT_SPATIAL_CAP
) -> TileGrid:
    """Partition a layer into buffer tiles, spatial tiles, depth groups and
    kernel groups.

    Buffer tiles cover at most spatial_cap x spatial_cap output positions;
    within a buffer tile the output is walked in T_n x T_m steps.  Input
    ranges carry the full halo (T_r = (T_n-1)*stride + 3 per axis) and may
    extend past the padded border, where they read as zeros.
    """
    if spatial_cap < cfg.T_n or spatial_cap < cfg.T_m:
        raise ValueError(f"spatial_cap {spatial_cap} smaller than tile extent {cfg.T_n}x{cfg.T_m}")
    if spatial_cap % cfg.T_n or spatial_cap % cfg.T_m:
        raise ValueError(f"tile extent {cfg.T_n}x{cfg.T_m} must divide spatial_cap {spatial_cap}")

    n, m = layer.N, layer.M
    s = layer.stride
    t_r, t_c = cfg.t_r(s), cfg.t_c(s)

    buffer_tiles = []
    for br in range(math.ceil(n / spatial_cap)):
        for bc in range(math.ceil(m / spatial_cap)):
            row0 = br * spatial_cap
            col0 = bc * spatial_cap
            rows = min(spatial_cap, n - row0)
            cols = min(spatial_cap, m - col0)
            positions = []
            for tr in range(math.ceil(rows / cfg.T_n)):
                for tc in range(math.ceil(cols / cfg.T_m)):
                    out_r = row0 + tr * cfg.T_n
                    out_c = col0 + tc * cfg.T_m
                    positions.append(
                        SpatialTile(
                            out_row0=out_r,
                            out_col0=out_c,
                            out_rows=min(cfg.T_n, n - out_r),
                            out_cols=min(cfg.T_m, m - out_c),
                            in_row0=out_r * s - layer.pad,
                            in_col0=out_c * s - layer.pad,
                            in_rows=t_r,
                            in_cols=t_c,
                        )
                    )
            buffer_tiles.append(
                BufferTile(row0=row0, col0=col0, rows=rows, cols=cols, positions=tuple(positions))
            )

    return TileGrid(
        layer=layer,
        cfg=cfg,
        spatial_cap=spatial_cap,
        buffer_tiles=tuple(buffer_tiles),
        depth_groups=math.ceil(layer.D / cfg.T_d),
        kernel_groups=math.ceil(layer.K / cfg.T_k),
    )


_NETWORK_KEYS = {"name", "layers"}
_LAYER_KEYS = {"R", "C", "D", "K", "stride", "pad"}


def load_network(path) -> Network:
    """Load a network description from JSON.  The kernel extent is implied
    (3x3); unknown fields are rejected."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValueError("network file: top-level value must be an object")
    unknown = set(doc) - _NETWORK_KEYS
    if unknown:
        raise ValueError(f"network file: unknown fields {sorted(unknown)}")
    if not isinstance(doc.get("name"), str):
        raise ValueError("network file: missing or non-string 'name'")
    if not isinstance(doc.get("layers"), list):
        raise ValueError("network file: missing or non-list 'layers'")
    layers = []
    for i, entry in enumerate(doc["layers"]):
        if not isinstance(entry, dict):
            raise ValueError(f"network file: layer {i} must be an object")
        unknown = set(entry) - _LAYER_KEYS
        if unknown:
            raise ValueError(f"network file: layer {i} has unknown fields {sorted(unknown)}")
        missing = _LAYER_KEYS - set(entry)
        if missing:
            raise ValueError(f"network file: layer {i} missing fields {sorted(missing)}")
        if not all(isinstance(entry[k], int) for k in _LAYER_KEYS):
            raise ValueError(f"network file: layer {i} fields must be integers")
        layers.append(
            LayerShape(
                index=i,
                R=entry["R"],
                C=entry["C"],
                D=entry["D"],
                K=entry["K"],
                stride=entry["stride"],
                pad=entry["pad"],
            )
        )
    return Network(name=doc["name"], layers=tuple(layers))


def save_network(net: Network, path) -> None:
    doc = {
        "name": net.name,
        "layers": [
            {"R": l.R, "C": l.C, "D": l.D, "K": l.K, "stride": l.stride, "pad": l.pad}
            for l in net.layers
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
