"""Bit-exact functional model of the dual-engine DSC datapath.

The DWC engine consumes a 4x4x8 input tile (5x5x8 at stride 2) and produces a
2x2x8 accumulator tile (288 MACs); the fused affine stage turns it into 8-bit
activations that land in a double-buffered intermediate register; the PWC
engine consumes that 2x2x8 tile against an 8x16 weight tile and accumulates a
2x2x16 partial sum (512 MACs).

A layer is executed with the streaming schedule

    buffer tile -> depth group -> spatial position -> kernel group

so the intermediate activations never leave the register file.  Access
counters record element-level traffic at the modeled buffer boundaries:
activation reads are counted per tile fetch (halo re-reads included), weight
reads once per resident weight tile, partial-sum read+write pairs on every
depth-group revisit.  The cycle trace mirrors the pipeline: 9 initiation
cycles per (buffer tile, depth group), then one PWC cycle per (position,
kernel group), with DWC running one tile ahead.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from .qformat import NonConvSet
from .tensors import QuantTensor
from .workload import (
    DEFAULT_SPATIAL_CAP,
    LayerShape,
    Network,
    TileConfig,
    derive_tile_grid,
)

INIT_CYCLES = 9  # pipeline fill before the first PWC output of a tile burst


@dataclass(frozen=True)
class EngineConfig:
    """Engine-native geometry.  Tile sizes are fixed by the datapath; only
    the buffer-tiling cap is a free parameter."""

    T_d: int = 8
    T_k: int = 16
    T_n: int = 2
    T_m: int = 2
    H: int = 3
    W: int = 3
    spatial_cap: int = DEFAULT_SPATIAL_CAP

    def __post_init__(self):
        if (self.T_d, self.T_k, self.T_n, self.T_m, self.H, self.W) != (8, 16, 2, 2, 3, 3):
            raise ValueError("engine geometry is fixed at T_d=8, T_k=16, T_n=T_m=2, 3x3 kernels")
        if self.spatial_cap < self.T_n or self.spatial_cap % self.T_n:
            raise ValueError(f"spatial_cap {self.spatial_cap} must be a positive multiple of {self.T_n}")

    @property
    def dwc_macs(self) -> int:
        return self.T_d * self.H * self.W * self.T_n * self.T_m  # 288

    @property
    def pwc_macs(self) -> int:
        return self.T_d * self.T_k * self.T_n * self.T_m  # 512

    def tiling(self) -> TileConfig:
        return TileConfig(T_n=self.T_n, T_m=self.T_m, T_d=self.T_d, T_k=self.T_k)


@dataclass
class AccessCounters:
    """Element-level traffic at the modeled buffer boundaries."""

    dwc_act_reads: int = 0
    dwc_wgt_reads: int = 0
    dwc_out_writes: int = 0
    pwc_act_reads: int = 0
    pwc_wgt_reads: int = 0
    pwc_psum_accesses: int = 0
    pwc_out_writes: int = 0

    def as_dict(self) -> dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def __add__(self, other: "AccessCounters") -> "AccessCounters":
        return AccessCounters(**{k: v + getattr(other, k) for k, v in self.as_dict().items()})


@dataclass
class CycleTrace:
    """Per-cycle engine occupancy: active MAC slots for each engine."""

    dwc_slots: np.ndarray
    pwc_slots: np.ndarray
    first_pwc_output_cycle: int

    @property
    def cycles(self) -> int:
        return int(self.dwc_slots.size)

    def dwc_active_cycles(self) -> int:
        return int(np.count_nonzero(self.dwc_slots))

    def pwc_active_cycles(self) -> int:
        return int(np.count_nonzero(self.pwc_slots))


@dataclass
class ZeroTally:
    zero: int = 0
    total: int = 0

    def count(self, values: np.ndarray) -> None:
        self.zero += int(np.count_nonzero(values == 0))
        self.total += int(values.size)

    @property
    def fraction(self) -> float:
        return self.zero / self.total if self.total else 0.0


@dataclass
class LayerParams:
    """Everything one layer needs besides its input: weights for both engines
    and the per-channel affine parameters applied after each."""

    dwc_w: QuantTensor
    pwc_w: QuantTensor
    dwc_ncv: NonConvSet
    pwc_ncv: NonConvSet


def dwc_tile(ifmap_tile: QuantTensor, weights: QuantTensor, stride: int) -> QuantTensor:
    """One DWC engine invocation: (T_r x T_c x 8) act8 -> (2 x 2 x 8) acc32."""
    if stride not in (1, 2):
        raise ValueError(f"unsupported stride {stride}")
    t_r = stride + 3  # (T_n - 1) * stride + 3 with T_n = 2
    if ifmap_tile.dtype != "act8" or ifmap_tile.dims != (t_r, t_r, 8):
        raise ValueError(f"expected act8 ifmap tile of {t_r}x{t_r}x8, got {ifmap_tile.dims}")
    if weights.dtype != "wgt8" or weights.dims != (3, 3, 8):
        raise ValueError(f"expected wgt8 kernel tile of 3x3x8, got {weights.dims}")
    src = ifmap_tile.data.astype(np.int64)
    wgt = weights.data.astype(np.int64)
    acc = np.zeros((2, 2, 8), dtype=np.int64)
    for i in range(2):
        for j in range(2):
            window = src[i * stride : i * stride + 3, j * stride : j * stride + 3, :]
            acc[i, j, :] = (window * wgt).sum(axis=(0, 1))
    return QuantTensor("acc32", acc)


def pwc_tile(act_tile: QuantTensor, weights: QuantTensor, acc_in: QuantTensor) -> QuantTensor:
    """One PWC engine invocation: accumulate one depth group into a 2x2x16
    partial-sum tile."""
    if act_tile.dtype != "act8" or act_tile.dims != (2, 2, 8):
        raise ValueError(f"expected act8 tile of 2x2x8, got {act_tile.dims}")
    if weights.dtype != "wgt8" or weights.dims != (8, 16):
        raise ValueError(f"expected wgt8 tile of 8x16, got {weights.dims}")
    if acc_in.dtype != "acc32" or acc_in.dims != (2, 2, 16):
        raise ValueError(f"expected acc32 tile of 2x2x16, got {acc_in.dims}")
    prod = np.tensordot(act_tile.data.astype(np.int64), weights.data.astype(np.int64), axes=([2], [0]))
    return QuantTensor("acc32", acc_in.data.astype(np.int64) + prod)


class _LayerRun:
    """Shared machinery for the fused and sequential execution modes."""

    def __init__(self, layer, ifmap, params, cfg):
        self.layer = layer
        self.cfg = cfg
        self.params = params
        _check_layer_inputs(layer, ifmap, params)
        self.grid = derive_tile_grid(layer, cfg.tiling(), cfg.spatial_cap)
        self.G = self.grid.depth_groups
        self.KG = self.grid.kernel_groups
        d_pad, k_pad = self.G * cfg.T_d, self.KG * cfg.T_k
        self.d_pad, self.k_pad = d_pad, k_pad
        self.valid_d = [min(cfg.T_d, layer.D - g * cfg.T_d) for g in range(self.G)]
        self.valid_k = [min(cfg.T_k, layer.K - g * cfg.T_k) for g in range(self.KG)]

        # Channel-padded operands; padded lanes compute zeros and are discarded.
        self.dwc_w = np.zeros((3, 3, d_pad), dtype=np.int64)
        self.dwc_w[:, :, : layer.D] = params.dwc_w.data
        self.pwc_w = np.zeros((d_pad, k_pad), dtype=np.int64)
        self.pwc_w[: layer.D, : layer.K] = params.pwc_w.data
        self.dwc_ncv = params.dwc_ncv.pad_to(d_pad)
        self.pwc_ncv = params.pwc_ncv.pad_to(k_pad)

        # Ifmap with explicit zero border covering padding plus any halo
        # overshoot of ragged edge tiles.
        tiles = [t for bt in self.grid.buffer_tiles for t in bt.positions]
        lo = layer.pad
        hi_r = max(0, max(t.in_row0 + t.in_rows for t in tiles) - layer.R)
        hi_c = max(0, max(t.in_col0 + t.in_cols for t in tiles) - layer.C)
        self.padded = np.zeros((lo + layer.R + hi_r, lo + layer.C + hi_c, d_pad), dtype=np.uint8)
        self.padded[lo : lo + layer.R, lo : lo + layer.C, : layer.D] = ifmap.data
        self.lo = lo

        self.counters = AccessCounters()

    def gather(self, bt, dg):
        """Stack the input tiles of one (buffer tile, depth group) visit:
        (positions, T_r, T_c, T_d) in int64."""
        d0 = dg * self.cfg.T_d
        parts = [
            self.padded[
                self.lo + t.in_row0 : self.lo + t.in_row0 + t.in_rows,
                self.lo + t.in_col0 : self.lo + t.in_col0 + t.in_cols,
                d0 : d0 + self.cfg.T_d,
            ]
            for t in bt.positions
        ]
        return np.stack(parts).astype(np.int64)

    def dwc_group(self, bt_index, bt, dg):
        """DWC for every position of one (buffer tile, depth group): returns
        the 8-bit intermediate tile stack (positions, 2, 2, T_d)."""
        s = self.layer.stride
        stack = self.gather(bt, dg)
        t_r, t_c = stack.shape[1], stack.shape[2]
        w = self.dwc_w[:, :, dg * self.cfg.T_d : (dg + 1) * self.cfg.T_d]
        acc = np.empty((stack.shape[0], 2, 2, self.cfg.T_d), dtype=np.int64)
        for i in range(2):
            for j in range(2):
                window = stack[:, i * s : i * s + 3, j * s : j * s + 3, :]
                acc[:, i, j, :] = np.einsum("phwd,hwd->pd", window, w)
        self.counters.dwc_act_reads += len(bt.positions) * t_r * t_c * self.valid_d[dg]
        if bt_index == 0:
            self.counters.dwc_wgt_reads += 9 * self.valid_d[dg]
        return self.dwc_ncv.apply(acc, channels=slice(dg * self.cfg.T_d, (dg + 1) * self.cfg.T_d))

    def tally_mid(self, tally, bt, mid, dg):
        """Count zeros among the valid intermediate elements of one visit."""
        if tally is None:
            return
        vd = self.valid_d[dg]
        for p, t in enumerate(bt.positions):
            tally.count(mid[p, : t.out_rows, : t.out_cols, :vd])

    def pwc_group(self, bt_index, bt, dg, mid, psum):
        """Accumulate one depth group of every position into the buffer
        tile's partial sums (positions, 2, 2, K_pad)."""
        d0 = dg * self.cfg.T_d
        p_cnt = len(bt.positions)
        flat = mid.astype(np.int64).reshape(p_cnt * 4, self.cfg.T_d)
        prod = flat @ self.pwc_w[d0 : d0 + self.cfg.T_d, :]
        psum += prod.reshape(p_cnt, 2, 2, self.k_pad)
        self.counters.pwc_act_reads += p_cnt * 4 * self.valid_d[dg] * self.KG
        if bt_index == 0:
            self.counters.pwc_wgt_reads += self.valid_d[dg] * self.layer.K
        if dg > 0:
            self.counters.pwc_psum_accesses += 2 * p_cnt * 4 * self.layer.K

    def write_ofmap(self, bt, psum, ofmap):
        assert abs(psum).max(initial=0) < 2**31, "partial sums exceed the 32-bit accumulator"
        out = self.pwc_ncv.apply(psum)
        for p, t in enumerate(bt.positions):
            ofmap[
                t.out_row0 : t.out_row0 + t.out_rows,
                t.out_col0 : t.out_col0 + t.out_cols,
                :,
            ] = out[p, : t.out_rows, : t.out_cols, : self.layer.K]
            self.counters.pwc_out_writes += t.out_rows * t.out_cols * self.layer.K


def _check_layer_inputs(layer: LayerShape, ifmap: QuantTensor, params: LayerParams) -> None:
    if layer.stride not in (1, 2):
        raise ValueError(f"unsupported stride {layer.stride}")
    if ifmap.dtype != "act8" or ifmap.dims != (layer.R, layer.C, layer.D):
        raise ValueError(
            f"ifmap must be act8 of {layer.R}x{layer.C}x{layer.D}, got {ifmap.dtype} {ifmap.dims}"
        )
    if params.dwc_w.dtype != "wgt8" or params.dwc_w.dims != (3, 3, layer.D):
        raise ValueError(f"DWC weights must be wgt8 of 3x3x{layer.D}, got {params.dwc_w.dims}")
    if params.pwc_w.dtype != "wgt8" or params.pwc_w.dims != (layer.D, layer.K):
        raise ValueError(f"PWC weights must be wgt8 of {layer.D}x{layer.K}, got {params.pwc_w.dims}")
    if len(params.dwc_ncv) != layer.D:
        raise ValueError(f"need {layer.D} DWC affine channels, got {len(params.dwc_ncv)}")
    if len(params.pwc_ncv) != layer.K:
        raise ValueError(f"need {layer.K} PWC affine channels, got {len(params.pwc_ncv)}")


def _fused_trace(run: _LayerRun) -> CycleTrace:
    """Pipeline occupancy for the fused schedule.  Per (buffer tile, depth
    group): 9 initiation cycles, then positions x kernel-groups PWC cycles;
    the DWC engine computes position p+1 while PWC drains position p."""
    cfg = run.cfg
    segments_d, segments_p = [], []
    for bt in run.grid.buffer_tiles:
        p_cnt = len(bt.positions)
        for dg in range(run.G):
            vd = run.valid_d[dg]
            kg_slots = np.array(
                [vd * run.valid_k[kg] * cfg.T_n * cfg.T_m for kg in range(run.KG)], dtype=np.int32
            )
            seg_len = INIT_CYCLES + p_cnt * run.KG
            dwc = np.zeros(seg_len, dtype=np.int32)
            dwc_slots = vd * 9 * cfg.T_n * cfg.T_m
            dwc[0] = dwc_slots
            for p in range(1, p_cnt):
                dwc[INIT_CYCLES + (p - 1) * run.KG] = dwc_slots
            pwc = np.zeros(seg_len, dtype=np.int32)
            pwc[INIT_CYCLES:] = np.tile(kg_slots, p_cnt)
            segments_d.append(dwc)
            segments_p.append(pwc)
    if not segments_d:  # degenerate zero-channel workload
        empty = np.zeros(0, dtype=np.int32)
        return CycleTrace(dwc_slots=empty, pwc_slots=empty, first_pwc_output_cycle=-1)
    return CycleTrace(
        dwc_slots=np.concatenate(segments_d),
        pwc_slots=np.concatenate(segments_p),
        first_pwc_output_cycle=INIT_CYCLES,
    )


def run_layer_fused(
    layer: LayerShape,
    ifmap: QuantTensor,
    params: LayerParams,
    cfg: EngineConfig = EngineConfig(),
    mid_tally: ZeroTally | None = None,
) -> tuple[QuantTensor, AccessCounters, CycleTrace]:
    """Execute one layer with DWC->PWC streaming through the intermediate
    register.  The intermediate activations never reach external traffic:
    only their per-kernel-group reads out of the register file are counted."""
    run = _LayerRun(layer, ifmap, params, cfg)
    ofmap = np.zeros((layer.N, layer.M, layer.K), dtype=np.uint8)
    for bt_i, bt in enumerate(run.grid.buffer_tiles):
        psum = np.zeros((len(bt.positions), 2, 2, run.k_pad), dtype=np.int64)
        for dg in range(run.G):
            mid = run.dwc_group(bt_i, bt, dg)
            run.tally_mid(mid_tally, bt, mid, dg)
            run.pwc_group(bt_i, bt, dg, mid, psum)
        run.write_ofmap(bt, psum, ofmap)
    return QuantTensor("act8", ofmap), run.counters, _fused_trace(run)


def run_layer_sequential(
    layer: LayerShape,
    ifmap: QuantTensor,
    params: LayerParams,
    cfg: EngineConfig = EngineConfig(),
    mid_tally: ZeroTally | None = None,
) -> tuple[QuantTensor, AccessCounters, CycleTrace]:
    """Baseline mode: materialize the whole DWC output as an external tensor,
    then run PWC over it.  Counters additionally include the intermediate
    writes; the trace has no DWC/PWC overlap."""
    run = _LayerRun(layer, ifmap, params, cfg)
    mid_full = np.zeros((layer.N, layer.M, run.d_pad), dtype=np.uint8)
    for bt_i, bt in enumerate(run.grid.buffer_tiles):
        for dg in range(run.G):
            mid = run.dwc_group(bt_i, bt, dg)
            d0 = dg * cfg.T_d
            for p, t in enumerate(bt.positions):
                mid_full[
                    t.out_row0 : t.out_row0 + t.out_rows,
                    t.out_col0 : t.out_col0 + t.out_cols,
                    d0 : d0 + cfg.T_d,
                ] = mid[p, : t.out_rows, : t.out_cols, :]
                run.counters.dwc_out_writes += t.out_rows * t.out_cols * run.valid_d[dg]
    if mid_tally is not None:
        mid_tally.count(mid_full[:, :, : layer.D])

    ofmap = np.zeros((layer.N, layer.M, layer.K), dtype=np.uint8)
    for bt_i, bt in enumerate(run.grid.buffer_tiles):
        psum = np.zeros((len(bt.positions), 2, 2, run.k_pad), dtype=np.int64)
        for dg in range(run.G):
            d0 = dg * cfg.T_d
            mid = np.zeros((len(bt.positions), 2, 2, cfg.T_d), dtype=np.uint8)
            for p, t in enumerate(bt.positions):
                mid[p, : t.out_rows, : t.out_cols, :] = mid_full[
                    t.out_row0 : t.out_row0 + t.out_rows,
                    t.out_col0 : t.out_col0 + t.out_cols,
                    d0 : d0 + cfg.T_d,
                ]
            run.pwc_group(bt_i, bt, dg, mid, psum)
        run.write_ofmap(bt, psum, ofmap)

    positions = sum(len(bt.positions) for bt in run.grid.buffer_tiles)
    dwc_cycles = positions * run.G
    pwc_cycles = positions * run.G * run.KG
    dwc = np.zeros(dwc_cycles + pwc_cycles, dtype=np.int32)
    dwc[:dwc_cycles] = 288
    pwc = np.zeros_like(dwc)
    pwc[dwc_cycles:] = 512
    trace = CycleTrace(dwc_slots=dwc, pwc_slots=pwc, first_pwc_output_cycle=dwc_cycles)
    return QuantTensor("act8", ofmap), run.counters, trace


@dataclass
class NetworkRunResult:
    ofmaps: list[QuantTensor] = field(default_factory=list)
    counters: list[AccessCounters] = field(default_factory=list)
    traces: list[CycleTrace] = field(default_factory=list)
    zero_stats: list[dict[str, float]] = field(default_factory=list)

    def total_counters(self) -> AccessCounters:
        total = AccessCounters()
        for c in self.counters:
            total = total + c
        return total


def run_network(
    net: Network,
    input_fmap: QuantTensor,
    params: list[LayerParams],
    cfg: EngineConfig = EngineConfig(),
    mode: str = "fused",
) -> NetworkRunResult:
    """Run every layer, feeding each output to the next layer's input.

    zero_stats reports, per layer, the zero fraction of the intermediate
    (post-DWC) activations and of the output activations.
    """
    if mode not in ("fused", "sequential"):
        raise ValueError(f"unknown mode {mode!r}")
    if len(params) != len(net.layers):
        raise ValueError(f"need parameters for {len(net.layers)} layers, got {len(params)}")
    run_layer = run_layer_fused if mode == "fused" else run_layer_sequential
    result = NetworkRunResult()
    current = input_fmap
    for layer, layer_params in zip(net.layers, params):
        tally = ZeroTally()
        ofmap, counters, trace = run_layer(layer, current, layer_params, cfg, mid_tally=tally)
        result.ofmaps.append(ofmap)
        result.counters.append(counters)
        result.traces.append(trace)
        result.zero_stats.append(
            {
                "dwc_zero_frac": tally.fraction,
                "pwc_zero_frac": float(np.count_nonzero(ofmap.data == 0) / ofmap.data.size),
            }
        )
        current = ofmap
    return result
