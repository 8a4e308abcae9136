"""Analytic latency, throughput and utilization model.

One (buffer tile, depth group) burst costs 9 initiation cycles plus one PWC
cycle per (spatial position, kernel group):

    tile_cycles  = 9 + ceil(n_t/T_n) * ceil(m_t/T_m) * ceil(K/T_k)
    total_cycles = tile_cycles * n_buf * ceil(D/T_d)

where n_t x m_t is the output extent of one buffer-tiled ifmap and n_buf the
number of such ifmaps.  Operations count each multiply and each add, i.e.
2 x MACs.  The model is cross-checked cycle-for-cycle against the engine
simulator's trace.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .engine import INIT_CYCLES, CycleTrace, EngineConfig
from .workload import LayerShape, Network, layer_mac_counts

DEFAULT_T_PERIOD_NS = 1.0  # 1 GHz


def tile_latency(n_t: int, m_t: int, K: int, cfg: EngineConfig = EngineConfig()) -> int:
    """Cycles for one buffer tile and one depth group."""
    return INIT_CYCLES + math.ceil(n_t / cfg.T_n) * math.ceil(m_t / cfg.T_m) * math.ceil(K / cfg.T_k)


@dataclass(frozen=True)
class LayerTiming:
    index: int
    lat_tile: int
    n_buf: int
    depth_groups: int
    total_cycles: int
    total_ns: float
    ops: int
    throughput_gops: float
    dwc_utilization: float
    pwc_utilization: float


@dataclass(frozen=True)
class TimingReport:
    t_period_ns: float
    layers: tuple[LayerTiming, ...]

    @property
    def total_cycles(self) -> int:
        return sum(l.total_cycles for l in self.layers)

    @property
    def total_ns(self) -> float:
        return self.total_cycles * self.t_period_ns

    @property
    def mean_gops(self) -> float:
        """Unweighted mean of the per-layer throughputs."""
        return sum(l.throughput_gops for l in self.layers) / len(self.layers)

    @property
    def mean_gops_weighted(self) -> float:
        """Ops-weighted mean: total ops over total time."""
        return sum(l.ops for l in self.layers) / self.total_ns


def layer_latency(
    layer: LayerShape, cfg: EngineConfig = EngineConfig(), t_period_ns: float = DEFAULT_T_PERIOD_NS
) -> LayerTiming:
    cap = cfg.spatial_cap
    n_t, m_t = min(layer.N, cap), min(layer.M, cap)
    lat_tile = tile_latency(n_t, m_t, layer.K, cfg)
    n_buf = math.ceil(layer.N / cap) * math.ceil(layer.M / cap)
    depth_groups = math.ceil(layer.D / cfg.T_d)
    total_cycles = lat_tile * n_buf * depth_groups
    total_ns = total_cycles * t_period_ns
    dwc_macs, pwc_macs = layer_mac_counts(layer)
    ops = 2 * (dwc_macs + pwc_macs)
    # One DWC cycle per spatial position per depth group; PWC busy on every
    # non-initiation cycle.
    positions = math.ceil(n_t / cfg.T_n) * math.ceil(m_t / cfg.T_m)
    dwc_active = positions * n_buf * depth_groups
    pwc_active = (lat_tile - INIT_CYCLES) * n_buf * depth_groups
    return LayerTiming(
        index=layer.index,
        lat_tile=lat_tile,
        n_buf=n_buf,
        depth_groups=depth_groups,
        total_cycles=total_cycles,
        total_ns=total_ns,
        ops=ops,
        throughput_gops=ops / total_ns,
        dwc_utilization=dwc_active / total_cycles,
        pwc_utilization=pwc_active / total_cycles,
    )


def network_timing(
    net: Network, cfg: EngineConfig = EngineConfig(), t_period_ns: float = DEFAULT_T_PERIOD_NS
) -> TimingReport:
    return TimingReport(
        t_period_ns=t_period_ns,
        layers=tuple(layer_latency(l, cfg, t_period_ns) for l in net.layers),
    )


def initiation_overhead(layer: LayerShape, cfg: EngineConfig = EngineConfig()) -> int:
    """Cycles attributable to pipeline fill: 9 per (buffer tile, depth group)."""
    n_buf = math.ceil(layer.N / cfg.spatial_cap) * math.ceil(layer.M / cfg.spatial_cap)
    return INIT_CYCLES * n_buf * math.ceil(layer.D / cfg.T_d)


def crosscheck_trace(
    layer: LayerShape, trace: CycleTrace, cfg: EngineConfig = EngineConfig()
) -> bool:
    """True iff the instrumented trace matches the closed-form cycle count
    and the first PWC output lands on cycle 9."""
    model = layer_latency(layer, cfg)
    return trace.cycles == model.total_cycles and trace.first_pwc_output_cycle == INIT_CYCLES


def report_to_dict(report: TimingReport) -> dict:
    return {
        "t_period_ns": report.t_period_ns,
        "layers": [
            {
                "index": l.index,
                "cycles": l.total_cycles,
                "ns": l.total_ns,
                "ops": l.ops,
                "gops": l.throughput_gops,
                "dwc_util": l.dwc_utilization,
                "pwc_util": l.pwc_utilization,
            }
            for l in report.layers
        ],
        "mean_gops": report.mean_gops,
        "mean_gops_weighted": report.mean_gops_weighted,
        "total_ns": report.total_ns,
    }


def write_timing_json(path, report: TimingReport) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report_to_dict(report), fh, indent=2)
        fh.write("\n")
