"""Closed-form design-space exploration over loop orders and tile sizes.

Two loop orders are modeled for the five convolution loops (window MACs,
tile channels, spatial scan, input channels, output kernels), differing in
whether the spatial scan sits inside or outside the input-channel walk:

    La: spatial scan inside the depth walk -- weights are layer resident
        (read once), but partial sums are revisited on every depth group.
    Lb: depth walk inside the spatial scan -- partial sums accumulate
        locally, but weight tiles are re-read for every spatial tile.

Per-layer access counts under La with the native tiling reproduce the engine
simulator's instrumented counters exactly; the Lb columns extend the same
counting convention.  All quotients are ceilinged so non-divisible shapes are
costed conservatively.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

from .workload import KERNEL, LayerShape, Network

LOOP_ORDERS = ("La", "Lb")

#: Tiling cases: case index -> (T_d, T_k).
CASE_TABLE = {1: (4, 4), 2: (4, 8), 3: (4, 16), 4: (8, 4), 5: (8, 8), 6: (8, 16)}


@dataclass(frozen=True)
class SweepPoint:
    order: str
    T_n: int
    case: int

    def __post_init__(self):
        if self.order not in LOOP_ORDERS:
            raise ValueError(f"unknown loop order {self.order!r}")
        if self.T_n not in (1, 2):
            raise ValueError(f"spatial tile must be 1 or 2, got {self.T_n}")
        if self.case not in CASE_TABLE:
            raise ValueError(f"unknown case {self.case}")

    @property
    def T_m(self) -> int:
        return self.T_n

    @property
    def T_d(self) -> int:
        return CASE_TABLE[self.case][0]

    @property
    def T_k(self) -> int:
        return CASE_TABLE[self.case][1]


NATIVE_POINT = SweepPoint(order="La", T_n=2, case=6)


def sweep_points() -> list[SweepPoint]:
    """All 24 points: 2 loop orders x 2 spatial tilings x 6 cases."""
    return [
        SweepPoint(order=o, T_n=t, case=c)
        for o in LOOP_ORDERS
        for t in (1, 2)
        for c in sorted(CASE_TABLE)
    ]


def pe_array_size(pt: SweepPoint) -> tuple[int, int]:
    """MAC slots of each engine: DWC = T_d*9*T_n*T_m, PWC = T_d*T_k*T_n*T_m."""
    spatial = pt.T_n * pt.T_m
    return pt.T_d * KERNEL * KERNEL * spatial, pt.T_d * pt.T_k * spatial


@dataclass(frozen=True)
class AccessRow:
    """Element accesses of one layer under one sweep point."""

    layer: int
    dwc_act: int
    dwc_wgt: int
    pwc_act: int
    pwc_wgt: int
    psum: int

    @property
    def activation(self) -> int:
        """Activation-side traffic including partial sums."""
        return self.dwc_act + self.pwc_act + self.psum

    @property
    def weight(self) -> int:
        return self.dwc_wgt + self.pwc_wgt


def access_counts(layer: LayerShape, pt: SweepPoint) -> AccessRow:
    n, m, d, k = layer.N, layer.M, layer.D, layer.K
    spatial_tiles = math.ceil(n / pt.T_n) * math.ceil(m / pt.T_m)
    t_r = (pt.T_n - 1) * layer.stride + KERNEL
    t_c = (pt.T_m - 1) * layer.stride + KERNEL
    dwc_act = t_r * t_c * d * spatial_tiles
    pwc_act = n * m * d * math.ceil(k / pt.T_k)
    if pt.order == "La":
        dwc_wgt = KERNEL * KERNEL * d
        pwc_wgt = d * k
        psum = 2 * n * m * k * (math.ceil(d / pt.T_d) - 1)
    else:
        dwc_wgt = KERNEL * KERNEL * d * spatial_tiles
        pwc_wgt = d * k * spatial_tiles
        psum = 0
    return AccessRow(
        layer=layer.index,
        dwc_act=dwc_act,
        dwc_wgt=dwc_wgt,
        pwc_act=pwc_act,
        pwc_wgt=pwc_wgt,
        psum=psum,
    )


@dataclass(frozen=True)
class AccessReport:
    point: SweepPoint
    rows: tuple[AccessRow, ...]

    def _sum(self, name: str) -> int:
        return sum(getattr(r, name) for r in self.rows)

    @property
    def activation_total(self) -> int:
        return self._sum("activation")

    @property
    def weight_total(self) -> int:
        return self._sum("weight")

    @property
    def psum_total(self) -> int:
        return self._sum("psum")

    @property
    def buffer_total(self) -> int:
        """Activation + weight traffic without the partial-sum store."""
        return self.activation_total - self.psum_total + self.weight_total

    @property
    def total(self) -> int:
        return self.activation_total + self.weight_total


def network_access_report(net: Network, pt: SweepPoint) -> AccessReport:
    return AccessReport(point=pt, rows=tuple(access_counts(l, pt) for l in net.layers))


def rank_configs(net: Network, points: list[SweepPoint] | None = None) -> list[AccessReport]:
    """Order sweep points by total access count, cheapest first.

    The primary key is the external buffer traffic (activations + weights);
    the partial-sum store separates otherwise-identical points (it is the
    only term the channel tile T_d influences), then smaller PE arrays and
    lower case indices settle what remains.
    """
    reports = [network_access_report(net, pt) for pt in (points or sweep_points())]

    def key(rep: AccessReport):
        pe = sum(pe_array_size(rep.point))
        return (rep.buffer_total, rep.psum_total, pe, rep.point.case, rep.point.order, rep.point.T_n)

    return sorted(reports, key=key)


REDUCTION_CONVENTIONS = ("raw", "tableII")


@dataclass(frozen=True)
class ReductionRow:
    layer: int
    baseline: int
    proposed: int

    @property
    def reduction(self) -> float:
        return 1.0 - self.proposed / self.baseline if self.baseline else 0.0


@dataclass(frozen=True)
class ReductionReport:
    convention: str
    rows: tuple[ReductionRow, ...]

    @property
    def total(self) -> ReductionRow:
        return ReductionRow(
            layer=-1,
            baseline=sum(r.baseline for r in self.rows),
            proposed=sum(r.proposed for r in self.rows),
        )


def intermediate_reduction(net: Network, convention: str = "raw") -> ReductionReport:
    """Activation-access saving from keeping the intermediate tensor on chip.

    raw:     count each tensor element once -- baseline touches DWC input,
             the intermediate twice (write + read) and PWC output; the
             proposed design drops the intermediate entirely.
    tableII: baseline uses the La per-tile read counts for DWC and PWC input
             plus one write each for intermediate and output; the proposed
             design removes both intermediate terms.
    """
    if convention not in REDUCTION_CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    rows = []
    for layer in net.layers:
        n, m, d, k = layer.N, layer.M, layer.D, layer.K
        if convention == "raw":
            baseline = layer.R * layer.C * d + 2 * n * m * d + n * m * k
            proposed = layer.R * layer.C * d + n * m * k
        else:
            counts = access_counts(layer, NATIVE_POINT)
            baseline = counts.dwc_act + n * m * d + counts.pwc_act + n * m * k
            proposed = counts.dwc_act + n * m * k
        rows.append(ReductionRow(layer=layer.index, baseline=baseline, proposed=proposed))
    return ReductionReport(convention=convention, rows=tuple(rows))


DSE_CSV_COLUMNS = [
    "order", "Tn", "Tm", "Td", "Tk", "layer",
    "dwc_act", "dwc_wgt", "pwc_act", "pwc_wgt", "psum", "pe_dwc", "pe_pwc",
]

REDUCTION_CSV_COLUMNS = ["convention", "layer", "baseline", "proposed", "reduction_pct"]


def write_dse_csv(path, reports: list[AccessReport]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(DSE_CSV_COLUMNS)
        for rep in reports:
            pt = rep.point
            pe_dwc, pe_pwc = pe_array_size(pt)
            common = [pt.order, pt.T_n, pt.T_m, pt.T_d, pt.T_k]
            for row in rep.rows:
                writer.writerow(
                    common
                    + [row.layer, row.dwc_act, row.dwc_wgt, row.pwc_act, row.pwc_wgt, row.psum, pe_dwc, pe_pwc]
                )
            writer.writerow(
                common
                + [
                    "total",
                    rep._sum("dwc_act"),
                    rep._sum("dwc_wgt"),
                    rep._sum("pwc_act"),
                    rep._sum("pwc_wgt"),
                    rep.psum_total,
                    pe_dwc,
                    pe_pwc,
                ]
            )


def write_reduction_csv(path, reports: list[ReductionReport]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(REDUCTION_CSV_COLUMNS)
        for rep in reports:
            for row in list(rep.rows) + [rep.total]:
                label = "total" if row.layer < 0 else row.layer
                writer.writerow([rep.convention, label, row.baseline, row.proposed, f"{100.0 * row.reduction:.4f}"])
