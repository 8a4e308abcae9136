"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
report.  Silicon-only results (power, energy efficiency, area, trained-model
zero percentages) are out of reach at desk scale and are replaced by the
property checks in criterion 9.
"""


import numpy as np
import pytest

from dscsim import datagen, oracle
from dscsim.dse import (
    CASE_TABLE,
    NATIVE_POINT,
    SweepPoint,
    intermediate_reduction,
    network_access_report,
    pe_array_size,
    rank_configs,
)
from dscsim.engine import EngineConfig, LayerParams, run_layer_fused, run_layer_sequential, run_network
from dscsim.qformat import NonConvParams, NonConvSet, QFixed, fold_bn_quant, BnQuantParams
from dscsim.tensors import zeros
from dscsim.timing import crosscheck_trace, layer_latency, network_timing
from dscsim.workload import builtin_mobilenet_v1_cifar10

CFG = EngineConfig()


def _report(num: int, desc: str, passed: bool) -> None:
    print(f"ACCEPTANCE {num} ({desc}): {'PASS' if passed else 'FAIL'}")


@pytest.fixture(scope="module")
def zero_runs():
    """Counters and traces from data-independent (all-zero) layer runs."""
    net = builtin_mobilenet_v1_cifar10()
    runs = {}
    for layer in net.layers:
        params = LayerParams(
            dwc_w=zeros((3, 3, layer.D), "wgt8"),
            pwc_w=zeros((layer.D, layer.K), "wgt8"),
            dwc_ncv=NonConvSet(np.zeros(layer.D), np.zeros(layer.D)),
            pwc_ncv=NonConvSet(np.zeros(layer.K), np.zeros(layer.K)),
        )
        ifmap = zeros((layer.R, layer.C, layer.D), "act8")
        _, counters, trace = run_layer_fused(layer, ifmap, params, CFG)
        runs[layer.index] = (counters, trace)
    return runs


def test_criterion_1_throughput_reproduction(net):
    ok = False
    try:
        rep = network_timing(net, CFG, t_period_ns=1.0)
        for l in rep.layers[0:5]:
            assert l.throughput_gops == 1024.0, f"layer {l.index}"
        for l in rep.layers[5:11]:
            assert abs(l.throughput_gops - 973.55) <= 0.01, f"layer {l.index}"
        for l in rep.layers[11:13]:
            assert abs(l.throughput_gops - 905.64) <= 0.01, f"layer {l.index}"
        assert abs(rep.mean_gops - 981.42) / 981.42 <= 0.005
        ok = True
    finally:
        _report(1, "per-layer throughput 1024/973.55/905.64, mean near 981.42", ok)


def test_criterion_2_latency_equation_crosscheck(net, zero_runs):
    ok = False
    try:
        for layer in net.layers:
            _, trace = zero_runs[layer.index]
            model = layer_latency(layer, CFG)
            assert trace.cycles == model.total_cycles, f"layer {layer.index}"
            assert trace.first_pwc_output_cycle == 9, f"layer {layer.index}"
            assert crosscheck_trace(layer, trace, CFG)
        ok = True
    finally:
        _report(2, "engine trace equals cycle equations, first output at cycle 9", ok)


def test_criterion_3_access_count_equivalence(net, zero_runs):
    ok = False
    try:
        for layer in net.layers:
            counters, _ = zero_runs[layer.index]
            n, m, d, k = layer.N, layer.M, layer.D, layer.K
            t_r = layer.stride + 3
            assert counters.dwc_wgt_reads == 9 * d
            assert counters.pwc_wgt_reads == d * k
            assert counters.pwc_act_reads == n * m * d * k // 16
            assert counters.dwc_act_reads == t_r * t_r * d * n * m // 4
        ok = True
    finally:
        _report(3, "instrumented counters equal the closed-form access model", ok)


def test_criterion_4_bit_exact_equivalence(net):
    trials_per_layer = 8  # 8 x 13 = 104 trials >= 100
    ok = False
    try:
        for layer in net.layers:
            for trial in range(trials_per_layer):
                rng = datagen.layer_rng(2024, layer.index, trial)
                ifmap = datagen.random_ifmap(layer, rng)
                params = datagen.random_layer_params(layer, rng)
                fused, _, _ = run_layer_fused(layer, ifmap, params, CFG)
                seq, _, _ = run_layer_sequential(layer, ifmap, params, CFG)
                ref = oracle.ref_layer(
                    layer, ifmap, params.dwc_w, params.pwc_w, params.dwc_ncv, params.pwc_ncv
                )
                assert np.array_equal(fused.data, seq.data), f"layer {layer.index} trial {trial}"
                assert np.array_equal(fused.data, ref.data), f"layer {layer.index} trial {trial}"
        ok = True
    finally:
        _report(4, "fused == sequential == oracle on 104 seeded trials", ok)


def test_criterion_5_nonconv_exactness():
    ok = False
    try:
        rng = np.random.default_rng(55)
        xs = np.arange(-(1 << 16), (1 << 16) + 1, dtype=np.int64)
        for _ in range(10):
            p = NonConvParams(
                k=QFixed(int(rng.integers(-(1 << 19), (1 << 19) + 1))),
                b=QFixed(int(rng.integers(-(1 << 23), 1 << 23))),
            )
            got = NonConvSet([p.k.raw], [p.b.raw]).apply(xs[:, None], slice(0, 1))[:, 0].astype(np.int64)
            want = np.array([oracle.ref_nonconv_exact(int(x), p) for x in xs], dtype=np.int64)
            assert np.array_equal(got, want)

        cases = 0
        while cases < 10**6:
            s1, s2 = rng.uniform(0.005, 0.05, size=2)
            k_real = float(rng.uniform(-8.0, 8.0))
            b_real = float(rng.uniform(-100.0, 100.0))
            mu = float(rng.uniform(-3.0, 3.0))
            gamma = k_real * s2 / s1
            bn = BnQuantParams(
                gamma=gamma, beta=b_real * s2 + gamma * mu, mu=mu,
                sigma_sq=0.75, epsilon=0.25, s_a=float(s1), s_w=1.0, s_a_next=float(s2),
            )
            folded = fold_bn_quant(bn)
            assert not folded.saturated
            x = rng.integers(-(1 << 15), (1 << 15) + 1, size=100_000)
            fixed = NonConvSet([folded.k.raw], [folded.b.raw]).apply(x[:, None], slice(0, 1))[:, 0]
            real = oracle.ref_chain_real(x, bn)
            assert np.abs(fixed.astype(np.int64) - real).max() <= 1
            cases += x.size
        ok = True
    finally:
        _report(5, "exact-rational equality and <=1-step drift vs real chain", ok)


def test_criterion_6_pe_geometry_and_utilization(net, zero_runs):
    ok = False
    try:
        assert pe_array_size(NATIVE_POINT) == (288, 512)
        assert sum(pe_array_size(NATIVE_POINT)) == 800
        assert CFG.dwc_macs == 288 and CFG.pwc_macs == 512
        for layer in net.layers:
            _, trace = zero_runs[layer.index]
            active = trace.pwc_slots[trace.pwc_slots > 0]
            assert active.size > 0 and (active == 512).all(), f"layer {layer.index}"
        ok = True
    finally:
        _report(6, "PE array (288, 512), PWC fully busy on every active cycle", ok)


def test_criterion_7_dse_ranking(net):
    ok = False
    try:
        ranked = rank_configs(net)
        assert ranked[0].point == SweepPoint(order="La", T_n=2, case=6)
        for t_n in (1, 2):
            for case in CASE_TABLE:
                la = network_access_report(net, SweepPoint("La", t_n, case))
                lb = network_access_report(net, SweepPoint("Lb", t_n, case))
                assert lb.weight_total >= la.weight_total
                assert la.activation_total >= lb.activation_total
        ok = True
    finally:
        _report(7, "La/Tn=2/case6 ranks first; La-vs-Lb access ordering holds", ok)


def test_criterion_8_intermediate_elimination(net):
    # The total saving depends on the counting convention, so the explorer
    # emits both; only the raw convention has an independent oracle (summing
    # tensor sizes), pinned here at 40.1%.
    ok = False
    try:
        for convention in ("raw", "tableII"):
            rep = intermediate_reduction(net, convention)
            assert all(r.reduction > 0 for r in rep.rows)
        baseline = proposed = 0
        for layer in net.layers:
            in_sz = layer.R * layer.C * layer.D
            mid_sz = layer.N * layer.M * layer.D
            out_sz = layer.N * layer.M * layer.K
            baseline += in_sz + 2 * mid_sz + out_sz
            proposed += in_sz + out_sz
        want = 1.0 - proposed / baseline
        got = intermediate_reduction(net, "raw").total.reduction
        assert abs(got - want) == 0.0
        assert abs(got - 0.401) <= 0.001
        ok = True
    finally:
        _report(8, "intermediate elimination positive everywhere, raw total 40.1%", ok)


def test_criterion_9_zero_statistics_sanity(net):
    # Silicon measurements (TOPS/W, mW, area, and the trained model's
    # 97.4%/95.3% zero shares) are explicitly out of scope; the counters are
    # validated on analytic cases instead.
    ok = False
    try:
        params = []
        for layer in net.layers:
            params.append(
                LayerParams(
                    dwc_w=zeros((3, 3, layer.D), "wgt8"),
                    pwc_w=zeros((layer.D, layer.K), "wgt8"),
                    dwc_ncv=NonConvSet(np.full(layer.D, 65536), np.full(layer.D, -65536)),
                    pwc_ncv=NonConvSet(np.full(layer.K, 65536), np.full(layer.K, -65536)),
                )
            )
        first = net.layers[0]
        result = run_network(net, zeros((first.R, first.C, first.D), "act8"), params, CFG)
        for stats in result.zero_stats:
            assert stats["dwc_zero_frac"] == 1.0
            assert stats["pwc_zero_frac"] == 1.0

        input_fmap, rand_params = datagen.random_network_data(net, seed=99)
        result = run_network(net, input_fmap, rand_params, CFG)
        for stats in result.zero_stats:
            assert 0.0 <= stats["dwc_zero_frac"] <= 1.0
            assert 0.0 <= stats["pwc_zero_frac"] <= 1.0
        ok = True
    finally:
        _report(9, "zero statistics bounded, all-zero workload fully sparse", ok)
