"""Command-line front end.

Four commands: simulate (run a network through the engine and dump outputs,
counters and zero statistics), explore (the 24-point loop-order/tiling sweep
plus the intermediate-access reduction analysis), timing (the analytic
latency/throughput report, optionally cross-checked against engine traces)
and golden (fused vs sequential vs naive-oracle bit-exactness on seeded
random data).

Exit codes: 0 success, 2 malformed or missing input, 3 network validation
violations, 4 timing crosscheck mismatch, 5 golden mismatch.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import datagen, dse, fileio, oracle, timing
from .engine import EngineConfig, LayerParams, run_layer_fused, run_layer_sequential, run_network
from .qformat import NonConvSet
from .tensors import zeros
from .workload import Network, builtin_mobilenet_v1_cifar10, load_network, validate_network

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_VALIDATION = 3
EXIT_CROSSCHECK = 4
EXIT_GOLDEN = 5

COUNTER_CSV_COLUMNS = [
    "layer", "dwc_act_reads", "dwc_wgt_reads", "dwc_out_writes",
    "pwc_act_reads", "pwc_wgt_reads", "pwc_psum_accesses", "pwc_out_writes",
]
ZERO_CSV_COLUMNS = ["layer", "dwc_zero_frac", "pwc_zero_frac"]


@dataclass
class RunManifest:
    """Resolved invocation: everything needed to reproduce a run byte-for-byte."""

    command: str
    network: str | None = None  # None selects the built-in workload
    seed: int | None = None
    out: str = "out"
    mode: str = "fused"
    freq_hz: float = 1e9
    spatial_cap: int = 8
    convention: str | None = None
    crosscheck: bool = False
    layers: list[int] | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))

    @property
    def t_period_ns(self) -> float:
        return 1e9 / self.freq_hz


def _load_net(manifest: RunManifest) -> Network:
    if manifest.network is None:
        return builtin_mobilenet_v1_cifar10()
    return load_network(manifest.network)


def _engine_config(manifest: RunManifest) -> EngineConfig:
    return EngineConfig(spatial_cap=manifest.spatial_cap)


def _out_dir(manifest: RunManifest) -> Path:
    out = Path(manifest.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    return out


def _load_bundle(net: Network, manifest: RunManifest):
    """File-based inputs: weight bundle and input tensor next to the network file."""
    if manifest.network is None:
        raise FileNotFoundError("no seed given and no network directory to load tensors from")
    base = Path(manifest.network).parent
    input_path = base / "input.t"
    if not input_path.exists():
        raise FileNotFoundError(str(input_path))
    input_fmap = fileio.read_tensor(input_path)
    params = []
    for layer in net.layers:
        paths = fileio.bundle_paths(base, layer.index)
        for p in paths.values():
            if not p.exists():
                raise FileNotFoundError(str(p))
        params.append(
            LayerParams(
                dwc_w=fileio.read_tensor(paths["dwc_w"]),
                pwc_w=fileio.read_tensor(paths["pwc_w"]),
                dwc_ncv=fileio.read_nonconv(paths["dwc_ncv"]),
                pwc_ncv=fileio.read_nonconv(paths["pwc_ncv"]),
            )
        )
    return input_fmap, params


def cmd_simulate(manifest: RunManifest) -> int:
    try:
        net = _load_net(manifest)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    violations = validate_network(net)
    if violations:
        for v in violations:
            print(f"validation: {v}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        if manifest.seed is not None:
            input_fmap, params = datagen.random_network_data(net, manifest.seed)
        else:
            input_fmap, params = _load_bundle(net, manifest)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    result = run_network(net, input_fmap, params, _engine_config(manifest), mode=manifest.mode)
    out = _out_dir(manifest)
    for layer, ofmap in zip(net.layers, result.ofmaps):
        fileio.write_tensor(out / f"L{layer.index}.ofmap.t", ofmap)
    with open(out / "counters.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(COUNTER_CSV_COLUMNS)
        for layer, counters in zip(net.layers, result.counters):
            row = counters.as_dict()
            writer.writerow([layer.index] + [row[c] for c in COUNTER_CSV_COLUMNS[1:]])
        total = result.total_counters().as_dict()
        writer.writerow(["total"] + [total[c] for c in COUNTER_CSV_COLUMNS[1:]])
    with open(out / "zero_stats.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(ZERO_CSV_COLUMNS)
        for layer, stats in zip(net.layers, result.zero_stats):
            writer.writerow([layer.index, f"{stats['dwc_zero_frac']:.6f}", f"{stats['pwc_zero_frac']:.6f}"])
    print(f"simulated {len(net.layers)} layers ({manifest.mode}) -> {out}")
    return EXIT_OK


def cmd_explore(manifest: RunManifest) -> int:
    try:
        net = _load_net(manifest)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    out = _out_dir(manifest)
    reports = [dse.network_access_report(net, pt) for pt in dse.sweep_points()]
    dse.write_dse_csv(out / "dse.csv", reports)
    conventions = [manifest.convention] if manifest.convention else list(dse.REDUCTION_CONVENTIONS)
    dse.write_reduction_csv(out / "reduction.csv", [dse.intermediate_reduction(net, c) for c in conventions])
    best = dse.rank_configs(net)[0].point
    print(f"best: {best.order} Tn=Tm={best.T_n} case {best.case} (T_d={best.T_d}, T_k={best.T_k})")
    return EXIT_OK


def _zero_params(layer) -> LayerParams:
    """Shape-only parameters; the cycle trace does not depend on data."""
    return LayerParams(
        dwc_w=zeros((3, 3, layer.D), "wgt8"),
        pwc_w=zeros((layer.D, layer.K), "wgt8"),
        dwc_ncv=NonConvSet(np.zeros(layer.D, dtype=np.int64), np.zeros(layer.D, dtype=np.int64)),
        pwc_ncv=NonConvSet(np.zeros(layer.K, dtype=np.int64), np.zeros(layer.K, dtype=np.int64)),
    )


def cmd_timing(manifest: RunManifest) -> int:
    try:
        net = _load_net(manifest)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    cfg = _engine_config(manifest)
    report = timing.network_timing(net, cfg, manifest.t_period_ns)
    out = _out_dir(manifest)
    timing.write_timing_json(out / "timing.json", report)
    print(f"mean throughput {report.mean_gops:.2f} GOPS, total {report.total_ns:.0f} ns")
    if manifest.crosscheck:
        for layer in net.layers:
            ifmap = zeros((layer.R, layer.C, layer.D), "act8")
            _, _, trace = run_layer_fused(layer, ifmap, _zero_params(layer), cfg)
            if not timing.crosscheck_trace(layer, trace, cfg):
                model = timing.layer_latency(layer, cfg, manifest.t_period_ns)
                print(
                    f"crosscheck mismatch: layer {layer.index} trace {trace.cycles} cycles "
                    f"(first output {trace.first_pwc_output_cycle}) vs model {model.total_cycles}",
                    file=sys.stderr,
                )
                return EXIT_CROSSCHECK
        print(f"crosscheck: {len(net.layers)} layers match the cycle model")
    return EXIT_OK


def cmd_golden(manifest: RunManifest, trials: int = 2) -> int:
    net = builtin_mobilenet_v1_cifar10()
    selected = manifest.layers if manifest.layers is not None else [l.index for l in net.layers]
    unknown = [i for i in selected if not 0 <= i < len(net.layers)]
    if unknown:
        print(f"error: no such layer {unknown}", file=sys.stderr)
        return EXIT_INPUT
    cfg = _engine_config(manifest)
    seed = manifest.seed if manifest.seed is not None else 0
    out = _out_dir(manifest)
    lines = []
    status = EXIT_OK
    for idx in selected:
        layer = net.layers[idx]
        for trial in range(trials):
            rng = datagen.layer_rng(seed, idx, trial)
            ifmap = datagen.random_ifmap(layer, rng)
            params = datagen.random_layer_params(layer, rng)
            fused, _, _ = run_layer_fused(layer, ifmap, params, cfg)
            seq, _, _ = run_layer_sequential(layer, ifmap, params, cfg)
            ref = oracle.ref_layer(layer, ifmap, params.dwc_w, params.pwc_w, params.dwc_ncv, params.pwc_ncv)
            for name, got in (("sequential", seq), ("oracle", ref)):
                if not np.array_equal(fused.data, got.data):
                    coord = tuple(int(v) for v in np.argwhere(fused.data != got.data)[0])
                    lines.append(f"L{idx} trial {trial}: fused != {name} first at {coord}")
                    status = EXIT_GOLDEN
                    break
            else:
                continue
            break
        else:
            lines.append(f"L{idx}: fused == sequential == oracle over {trials} trials")
    result = "PASS" if status == EXIT_OK else "FAIL"
    lines.append(f"RESULT: {result}")
    (out / "golden.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    for line in lines:
        print(line)
    return status


def _parse_layers(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part != ""]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dscsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--network", default=None, help="network JSON (default: built-in MobileNetV1/CIFAR10)")
        p.add_argument("--seed", type=int, default=None, help="seed for generated tensors")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--spatial-cap", type=int, default=8, dest="spatial_cap")

    p = sub.add_parser("simulate", help="run a network through the engine model")
    common(p)
    p.add_argument("--mode", choices=("fused", "sequential"), default="fused")

    p = sub.add_parser("explore", help="loop-order/tiling sweep and reduction analysis")
    common(p)
    p.add_argument("--convention", choices=dse.REDUCTION_CONVENTIONS, default=None)

    p = sub.add_parser("timing", help="latency/throughput model")
    common(p)
    p.add_argument("--freq", type=float, default=1e9, dest="freq_hz", help="clock frequency in Hz")
    p.add_argument("--crosscheck", action="store_true", help="verify the model against engine traces")

    p = sub.add_parser("golden", help="fused vs sequential vs oracle bit-exactness")
    common(p)
    p.add_argument("--layers", type=_parse_layers, default=None, help="comma-separated layer indices")

    return parser


def manifest_from_args(args: argparse.Namespace) -> RunManifest:
    manifest = RunManifest(command=args.command)
    for name in ("network", "seed", "out", "mode", "freq_hz", "spatial_cap", "convention", "crosscheck", "layers"):
        if hasattr(args, name):
            setattr(manifest, name, getattr(args, name))
    return manifest


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    manifest = manifest_from_args(args)
    handler = {
        "simulate": cmd_simulate,
        "explore": cmd_explore,
        "timing": cmd_timing,
        "golden": cmd_golden,
    }[manifest.command]
    return handler(manifest)


if __name__ == "__main__":
    sys.exit(main())
