"""Command line entry point: ``compassqec {code,sample,decode,threshold,gap}``.

Exit codes: 0 on success, 1 when an experiment fails, 2 for bad configuration.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .codes import Deformation, code_distance, describe, make_code
from .experiment import (
    DECODERS,
    ConfigError,
    ExperimentConfig,
    ExperimentError,
    circuit_graph,
    gap_sweep,
    run_experiment,
    write_gap_outputs,
)
from .frames import ShotBatch, simulate
from .noise import NoiseParams
from .shotfile import ShotFile

EXIT_OK, EXIT_EXPERIMENT, EXIT_CONFIG = 0, 1, 2


def _add_code_args(p: argparse.ArgumentParser, multi: bool = False) -> None:
    if multi:
        p.add_argument("--d", type=int, nargs="+")
        p.add_argument("--ell", type=int, nargs="+")
        p.add_argument("--deformation", nargs="+", choices=[m.value for m in Deformation])
    else:
        p.add_argument("--d", type=int, required=True)
        p.add_argument("--ell", type=int, default=3)
        p.add_argument("--deformation", default="css", choices=[m.value for m in Deformation])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="compassqec", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    code = sub.add_parser("code", help="inspect a code")
    code_sub = code.add_subparsers(dest="action", required=True)
    desc = code_sub.add_parser("describe", help="print stabilizers and logicals as JSON")
    _add_code_args(desc)
    desc.add_argument("--distance", action="store_true", help="also compute the distance by brute force")

    sample = sub.add_parser("sample", help="sample shots to a file")
    _add_code_args(sample)
    sample.add_argument("--noise", choices=("hbd", "code_capacity"), default="hbd")
    sample.add_argument("--p", type=float, required=True)
    sample.add_argument("--eta", type=float, default=0.5)
    sample.add_argument("--basis", choices=("X", "Z"), default="Z")
    sample.add_argument("--rounds", type=int)
    sample.add_argument("--shots", type=int, required=True)
    sample.add_argument("--seed", type=int, required=True)
    sample.add_argument("--out", required=True)
    sample.add_argument("--dem", help="also write the detector error model as text, hyperedges split with '^'")

    decode = sub.add_parser("decode", help="decode a shot file")
    decode.add_argument("shots_file")
    decode.add_argument("--decoder", choices=DECODERS, default="mwpm")
    decode.add_argument("--dot", help="write the matching graph in Graphviz DOT format")
    decode.add_argument("--predictions", help="write predicted observable flips as .npy")

    thr = sub.add_parser("threshold", help="scan a p grid and fit thresholds")
    thr.add_argument("--config", help="JSON config file; flags below override it")
    _add_code_args(thr, multi=True)
    thr.add_argument("--noise", choices=("hbd", "code_capacity"))
    thr.add_argument("--p", type=float, nargs="+")
    thr.add_argument("--eta", type=float, nargs="+")
    thr.add_argument("--decoders", nargs="+", choices=DECODERS)
    thr.add_argument("--basis", choices=("X", "Z", "both"))
    thr.add_argument("--rounds", type=int)
    thr.add_argument("--shots", type=int)
    thr.add_argument("--seed", type=int)
    thr.add_argument("--bootstrap", type=int)
    thr.add_argument("--out")
    thr.add_argument("--no-plots", action="store_true")

    gap = sub.add_parser("gap", help="per-shot signed complementary gaps")
    _add_code_args(gap)
    gap.add_argument("--p", type=float, required=True)
    gap.add_argument("--eta", type=float, nargs="+", required=True)
    gap.add_argument("--basis", choices=("X", "Z"), default="Z")
    gap.add_argument("--rounds", type=int)
    gap.add_argument("--decoder", choices=("mwpm", "corr"), default="mwpm")
    gap.add_argument("--shots", type=int, required=True)
    gap.add_argument("--seed", type=int, required=True)
    gap.add_argument("--out", required=True)
    gap.add_argument("--no-plots", action="store_true")
    return parser


def _cmd_code(args) -> int:
    code = make_code(args.d, args.ell, args.deformation)
    doc = describe(code)
    if args.distance:
        doc["distance"] = code_distance(code)
    print(json.dumps(doc, indent=2))
    return EXIT_OK


def _spec_from_args(args) -> dict:
    return {
        "d": args.d,
        "ell": args.ell,
        "deformation": args.deformation,
        "noise": args.noise,
        "p": args.p,
        "eta": args.eta,
        "basis": args.basis,
        "rounds": args.rounds if args.rounds is not None else args.d,
    }


def _cmd_sample(args) -> int:
    from .codecap import code_capacity_dem, sample_code_capacity
    from .dem import extract_dem
    from .noise import hbd_channels
    from .circuit import build_memory_circuit

    spec = _spec_from_args(args)
    code = make_code(args.d, args.ell, args.deformation)
    params = NoiseParams(args.p, args.eta)
    if args.noise == "code_capacity":
        cc = sample_code_capacity(code, params, args.shots, args.seed)
        batch = ShotBatch(cc.syndromes, cc.flips, args.seed)
        dem = code_capacity_dem(code, params) if args.dem else None
    else:
        circuit = build_memory_circuit(code, args.basis, spec["rounds"], hbd_channels(params))
        batch = simulate(circuit, args.shots, args.seed)
        dem = extract_dem(circuit) if args.dem else None
    ShotFile(batch, spec).save(args.out)
    if dem is not None:
        from .dem import decompose_hyperedges, decomposed_to_text

        Path(args.dem).write_text(decomposed_to_text(decompose_hyperedges(dem)))
    print(json.dumps({"shots": batch.shots, "sha256": batch.digest(), "out": args.out}))
    return EXIT_OK


def _graph_for(spec: dict):
    from .codecap import code_capacity_dem
    from .dem import decompose_hyperedges
    from .matching import to_matching_graph

    code = make_code(spec["d"], spec["ell"], spec["deformation"])
    params = NoiseParams(spec["p"], spec["eta"])
    if spec["noise"] == "code_capacity":
        return code, params, to_matching_graph(decompose_hyperedges(code_capacity_dem(code, params)))
    return code, params, circuit_graph(code, spec["basis"], spec["rounds"], params)[1]


def _cmd_decode(args) -> int:
    from .correlated import CssCorrelatedConfig, CssGraphs, correlated_decode_batch, css_decode_batch
    from .matching import decode_batch, to_dot
    from .stats import estimate_rate

    shot_file = ShotFile.load(args.shots_file)
    spec, batch = shot_file.spec, shot_file.batch
    code, params, graph = _graph_for(spec)
    if args.dot:
        Path(args.dot).write_text(to_dot(graph))
    events = batch.detection_events
    if args.decoder == "mwpm":
        pred, _ = decode_batch(graph, events)
    elif args.decoder == "corr":
        _, pred = correlated_decode_batch(graph, events)
    else:
        if spec["noise"] != "code_capacity":
            raise ConfigError("decoder", f"{args.decoder} needs code_capacity shots")
        graphs = CssGraphs(code, params)
        cfg = CssCorrelatedConfig(args.decoder.split("-")[1].upper(), params.eta)
        pred = css_decode_batch(graphs, events, cfg)
    if args.predictions:
        np.save(args.predictions, pred)
    pt = estimate_rate(pred, batch.observable_flips, d=spec["d"], ell=spec["ell"],
                       deformation=spec["deformation"], eta=spec["eta"], p=spec["p"], decoder=args.decoder)
    print(json.dumps(pt.as_row()))
    return EXIT_OK


def _threshold_config(args) -> ExperimentConfig:
    doc = {"code": {}, "noise": {}, "run": {}}
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("--config", str(exc)) from exc
        if not isinstance(loaded, dict):
            raise ConfigError("<root>", "expected an object")
        for key, value in loaded.items():
            doc[key] = dict(value) if isinstance(value, dict) else value
    overrides = {
        ("code", "d"): args.d, ("code", "ell"): args.ell, ("code", "deformation"): args.deformation,
        ("noise", "model"): args.noise, ("noise", "p"): args.p, ("noise", "eta"): args.eta,
        ("run", "decoders"): args.decoders, ("run", "basis"): args.basis, ("run", "rounds"): args.rounds,
        ("run", "shots"): args.shots, ("run", "seed"): args.seed, ("run", "bootstrap"): args.bootstrap,
    }
    for (section, key), value in overrides.items():
        if value is not None:
            doc[section][key] = value
    if args.no_plots:
        doc["run"]["plots"] = False
    if args.out is not None:
        doc["output"] = args.out
    return ExperimentConfig.from_dict(doc)


def _cmd_threshold(args) -> int:
    cfg = _threshold_config(args)

    def progress(res):
        c = res.cell
        rates = " ".join(f"{dec}={f / res.shots:.4g}" for dec, f in res.failures.items())
        print(f"ell={c.ell} {c.deformation} eta={c.eta:g} d={c.d} p={c.p:g}: {rates}", file=sys.stderr)

    result = run_experiment(cfg, progress=progress)
    print(json.dumps({"output": str(result.output), "fits": result.fits, "gains": result.gains}, indent=2))
    return EXIT_OK


def _cmd_gap(args) -> int:
    runs = gap_sweep(args.d, args.ell, args.deformation, args.p, args.eta, args.shots, args.seed,
                     args.basis, args.rounds, args.decoder)
    write_gap_outputs(runs, Path(args.out), plots=not args.no_plots)
    summary = []
    for run in runs:
        g = np.array([rec.signed_gap for rec, _ in run.records])
        summary.append({"eta": run.eta, "shots": len(g), "failures": run.failures,
                        "mean_signed_gap": float(g.mean()), "negative": int(np.signbit(g).sum())})
    print(json.dumps(summary, indent=2))
    return EXIT_OK


COMMANDS = {"code": _cmd_code, "sample": _cmd_sample, "decode": _cmd_decode, "threshold": _cmd_threshold, "gap": _cmd_gap}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ExperimentError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EXPERIMENT


if __name__ == "__main__":
    sys.exit(main())
