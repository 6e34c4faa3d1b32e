"""Threshold sweeps: configuration, per-cell sampling and decoding, persisted results.

A cell is one (ell, deformation, eta, d, p) point.  Every decoder in the
config decodes the same shots of a cell, so decoder comparisons are paired.
Each cell draws from its own seed, derived from the run seed and the cell's
parameter values, so results do not depend on grid order or worker count.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .circuit import build_memory_circuit
from .codecap import code_capacity_dem, sample_code_capacity
from .codes import Deformation, make_code
from .correlated import CssCorrelatedConfig, CssGraphs, correlated_decode_batch, css_decode_batch
from .dem import decompose_hyperedges, extract_dem
from .frames import iter_simulate
from .matching import MatchingGraph, decode_batch, to_matching_graph
from .noise import NoiseParams, hbd_channels
from .stats import NoCrossing, RatePoint, decoder_gain, fit_threshold

DECODERS = ("mwpm", "css-xz", "css-zx", "corr")
NOISE_MODELS = ("hbd", "code_capacity")
NOISE_ALIASES = {"circuit": "hbd"}
BASES = ("Z", "X", "both")
WORKERS_ENV = "COMPASSQEC_WORKERS"

CSV_COLUMNS = (
    "d", "ell", "deformation", "noise", "basis", "rounds", "eta", "p", "decoder",
    "shots", "failures", "rate", "ci_low", "ci_high", "batch_sha256",
)


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class ExperimentError(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    distances: list[int]
    ell: list[int]
    deformation: list[str]
    noise: str
    p: list[float]
    eta: list[float]
    shots: int
    seed: int
    decoders: list[str] = field(default_factory=lambda: ["mwpm"])
    basis: str = "Z"
    rounds: int | None = None
    output: str = "results"
    bootstrap: int = 200
    plots: bool = True

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        def int_list(path, xs, lo):
            if not isinstance(xs, list) or not xs:
                raise ConfigError(path, "expected a non-empty list")
            for i, x in enumerate(xs):
                if isinstance(x, bool) or not isinstance(x, int) or x < lo:
                    raise ConfigError(f"{path}[{i}]", f"expected an integer >= {lo}, got {x!r}")

        def float_list(path, xs, lo, hi):
            if not isinstance(xs, list) or not xs:
                raise ConfigError(path, "expected a non-empty list")
            for i, x in enumerate(xs):
                if isinstance(x, bool) or not isinstance(x, (int, float)) or not lo <= x <= hi:
                    raise ConfigError(f"{path}[{i}]", f"expected a number in [{lo}, {hi}], got {x!r}")

        int_list("code.d", self.distances, 2)
        int_list("code.ell", self.ell, 1)
        for i, d in enumerate(self.distances):
            if d % 2 == 0:
                raise ConfigError(f"code.d[{i}]", f"distance must be odd, got {d}")
        if not isinstance(self.deformation, list) or not self.deformation:
            raise ConfigError("code.deformation", "expected a non-empty list")
        for i, name in enumerate(self.deformation):
            if name not in [m.value for m in Deformation]:
                raise ConfigError(f"code.deformation[{i}]", f"unknown deformation {name!r}")
        self.noise = NOISE_ALIASES.get(self.noise, self.noise)
        if self.noise not in NOISE_MODELS:
            raise ConfigError("noise.model", f"expected one of {NOISE_MODELS}, got {self.noise!r}")
        float_list("noise.p", self.p, 0.0, 0.5)
        float_list("noise.eta", self.eta, 0.0, float("inf"))
        if not isinstance(self.decoders, list) or not self.decoders:
            raise ConfigError("run.decoders", "expected a non-empty list")
        for i, dec in enumerate(self.decoders):
            if dec not in DECODERS:
                raise ConfigError(f"run.decoders[{i}]", f"unknown decoder {dec!r}")
            if dec.startswith("css-"):
                if self.noise != "code_capacity":
                    raise ConfigError(f"run.decoders[{i}]", f"{dec} needs code_capacity noise")
                if self.deformation != ["css"]:
                    raise ConfigError(f"run.decoders[{i}]", f"{dec} needs the undeformed code")
        if len(set(self.decoders)) != len(self.decoders):
            raise ConfigError("run.decoders", "decoders must be distinct")
        if self.basis not in BASES:
            raise ConfigError("run.basis", f"expected one of {BASES}, got {self.basis!r}")
        if self.rounds is not None and (isinstance(self.rounds, bool) or not isinstance(self.rounds, int) or self.rounds < 1):
            raise ConfigError("run.rounds", f"expected a positive integer or null, got {self.rounds!r}")
        if isinstance(self.shots, bool) or not isinstance(self.shots, int) or self.shots < 1:
            raise ConfigError("run.shots", f"expected a positive integer, got {self.shots!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("run.seed", "a non-negative integer seed is required")
        if isinstance(self.bootstrap, bool) or not isinstance(self.bootstrap, int) or self.bootstrap < 0:
            raise ConfigError("run.bootstrap", f"expected a non-negative integer, got {self.bootstrap!r}")
        if not isinstance(self.output, str) or not self.output:
            raise ConfigError("output", "expected a directory path")

    def to_dict(self) -> dict:
        return {
            "code": {"d": list(self.distances), "ell": list(self.ell), "deformation": list(self.deformation)},
            "noise": {"model": self.noise, "p": list(self.p), "eta": list(self.eta)},
            "run": {
                "basis": self.basis,
                "rounds": self.rounds,
                "shots": self.shots,
                "seed": self.seed,
                "decoders": list(self.decoders),
                "bootstrap": self.bootstrap,
                "plots": self.plots,
            },
            "output": self.output,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("<root>", "expected an object")
        known = {"code": {"d", "ell", "deformation"}, "noise": {"model", "p", "eta"},
                 "run": {"basis", "rounds", "shots", "seed", "decoders", "bootstrap", "plots"}, "output": None}
        for key, value in doc.items():
            if key not in known:
                raise ConfigError(key, "unknown field")
            if known[key] is not None:
                if not isinstance(value, dict):
                    raise ConfigError(key, "expected an object")
                for sub in value:
                    if sub not in known[key]:
                        raise ConfigError(f"{key}.{sub}", "unknown field")
        code = doc.get("code", {})
        noise = doc.get("noise", {})
        run = doc.get("run", {})
        for path, section, name in (("code.d", code, "d"), ("noise.model", noise, "model"), ("noise.p", noise, "p"),
                                    ("noise.eta", noise, "eta"), ("run.shots", run, "shots"), ("run.seed", run, "seed")):
            if name not in section:
                raise ConfigError(path, "missing required field")
        return cls(
            distances=_as_list(code["d"]),
            ell=_as_list(code.get("ell", 3)),
            deformation=_as_list(code.get("deformation", "css")),
            noise=noise["model"],
            p=_as_list(noise["p"]),
            eta=_as_list(noise["eta"]),
            shots=run["shots"],
            seed=run["seed"],
            decoders=_as_list(run.get("decoders", ["mwpm"])),
            basis=run.get("basis", "Z"),
            rounds=run.get("rounds"),
            output=doc.get("output", "results"),
            bootstrap=run.get("bootstrap", 200),
            plots=bool(run.get("plots", True)),
        )

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError("<file>", f"not valid JSON: {exc}") from exc
        return cls.from_dict(doc)


def _as_list(x):
    return list(x) if isinstance(x, (list, tuple)) else [x]


@dataclass(frozen=True)
class Cell:
    ell: int
    deformation: str
    eta: float
    d: int
    p: float

    def key(self, basis: str) -> str:
        return f"ell={self.ell}|def={self.deformation}|eta={self.eta!r}|d={self.d}|p={self.p!r}|basis={basis}"


def cells_of(cfg: ExperimentConfig) -> list[Cell]:
    return [
        Cell(ell, deformation, float(eta), d, float(p))
        for ell in cfg.ell
        for deformation in cfg.deformation
        for eta in cfg.eta
        for d in sorted(cfg.distances)
        for p in sorted(cfg.p)
    ]


def cell_seed(run_seed: int, key: str) -> int:
    """Seed for one cell, a function of the run seed and the cell's parameters only."""
    digest = hashlib.sha256(key.encode()).digest()
    words = np.frombuffer(digest[:16], dtype=np.uint32).tolist()
    ss = np.random.SeedSequence([run_seed, *words])
    return int(ss.generate_state(2, dtype=np.uint64)[0] >> np.uint64(1))


@dataclass
class CellResult:
    cell: Cell
    failures: dict[str, int]
    shots: int
    batch_sha256: str
    seeds: dict[str, int]
    rounds: int | None


def _code_capacity_cell(cfg: ExperimentConfig, cell: Cell) -> CellResult:
    code = make_code(cell.d, cell.ell, cell.deformation)
    params = NoiseParams(cell.p, cell.eta)
    key = cell.key("both")
    seed = cell_seed(cfg.seed, key)
    batch = sample_code_capacity(code, params, cfg.shots, seed)
    h = hashlib.sha256()
    h.update(np.packbits(batch.syndromes, axis=1, bitorder="little").tobytes())
    h.update(np.packbits(batch.flips, axis=1, bitorder="little").tobytes())
    failures: dict[str, int] = {}
    wanted = set(cfg.decoders)
    if wanted & {"mwpm", "corr"}:
        graph = to_matching_graph(decompose_hyperedges(code_capacity_dem(code, params)))
        if "corr" in wanted:
            std, corr = correlated_decode_batch(graph, batch.syndromes)
            failures["corr"] = _count(corr, batch.flips)
        else:
            std, _ = decode_batch(graph, batch.syndromes)
        failures["mwpm"] = _count(std, batch.flips)
    orders = [dec for dec in cfg.decoders if dec.startswith("css-")]
    if orders:
        graphs = CssGraphs(code, params)
        for dec in orders:
            order = dec.split("-")[1].upper()
            pred = css_decode_batch(graphs, batch.syndromes, CssCorrelatedConfig(order, cell.eta))
            failures[dec] = _count(pred, batch.flips)
    return CellResult(cell, {dec: failures[dec] for dec in cfg.decoders}, cfg.shots, h.hexdigest(), {key: seed}, None)


def _count(pred: np.ndarray, actual: np.ndarray) -> int:
    return int(np.any(pred != actual, axis=1).sum())


def circuit_graph(code, basis: str, rounds: int, params: NoiseParams):
    circuit = build_memory_circuit(code, basis, rounds, hbd_channels(params))
    dem = extract_dem(circuit)
    return circuit, to_matching_graph(decompose_hyperedges(dem))


def _circuit_cell(cfg: ExperimentConfig, cell: Cell) -> CellResult:
    code = make_code(cell.d, cell.ell, cell.deformation)
    params = NoiseParams(cell.p, cell.eta)
    rounds = cfg.rounds if cfg.rounds is not None else cell.d
    bases = ("Z", "X") if cfg.basis == "both" else (cfg.basis,)
    fails = {dec: np.zeros(cfg.shots, dtype=bool) for dec in cfg.decoders}
    seeds = {}
    h = hashlib.sha256()
    for basis in bases:
        key = cell.key(basis)
        seed = seeds[key] = cell_seed(cfg.seed, key)
        circuit, graph = circuit_graph(code, basis, rounds, params)
        start = 0
        for chunk in iter_simulate(circuit, cfg.shots, seed):
            h.update(chunk.digest().encode())
            n = chunk.shots
            if "corr" in fails:
                std, corr = correlated_decode_batch(graph, chunk.detection_events)
                fails["corr"][start:start + n] |= np.any(corr != chunk.observable_flips, axis=1)
            else:
                std, _ = decode_batch(graph, chunk.detection_events)
            if "mwpm" in fails:
                fails["mwpm"][start:start + n] |= np.any(std != chunk.observable_flips, axis=1)
            start += n
    failures = {dec: int(f.sum()) for dec, f in fails.items()}
    return CellResult(cell, failures, cfg.shots, h.hexdigest(), seeds, rounds)


def run_cell(cfg: ExperimentConfig, cell: Cell) -> CellResult:
    if cfg.noise == "code_capacity":
        return _code_capacity_cell(cfg, cell)
    return _circuit_cell(cfg, cell)


def _run_cell_args(args):
    return run_cell(*args)


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(WORKERS_ENV, f"expected an integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigError(WORKERS_ENV, "worker count must be >= 1")
    return n


def rate_points(results: list[CellResult]) -> list[tuple[RatePoint, CellResult]]:
    out = []
    for res in results:
        c = res.cell
        for dec, f in res.failures.items():
            out.append((RatePoint(c.d, c.ell, c.deformation, c.eta, c.p, dec, res.shots, f), res))
    return out


def rates_csv(cfg: ExperimentConfig, results: list[CellResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    basis = "both" if cfg.noise == "code_capacity" else cfg.basis
    for pt, res in rate_points(results):
        w.writerow([
            pt.d, pt.ell, pt.deformation, cfg.noise, basis, "" if res.rounds is None else res.rounds,
            repr(pt.eta), repr(pt.p), pt.decoder, pt.shots, pt.failures,
            repr(pt.rate), repr(pt.ci_low), repr(pt.ci_high), res.batch_sha256,
        ])
    return buf.getvalue()


def read_rates_csv(path) -> list[RatePoint]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        RatePoint(int(r["d"]), int(r["ell"]), r["deformation"], float(r["eta"]), float(r["p"]),
                  r["decoder"], int(r["shots"]), int(r["failures"]))
        for r in rows
    ]


def _group_key(pt: RatePoint) -> str:
    return f"ell={pt.ell}|def={pt.deformation}|eta={pt.eta!r}"


def fit_groups(points: list[RatePoint], bootstrap: int, seed: int) -> dict[str, dict[str, dict]]:
    """Threshold fit per (ell, deformation, eta) group and decoder."""
    groups: dict[str, dict[str, list[RatePoint]]] = {}
    for pt in points:
        groups.setdefault(_group_key(pt), {}).setdefault(pt.decoder, []).append(pt)
    out: dict[str, dict[str, dict]] = {}
    for g, by_dec in groups.items():
        out[g] = {}
        for dec, pts in by_dec.items():
            try:
                out[g][dec] = fit_threshold(pts, bootstrap=bootstrap, seed=seed).to_dict()
            except NoCrossing as exc:
                out[g][dec] = {"error": f"NoCrossing: {exc}"}
    return out


def gains_of(fits: dict[str, dict[str, dict]]) -> dict[str, dict[str, dict]]:
    """Every other decoder against ``mwpm`` in each group where both fits succeeded."""
    from .stats import ThresholdFit

    out: dict[str, dict[str, dict]] = {}
    for g, by_dec in fits.items():
        base = by_dec.get("mwpm")
        if base is None or "error" in base:
            continue
        for dec, fit in by_dec.items():
            if dec == "mwpm" or "error" in fit:
                continue
            gain = decoder_gain(ThresholdFit(**_tuplify(fit)), ThresholdFit(**_tuplify(base)))
            out.setdefault(g, {})[dec] = asdict(gain)
    return out


def _tuplify(fit: dict) -> dict:
    return {k: tuple(v) if isinstance(v, list) else v for k, v in fit.items()}


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n")


@dataclass
class ExperimentResult:
    output: Path
    points: list[RatePoint]
    fits: dict
    gains: dict
    cells: list[CellResult]


def run_experiment(cfg: ExperimentConfig, progress=None) -> ExperimentResult:
    """Run every cell, then write ``rates.csv``, ``fits.json``, ``gains.json``, ``manifest.json`` and plots.

    ``rates.csv`` is rewritten after each finished cell, so a failure leaves
    the completed cells on disk together with a manifest marked ``failed``.
    """
    from . import BACKEND, __version__

    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    cells = cells_of(cfg)
    results: list[CellResult] = []
    manifest = {
        "config": cfg.to_dict(),
        "version": __version__,
        "backend": BACKEND,
        "csv_columns": list(CSV_COLUMNS),
        "status": "running",
    }

    def flush(status: str, error: str | None = None):
        (out / "rates.csv").write_text(rates_csv(cfg, results))
        manifest["status"] = status
        manifest["cells"] = [
            {"cell": asdict(r.cell), "seeds": r.seeds, "batch_sha256": r.batch_sha256} for r in results
        ]
        if error is not None:
            manifest["error"] = error
        files = {}
        for name in ("rates.csv", "fits.json", "gains.json"):
            if (out / name).exists() and (name == "rates.csv" or status == "ok"):
                files[name] = _sha256_file(out / name)
        manifest["sha256"] = files
        _write_json(out / "manifest.json", manifest)

    try:
        workers = worker_count()
        if workers > 1 and len(cells) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for res in pool.map(_run_cell_args, [(cfg, c) for c in cells]):
                    results.append(res)
                    flush("running")
                    if progress:
                        progress(res)
        else:
            for c in cells:
                results.append(run_cell(cfg, c))
                flush("running")
                if progress:
                    progress(results[-1])
        points = [pt for pt, _ in rate_points(results)]
        fits = fit_groups(points, cfg.bootstrap, cfg.seed)
        gains = gains_of(fits)
        _write_json(out / "fits.json", fits)
        _write_json(out / "gains.json", gains)
        if cfg.plots:
            from .plots import rate_plots

            manifest["plots"] = rate_plots(points, fits, out)
    except ConfigError:
        flush("failed", "configuration error")
        raise
    except Exception as exc:
        flush("failed", f"{type(exc).__name__}: {exc}")
        raise ExperimentError(str(exc)) from exc
    flush("ok")
    return ExperimentResult(out, points, fits, gains, results)


GAP_COLUMNS = ("eta", "shot", "signed_gap", "gap_db", "decoder_correct", "w_min", "w_comp", "predicted_flip", "true_flip")


@dataclass
class GapRun:
    eta: float
    records: list
    failures: int
    batch_sha256: str


def gap_sweep(
    d: int,
    ell: int,
    deformation: str,
    p: float,
    etas,
    shots: int,
    seed: int,
    basis: str = "Z",
    rounds: int | None = None,
    decoder: str = "mwpm",
) -> list[GapRun]:
    """Per-shot signed gaps of a circuit-level memory experiment, one run per eta.

    The gap is taken for the memory-basis logical.  ``failures`` counts the
    decoder's own logical failures on the same shots.
    """
    from .correlated import circuit_correlated_decode
    from .gap import complementary_gap, correlated_gap, reference_probability
    from .matching import mwpm_decode

    if decoder not in ("mwpm", "corr"):
        raise ConfigError("decoder", f"gap runs support mwpm and corr, got {decoder!r}")
    if basis not in ("X", "Z"):
        raise ConfigError("basis", f"expected X or Z, got {basis!r}")
    code = make_code(d, ell, deformation)
    rounds = d if rounds is None else rounds
    runs = []
    for eta in etas:
        params = NoiseParams(p, float(eta))
        circuit, graph = circuit_graph(code, basis, rounds, params)
        p_ref = reference_probability(graph)
        key = f"gap|ell={ell}|def={deformation}|eta={float(eta)!r}|d={d}|p={float(p)!r}|basis={basis}"
        h = hashlib.sha256()
        records = []
        failures = 0
        shot = 0
        for chunk in iter_simulate(circuit, shots, cell_seed(seed, key)):
            h.update(chunk.digest().encode())
            for s in range(chunk.shots):
                defects = np.flatnonzero(chunk.detection_events[s])
                truth = bool(chunk.observable_flips[s, 0])
                if decoder == "corr":
                    rec = correlated_gap(graph, defects, truth, 0, shot, p_ref)
                    pred = circuit_correlated_decode(graph, defects)[1].observables & 1
                else:
                    pred = mwpm_decode(graph, defects).observables & 1
                    rec = complementary_gap(graph, defects, truth, 0, shot, p_ref, decoder_flip=bool(pred))
                failures += int(bool(pred) != truth)
                records.append((rec, truth))
                shot += 1
        runs.append(GapRun(float(eta), records, failures, h.hexdigest()))
    return runs


def write_gap_outputs(runs: list[GapRun], out: Path, plots: bool = True) -> None:
    out.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(GAP_COLUMNS)
    for run in runs:
        for rec, truth in run.records:
            w.writerow([repr(run.eta), rec.shot, repr(rec.signed_gap), repr(rec.gap_db), int(rec.decoder_correct),
                        repr(rec.w_min), repr(rec.w_comp), int(rec.predicted_flip), int(truth)])
    (out / "gaps.csv").write_text(buf.getvalue())
    if plots:
        from .plots import gap_histogram

        gap_histogram(
            {f"eta={run.eta:g}": np.array([rec.gap_db for rec, _ in run.records]) for run in runs},
            out / "gaps.svg",
        )
