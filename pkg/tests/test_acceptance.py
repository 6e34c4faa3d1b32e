"""Acceptance criteria 1-10 at their stated scales and tolerances.

Each test records a one-line verdict shown in the terminal summary.
Criterion 8 needs roughly a day of single-core time and only runs when
``COMPASSQEC_ACCEPTANCE_FULL=1``; ``COMPASSQEC_C8_SHOTS`` lowers its shot count
for a reduced-scale look (the verdict line then says so).
"""

import itertools
import math
import os
import time

import numpy as np
import pytest
from helpers import matching_oracle, random_graph, graph_from_edges, report_criterion

from compassqec.circuit import build_memory_circuit
from compassqec.codecap import sample_code_capacity
from compassqec.codes import make_code
from compassqec.correlated import ConditionalTable, CssCorrelatedConfig, CssGraphs, css_decode_batch
from compassqec.dem import extract_dem
from compassqec.experiment import ExperimentConfig, gap_sweep, run_experiment
from compassqec.frames import simulate
from compassqec.gap import gap_to_db
from compassqec.matching import mwpm_decode
from compassqec.noise import TWO_QUBIT_PAULIS, NoiseParams, code_capacity_channel, hbd_channels
from compassqec.stats import RatePoint, fit_threshold

FULL = os.environ.get("COMPASSQEC_ACCEPTANCE_FULL") == "1"


def _verdict(number, ok, detail, elapsed, budget):
    in_time = elapsed < budget
    report_criterion(number, ok and in_time, f"{detail}; {elapsed:.1f}s (budget {budget:.0f}s)")
    assert ok, detail
    assert in_time, f"took {elapsed:.1f}s, budget {budget}s"


def test_criterion_01_channel_arithmetic():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(50):
        p = float(rng.uniform(0.0, 0.5))
        eta = float(10 ** rng.uniform(-2, 4))
        table = hbd_channels(NoiseParams(p, eta))
        dists = (table.cz_channel, table.cnot_channel, table.h_channel, table.idle_channel,
                 code_capacity_channel(NoiseParams(p, eta)))
        for dist in dists:
            worst = max(worst, abs(dist.total - p), abs(dist.total + dist.prob("I" * dist.arity) - 1.0))
        for lab in ("IZ", "ZI", "ZZ"):
            worst = max(worst, abs(table.cz_channel.prob(lab) - eta * p / (3 * (1 + eta))))
        worst = max(worst, abs(table.idle_channel.prob("Z") - eta * p / (1 + eta)))
        assert len(TWO_QUBIT_PAULIS) == 15
    _verdict(1, worst <= 1e-12, f"max deviation {worst:.2e} over 50 (p, eta)", time.perf_counter() - t0, 1)


def test_criterion_02_conditional_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    worst = 0.0
    for _ in range(20):
        eta = float(10 ** rng.uniform(-2, 4))
        p = 0.1
        # channel marginals written out by hand
        py = p / (2 * (1 + eta))
        pz = eta * p / (1 + eta)
        worst = max(worst, abs(ConditionalTable.from_eta(eta).p_x_given_z - py / (py + pz)))
    _verdict(2, worst <= 1e-12, f"max deviation {worst:.2e} over 20 eta", time.perf_counter() - t0, 1)


def test_criterion_03_matcher_optimality():
    t0 = time.perf_counter()
    rng = np.random.default_rng(303)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 19))
        edges = random_graph(rng, n, density=float(rng.uniform(0.15, 0.6)))
        k = int(rng.integers(0, min(n, 14) + 1))
        defects = sorted(rng.choice(n, size=k, replace=False).tolist())
        got = mwpm_decode(graph_from_edges(n, edges), defects).weight
        worst = max(worst, abs(got - matching_oracle(n, edges, defects)))
    _verdict(3, worst <= 1e-9, f"max |blossom - enumeration| {worst:.2e} over 1000 graphs", time.perf_counter() - t0, 60)


def _bitmasks(paulis):
    xs, zs = [], []
    for ps in paulis:
        x = z = 0
        for q, p in ps.support:
            if p in "XY":
                x |= 1 << q
            if p in "ZY":
                z |= 1 << q
        xs.append(x)
        zs.append(z)
    return np.array(xs, dtype=np.uint64), np.array(zs, dtype=np.uint64)


def _no_logical_below(code, w_max):
    """True when no Pauli of weight <= w_max commutes with every stabilizer and acts non-trivially."""
    n = code.num_qubits
    sx, sz = _bitmasks(code.stabilizers)
    lx, lz = _bitmasks((code.logical_x, code.logical_z))
    for w in range(1, w_max + 1):
        pos = np.array(list(itertools.combinations(range(n), w)), dtype=np.uint64)
        letters = np.array(list(itertools.product((1, 2, 3), repeat=w)))
        xbit = (letters <= 2).astype(np.uint64)  # X or Y
        zbit = (letters >= 2).astype(np.uint64)  # Y or Z
        shifts = np.uint64(1) << pos  # (C, w)
        ex = (shifts[:, None, :] * xbit[None, :, :]).sum(axis=2).ravel()
        ez = (shifts[:, None, :] * zbit[None, :, :]).sum(axis=2).ravel()
        for start in range(0, len(ex), 200_000):
            bx, bz = ex[start:start + 200_000, None], ez[start:start + 200_000, None]
            anti = np.bitwise_count((bx & sz[None]) ^ (bz & sx[None])) & 1
            central = ~anti.any(axis=1)
            nontrivial = (np.bitwise_count((bx & lz[None]) ^ (bz & lx[None])) & 1).any(axis=1)
            if (central & nontrivial).any():
                return False
    return True


def test_criterion_04_code_validity():
    t0 = time.perf_counter()
    problems = []
    for d, ell, deformation in itertools.product((3, 5, 7), (2, 3, 4), ("css", "zxxz")):
        code = make_code(d, ell, deformation)
        s = code.symplectic()
        n = code.num_qubits
        comm = (s[:, :n] @ s[:, n:].T + s[:, n:] @ s[:, :n].T) % 2
        if comm.any():
            problems.append(f"{d},{ell},{deformation}: non-commuting")
        if len(code.stabilizers) != d * d - 1:
            problems.append(f"{d},{ell},{deformation}: {len(code.stabilizers)} generators")
        z_weights = [st.weight for st in make_code(d, ell).z_stabilizers]
        # full-width Z stabilizers need 2 ell columns; smaller lattices cap them at 2 (d - 1)
        if max(z_weights) != min(2 * ell, 2 * (d - 1)):
            problems.append(f"{d},{ell}: max Z weight {max(z_weights)}")
        if d in (3, 5):
            logical_weights = (code.logical_x.weight, code.logical_z.weight)
            if not _no_logical_below(code, d - 1) or min(logical_weights) != d:
                problems.append(f"{d},{ell},{deformation}: distance != {d}")
    detail = "all 18 codes valid, distance d at d=3,5" if not problems else "; ".join(problems)
    _verdict(4, not problems, detail, time.perf_counter() - t0, 300)


def test_criterion_05_simulator_matches_dem_sampling():
    t0 = time.perf_counter()
    circuit = build_memory_circuit(make_code(3, 2), "Z", 3, hbd_channels(NoiseParams(0.01, 2.0)))
    dem = extract_dem(circuit)
    shots = 100_000
    sim = simulate(circuit, shots, seed=505).detection_events.mean(axis=0)
    det, _ = dem.sample(shots, seed=506)
    ref = det.mean(axis=0)
    pooled = (sim + ref) / 2
    sigma = np.sqrt(pooled * (1 - pooled) * 2 / shots)
    z = np.abs(sim - ref) / np.where(sigma > 0, sigma, 1)
    ok = bool(np.all((z <= 3) | (sigma == 0) & (sim == ref)))
    _verdict(5, ok, f"max |z| {z.max():.2f} over {dem.num_detectors} detectors", time.perf_counter() - t0, 300)


def test_criterion_06_zx_order_beats_xz():
    t0 = time.perf_counter()
    code = make_code(5, 4)
    params = NoiseParams(0.14, 0.5)
    shots = 100_000
    batch = sample_code_capacity(code, params, shots, seed=606)
    graphs = CssGraphs(code, params)
    fail = {}
    for order in ("ZX", "XZ"):
        pred = css_decode_batch(graphs, batch.syndromes, CssCorrelatedConfig(order, 0.5))
        fail[order] = np.any(pred != batch.flips, axis=1)
    diff = fail["ZX"].astype(float) - fail["XZ"].astype(float)
    mean, se = diff.mean(), diff.std(ddof=1) / math.sqrt(shots)
    ok = mean <= 2 * se
    detail = (f"ZX {fail['ZX'].mean():.4f} vs XZ {fail['XZ'].mean():.4f} "
              f"(paired diff {mean:+.4f} +- {se:.4f}, z {mean / se:+.1f})")
    _verdict(6, ok, detail, time.perf_counter() - t0, 600)


def test_criterion_07_css_gain_shrinks_with_bias(tmp_path):
    t0 = time.perf_counter()
    cfg = ExperimentConfig(
        distances=[5, 7, 9], ell=[3], deformation=["css"], noise="code_capacity",
        p=[0.10, 0.115, 0.13, 0.145, 0.16, 0.175, 0.19], eta=[0.5, 10.0], shots=100_000, seed=707,
        decoders=["mwpm", "css-zx"], bootstrap=200, plots=False, output=str(tmp_path / "c7"),
    )
    res = run_experiment(cfg)
    delta, parts = {}, []
    for eta in (0.5, 10.0):
        fits = res.fits[f"ell=3|def=css|eta={eta!r}"]
        m, c = fits["mwpm"], fits["css-zx"]
        if "error" in m or "error" in c:
            _verdict(7, False, f"eta={eta}: fit failed", time.perf_counter() - t0, 7200)
        delta[eta] = abs(c["p_th"] - m["p_th"])
        parts.append(
            f"eta={eta:g}: mwpm {m['p_th']:.4f} [{m['p_th_ci'][0]:.4f},{m['p_th_ci'][1]:.4f}] "
            f"zx {c['p_th']:.4f} [{c['p_th_ci'][0]:.4f},{c['p_th_ci'][1]:.4f}] |D| {delta[eta]:.4f}"
        )
    _verdict(7, delta[10.0] < delta[0.5], "; ".join(parts), time.perf_counter() - t0, 7200)


C8_GRID = [0.004, 0.006, 0.008, 0.010, 0.012, 0.014, 0.016, 0.018]


@pytest.mark.skipif(not FULL, reason="criterion 8 needs about a day of single-core time")
def test_criterion_08_correlated_threshold_gain(tmp_path):
    t0 = time.perf_counter()
    shots = int(os.environ.get("COMPASSQEC_C8_SHOTS", "100000"))
    cfg = ExperimentConfig(
        distances=[5, 7, 9], ell=[2, 3], deformation=["css", "zxxz"], noise="hbd", p=C8_GRID,
        eta=[0.5, 10.0, 100.0], shots=shots, seed=808, decoders=["mwpm", "corr"], bootstrap=200,
        plots=True, output=os.environ.get("COMPASSQEC_C8_OUT", str(tmp_path / "c8")),
    )
    res = run_experiment(cfg)
    bad, rows = [], []
    for ell, deformation in itertools.product((2, 3), ("css", "zxxz")):
        cells = []
        for eta in (0.5, 10.0, 100.0):
            fits = res.fits[f"ell={ell}|def={deformation}|eta={eta!r}"]
            m, c = fits["mwpm"], fits["corr"]
            if "error" in m or "error" in c:
                bad.append(f"{ell}/{deformation}/{eta:g}: fit failed")
                cells.append("n/a")
                continue
            delta = c["p_th"] - m["p_th"]
            half = 1.959963984540054 * math.hypot(c["p_th_std"], m["p_th_std"])
            if delta < -half:
                bad.append(f"{ell}/{deformation}/{eta:g}: D {delta:+.5f} < -{half:.5f}")
            cells.append(f"D={delta * 100:+.3f}% ({delta / m['p_th'] * 100:+.1f}%)")
        rows.append(f"l={ell} {deformation}: " + " | ".join(cells))
    scale = "" if shots == 100_000 else f" [reduced: {shots} shots/point]"
    print("\n".join(["Delta_CORR (relative gain), columns eta = 0.5 | 10 | 100"] + rows))
    _verdict(8, not bad, ("; ".join(bad) or "corr >= mwpm in every cell") + scale, time.perf_counter() - t0, 8 * 3600)


def test_criterion_08_reported_when_not_run():
    if FULL:
        pytest.skip("the full run reports for itself")
    report_criterion(8, None, "needs ~28 single-core hours (> 8 h budget); set COMPASSQEC_ACCEPTANCE_FULL=1")


def test_criterion_09_gap_bookkeeping():
    t0 = time.perf_counter()
    problems = []
    means = {}
    for decoder, shots in (("corr", 5000), ("mwpm", 1000)):
        runs = gap_sweep(5, 2, "css", 0.005, [0.5, 5.0, 500.0], shots=shots, seed=909, basis="Z", decoder=decoder)
        for run in runs:
            g = np.array([rec.signed_gap for rec, _ in run.records])
            if int(np.signbit(g).sum()) != run.failures:
                problems.append(f"{decoder} eta={run.eta:g}: negatives != failures")
            for rec, _ in run.records:
                if abs(rec.gap_db - rec.signed_gap / 10.0) > 1e-12:
                    problems.append("dB conversion")
                    break
            if decoder == "corr":
                means[run.eta] = (g.mean(), g.std(ddof=1) / math.sqrt(len(g)))
    # the caption formula on an explicit reference edge
    p_ref = 0.013
    w = math.log((1 - p_ref) / p_ref)
    unit = -math.log(p_ref / (1 - p_ref)) * 10 / w
    if abs(gap_to_db(7.3, p_ref, w) - 7.3 / unit) > 1e-12:
        problems.append("caption formula")
    (m0, s0), (m1, s1) = means[0.5], means[500.0]
    rising = m1 - m0 > 2 * math.hypot(s0, s1)
    if not rising:
        problems.append("mean gap does not rise")
    detail = (f"identity exact; corr mean gap eta=0.5 {m0:.2f}+-{s0:.2f}, eta=5 {means[5.0][0]:.2f}, "
              f"eta=500 {m1:.2f}+-{s1:.2f}") if not problems else "; ".join(problems)
    _verdict(9, not problems, detail, time.perf_counter() - t0, 1800)


def test_criterion_10_fit_recovers_synthetic_truths():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1010)
    worst_p = worst_nu = 0.0
    for _ in range(20):
        nu = rng.uniform(1.0, 1.6)
        p_th = rng.uniform(0.05, 0.15)
        a, b, c = rng.uniform(0.08, 0.2), rng.uniform(0.5, 2.0), rng.uniform(-1.0, 1.0)
        span = 0.3 * a / b / 5 ** (1 / nu)
        pts = []
        for d in (5, 7, 9, 11):
            for p in np.linspace(p_th - span, p_th + span, 15):
                x = (p - p_th) * d ** (1 / nu)
                rate = min(max(a + b * x + c * x * x + rng.normal(0, 1e-3), 0.0), 1.0)
                pts.append(RatePoint(d, 3, "css", 1.0, float(p), "mwpm", 10**6, int(round(rate * 10**6))))
        fit = fit_threshold(pts, bootstrap=0)
        worst_p = max(worst_p, abs(fit.p_th - p_th))
        worst_nu = max(worst_nu, abs(fit.nu - nu))
    ok = worst_p <= 0.002 and worst_nu <= 0.15
    _verdict(10, ok, f"max |dp_th| {worst_p:.5f}, max |dnu| {worst_nu:.4f} over 20 truths", time.perf_counter() - t0, 120)
