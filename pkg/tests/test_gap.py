import itertools
import math

import numpy as np
import pytest
from helpers import graph_from_edges, random_graph
from hypothesis import given
from hypothesis import strategies as st

from compassqec.circuit import build_memory_circuit
from compassqec.codes import make_code
from compassqec.dem import decompose_hyperedges, extract_dem
from compassqec.frames import simulate
from compassqec.gap import (
    boundary_potential,
    complementary_gap,
    correlated_gap,
    gap_to_db,
    gap_unit_db,
    is_negative,
)
from compassqec.matching import decode_batch, mwpm_decode, to_matching_graph
from compassqec.correlated import circuit_correlated_decode


def _class_weights(num_detectors, edges, masks, defects):
    """Cheapest correction in each logical class, by enumerating edge subsets."""
    target = set(defects)
    best = [math.inf, math.inf]
    for r in range(len(edges) + 1):
        for subset in itertools.combinations(range(len(edges)), r):
            odd, parity = set(), 0
            for e in subset:
                parity ^= masks[e]
                for end in edges[e][:2]:
                    if end != num_detectors:
                        odd ^= {end}
            if odd == target:
                best[parity] = min(best[parity], sum(edges[e][2] for e in subset))
    return best


def _cut_masks(rng, n, edges):
    """Observable masks that form a boundary cut: interior edges follow a potential."""
    f = rng.integers(0, 2, size=n)
    return [int(f[u] ^ f[v]) if v != n else int(rng.integers(0, 2)) for u, v, _ in edges]


@st.composite
def gap_instances(draw):
    n = draw(st.integers(2, 7))
    rng = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    edges = random_graph(rng, n, density=0.3)[:11]
    # keep the graph connected to the boundary through the first node
    if not any(v == n for _, v, _ in edges):
        edges.append((0, n, 1.0))
    masks = _cut_masks(rng, n, edges)
    k = draw(st.integers(0, n))
    defects = sorted(rng.choice(n, size=k, replace=False).tolist())
    return n, edges, masks, defects, draw(st.booleans())


@given(gap_instances())
def test_property_gap_matches_class_enumeration(inst):
    n, edges, masks, defects, truth = inst
    w_even, w_odd = _class_weights(n, edges, masks, defects)
    graph = graph_from_edges(n, edges, masks)
    if math.isinf(w_even) or math.isinf(w_odd):
        return
    rec = complementary_gap(graph, defects, truth, p_ref=0.1)
    assert rec.w_min == pytest.approx(min(w_even, w_odd), abs=1e-9)
    assert rec.w_comp == pytest.approx(max(w_even, w_odd), abs=1e-9)
    assert abs(rec.signed_gap) == pytest.approx(abs(w_odd - w_even), abs=1e-9)
    if abs(w_odd - w_even) > 1e-9:
        assert rec.predicted_flip == (w_odd < w_even)
        assert rec.decoder_correct == (rec.predicted_flip == truth)
    assert (rec.signed_gap >= 0) == rec.decoder_correct or rec.signed_gap == 0


@given(gap_instances())
def test_property_w_min_is_the_matching_weight(inst):
    n, edges, masks, defects, truth = inst
    graph = graph_from_edges(n, edges, masks)
    w_even, w_odd = _class_weights(n, edges, masks, defects)
    if math.isinf(w_even) or math.isinf(w_odd):
        return
    out = mwpm_decode(graph, defects)
    rec = complementary_gap(graph, defects, truth, decoder_flip=bool(out.observables & 1))
    assert rec.w_min == pytest.approx(out.weight, abs=1e-9)
    assert rec.predicted_flip == bool(out.observables & 1)


def test_db_conversion():
    p = 0.01
    assert gap_to_db(10.0, p) == pytest.approx(1.0, abs=1e-12)
    assert gap_to_db(0.0, p) == 0.0
    w = math.log((1 - p) / p)
    for g in (0.3, 4.0, 17.5):
        assert gap_to_db(g, p, w) == pytest.approx(gap_to_db(g, p), abs=1e-12)
        assert gap_to_db(g, p, 2 * w) == pytest.approx(2 * gap_to_db(g, p), abs=1e-12)
    assert gap_unit_db(p) == pytest.approx(10.0)
    for bad in (0.0, 0.5, 0.7):
        with pytest.raises(ValueError):
            gap_unit_db(bad)


def _tie_graph():
    # defect 0: straight out with a logical flip (weight 1) or via 1 without (0.5 + 0.5)
    return graph_from_edges(2, [(0, 2, 1.0), (0, 1, 0.5), (1, 2, 0.5)], masks=[1, 0, 0])


def test_exact_tie_follows_the_decoder():
    graph = _tie_graph()
    ok = complementary_gap(graph, [0], False, decoder_flip=False)
    assert ok.signed_gap == 0.0 and not is_negative(ok.signed_gap)
    bad = complementary_gap(graph, [0], False, decoder_flip=True)
    assert bad.signed_gap == 0.0 and is_negative(bad.signed_gap)
    assert not bad.decoder_correct


def test_zero_noise_shot_has_positive_gap():
    graph = graph_from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 3, 2.0), (2, 3, 2.0)], masks=[0, 0, 1, 0])
    rec = complementary_gap(graph, [], False)
    assert rec.w_min == 0.0
    assert rec.signed_gap == pytest.approx(6.0)
    assert rec.decoder_correct


def test_potential_rejects_a_non_cut_observable():
    graph = graph_from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (0, 3, 1.0)], masks=[1, 0, 0, 0])
    with pytest.raises(ValueError):
        boundary_potential(graph)


def test_potential_explains_interior_masks(rng):
    for _ in range(50):
        n = 8
        edges = random_graph(rng, n)
        masks = _cut_masks(rng, n, edges)
        f = boundary_potential(graph_from_edges(n, edges, masks))
        for (u, v, _), m in zip(edges, masks):
            if v != n:
                assert f[u] ^ f[v] == m


@pytest.fixture(scope="module")
def d3_run():
    from compassqec.noise import NoiseParams

    circuit = build_memory_circuit(make_code(3, 2), "Z", 3, NoiseParams(0.02, 1.0))
    graph = to_matching_graph(decompose_hyperedges(extract_dem(circuit)))
    batch = simulate(circuit, 600, seed=12)
    return graph, batch


def test_negative_gaps_count_failures(d3_run):
    graph, batch = d3_run
    pred, _ = decode_batch(graph, batch.detection_events)
    truth = batch.observable_flips[:, 0]
    gaps = []
    for s in range(batch.shots):
        rec = complementary_gap(
            graph, np.flatnonzero(batch.detection_events[s]), bool(truth[s]), shot=s, decoder_flip=bool(pred[s, 0])
        )
        assert rec.predicted_flip == bool(pred[s, 0])
        gaps.append(rec.signed_gap)
    failures = int((pred[:, 0] != truth).sum())
    assert failures > 0
    assert int(is_negative(gaps).sum()) == failures


def test_correlated_gap_tracks_pass_two(d3_run):
    graph, batch = d3_run
    truth = batch.observable_flips[:, 0]
    for s in range(200):
        defects = np.flatnonzero(batch.detection_events[s])
        _, p2 = circuit_correlated_decode(graph, defects)
        rec = correlated_gap(graph, defects, bool(truth[s]), shot=s)
        assert rec.predicted_flip == bool(p2.observables & 1)
        assert rec.decoder_correct == (rec.predicted_flip == bool(truth[s]))
        assert rec.w_min <= rec.w_comp


def test_gap_record_carries_shot_and_db():
    graph = _tie_graph()
    rec = complementary_gap(graph, [1], False, shot=41, p_ref=0.2)
    assert rec.shot == 41
    assert rec.gap_db == pytest.approx(gap_to_db(rec.signed_gap, 0.2))
