"""Signed complementary gap: weight difference between the two logical classes.

The boundary is split in two.  Boundary edges that flip the target observable
go to a variable node ``V``; the rest keep the fixed boundary.  Matching with
``V`` silent gives the best correction with an even number of logical
crossings, matching with ``V`` fired forces an odd number.

Observable flips on interior edges are first pushed onto the boundary: each
detector gets a bit ``f`` with ``obs(u, v) = f(u) ^ f(v)`` on every interior
edge, the boundary edges absorb ``f``, and the class of a correction with
defects ``D`` picks up the constant ``f(D)``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .matching import MatchingGraph, mwpm_decode, set_edge_weights


@dataclass(frozen=True)
class GapRecord:
    signed_gap: float
    gap_db: float
    decoder_correct: bool
    shot: int
    w_min: float
    w_comp: float
    predicted_flip: bool


def gap_unit_db(p: float, w: float | None = None) -> float:
    """Weight per dB from a reference edge: ``-log(p / (1 - p)) * 10 / w``."""
    if not 0.0 < p < 0.5:
        raise ValueError("reference probability must lie in (0, 0.5)")
    if w is None:
        w = math.log((1.0 - p) / p)
    return -math.log(p / (1.0 - p)) * 10.0 / w


def gap_to_db(g: float, p_ref: float, w_ref: float | None = None) -> float:
    """Express a weight-unit gap in dB of the reference edge (``g / 10`` for a log-likelihood edge)."""
    return g / gap_unit_db(p_ref, w_ref)


def boundary_potential(graph: MatchingGraph, observable: int = 0) -> np.ndarray:
    """Per-detector bits ``f`` making the target observable vanish on interior edges."""
    bit = np.uint64(1 << observable)
    nd = graph.num_detectors
    interior = np.flatnonzero(graph.ev != graph.boundary)
    adj: list[list[tuple[int, int]]] = [[] for _ in range(nd)]
    for e in interior.tolist():
        u, v = int(graph.eu[e]), int(graph.ev[e])
        o = 1 if graph.obs_masks[e] & bit else 0
        adj[u].append((v, o))
        adj[v].append((u, o))
    f = np.full(nd, -1, dtype=np.int8)
    for root in range(nd):
        if f[root] >= 0:
            continue
        f[root] = 0
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v, o in adj[u]:
                want = f[u] ^ o
                if f[v] < 0:
                    f[v] = want
                    queue.append(v)
                elif f[v] != want:
                    raise ValueError("observable is not a boundary cut on this graph")
    return f.astype(np.uint8)


def split_boundary(graph: MatchingGraph, observable: int = 0) -> tuple[MatchingGraph, np.ndarray]:
    """Graph whose detectors are the originals plus ``V`` (index ``num_detectors``).

    Returns the augmented graph (observable mask 1 marks edges into ``V``)
    and the potential ``f``.
    """
    key = ("split", observable)
    if key in graph._cache:
        return graph._cache[key]
    f = boundary_potential(graph, observable)
    nd = graph.num_detectors
    bit = np.uint64(1 << observable)
    eu = graph.eu.copy()
    ev = graph.ev.copy()
    on_boundary = ev == graph.boundary
    flips = (graph.obs_masks & bit) != 0
    to_v = on_boundary & (flips ^ (f[eu] == 1))
    ev[on_boundary] = nd + 1
    ev[to_v] = nd
    masks = to_v.astype(np.uint64)
    aug = MatchingGraph(
        num_detectors=nd + 1,
        num_observables=1,
        eu=eu,
        ev=ev,
        probs=graph.probs,
        weights=graph.weights,
        obs_masks=masks,
    )
    graph._cache[key] = (aug, f)
    return aug, f


def complementary_gap(
    graph: MatchingGraph,
    defects,
    true_flip: bool,
    observable: int = 0,
    shot: int = 0,
    p_ref: float | None = None,
    decoder_flip: bool | None = None,
    tie_tol: float = 1e-9,
    reweight: tuple[np.ndarray, np.ndarray] | None = None,
) -> GapRecord:
    """Signed gap for one shot.

    ``p_ref`` sets the dB reference edge (default: the median edge
    probability).  When the two classes tie within ``tie_tol`` the class
    chosen is ``decoder_flip`` if given, so the sign agrees with the decoder;
    a failed tie is recorded as ``-0.0``.  ``reweight = (edge ids, weights)``
    overrides those edges' weights (the split graph keeps edge indices).
    """
    aug, f = split_boundary(graph, observable)
    if reweight is not None and len(reweight[0]):
        aug = set_edge_weights(aug, reweight[0], reweight[1])
    defects = [int(d) for d in defects]
    offset = int(np.bitwise_xor.reduce(f[defects])) if defects else 0
    v_node = graph.num_detectors
    w_off = mwpm_decode(aug, defects).weight
    w_on = mwpm_decode(aug, defects + [v_node]).weight
    w_min, w_comp = min(w_off, w_on), max(w_off, w_on)
    if abs(w_off - w_on) <= tie_tol and decoder_flip is not None:
        predicted = bool(decoder_flip)
    else:
        predicted = bool(offset) if w_off <= w_on else bool(1 ^ offset)
    g = w_comp - w_min
    correct = predicted == bool(true_flip)
    signed = g if correct else -g
    if p_ref is None:
        p_ref = reference_probability(graph)
    return GapRecord(signed, gap_to_db(signed, p_ref), correct, shot, w_min, w_comp, predicted)


def correlated_gap(
    graph: MatchingGraph,
    defects,
    true_flip: bool,
    observable: int = 0,
    shot: int = 0,
    p_ref: float | None = None,
) -> GapRecord:
    """Gap of the two-pass decoder, measured on its pass-2 reweighted graph."""
    from .correlated import circuit_correlated_decode, sibling_reweights

    pass1, pass2 = circuit_correlated_decode(graph, defects)
    updates = sibling_reweights(graph, pass1.edges)
    ids = np.fromiter(updates.keys(), dtype=np.int64, count=len(updates))
    pcs = np.fromiter(updates.values(), dtype=float, count=len(updates))
    flip = bool((pass2.observables >> observable) & 1)
    if p_ref is None:
        p_ref = reference_probability(graph)
    return complementary_gap(
        graph, defects, true_flip, observable, shot, p_ref,
        decoder_flip=flip, reweight=(ids, np.log((1.0 - pcs) / pcs)),
    )


def reference_probability(graph: MatchingGraph) -> float:
    probs = graph.probs[(graph.probs > 0) & (graph.probs < 0.5)]
    return float(np.median(probs))


def is_negative(signed_gap) -> np.ndarray:
    """Sign test that also counts ``-0.0`` (a failed exact tie)."""
    return np.signbit(np.asarray(signed_gap, dtype=float))
