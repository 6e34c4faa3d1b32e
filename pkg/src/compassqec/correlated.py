"""Two-pass correlated matching.

The CSS decoder matches one error type, then lowers (or raises) the weights
of the same qubits in the other type's graph to the conditional probability
of the second component given the first.  The circuit-level decoder does the
same with hyperedges: once a component of a decomposed hyperedge is matched,
its sibling components are reweighted to P(both) / P(matched one).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .codecap import X_LOGICAL, Z_LOGICAL
from .codes import StabilizerCode
from .dem import ErrorMechanism, xor_merge
from .matching import (
    DecodeOutcome,
    MatchingGraph,
    graph_from_mechanisms,
    mwpm_decode,
    set_edge_weights,
)
from .noise import NoiseParams, code_capacity_channel, conditional_x_given_z, conditional_z_given_x

P_C_EPS = 1e-12


class DecodeOrder(str, enum.Enum):
    XZ = "XZ"  # X errors (Z-check syndrome) first
    ZX = "ZX"  # Z errors (X-check syndrome) first


@dataclass(frozen=True)
class ConditionalTable:
    p_x_given_z: float
    p_z_given_x: float

    @classmethod
    def from_eta(cls, eta: float) -> "ConditionalTable":
        return cls(conditional_x_given_z(eta), conditional_z_given_x(eta))

    def for_order(self, order: DecodeOrder) -> float:
        """Conditional probability applied in pass 2 for the given order."""
        return self.p_x_given_z if DecodeOrder(order) is DecodeOrder.ZX else self.p_z_given_x


@dataclass(frozen=True)
class CssCorrelatedConfig:
    order: DecodeOrder
    eta: float

    def __post_init__(self):
        object.__setattr__(self, "order", DecodeOrder(self.order))
        if not self.eta >= 0:
            raise ValueError("eta must be non-negative")


def clamp_probability(p: float, eps: float = P_C_EPS) -> float:
    return min(max(p, eps), 1.0 - eps)


@dataclass(frozen=True)
class CssDecodeResult:
    x_correction: frozenset[int]
    z_correction: frozenset[int]
    flips: tuple[bool, bool]  # predicted (Z_L, X_L) flips
    pass1: DecodeOutcome
    pass2: DecodeOutcome


class CssGraphs:
    """The two single-type matching graphs of a CSS code at code capacity.

    ``z_error_graph`` has the X-type checks as detectors and edge probability
    ``p_y + p_z``; ``x_error_graph`` has the Z-type checks and ``p_x + p_y``.
    Each qubit becomes one edge (parallel qubits merge into one edge).
    """

    def __init__(self, code: StabilizerCode, params: NoiseParams):
        if not code.is_css:
            raise ValueError("the CSS correlated decoder needs an undeformed (CSS) code")
        dist = code_capacity_channel(params)
        px, py, pz = (dist.prob(lab) for lab in ("X", "Y", "Z"))
        self.code = code
        self.params = params
        hx, hz = code.parity_check_matrices()
        lx = set(code.logical_x.qubits)
        lz = set(code.logical_z.qubits)
        self.z_error_graph, self.z_edge_of = self._graph(hx, py + pz, lx, X_LOGICAL)
        self.x_error_graph, self.x_edge_of = self._graph(hz, px + py, lz, Z_LOGICAL)
        self.px, self.py, self.pz = px, py, pz

    @staticmethod
    def _graph(h: np.ndarray, p: float, logical: set[int], obs_index: int):
        n = h.shape[1]
        mechs = []
        qubit_of_mech = []
        for q in range(n):
            dets = tuple(int(r) for r in np.flatnonzero(h[:, q]))
            if not dets:
                continue
            if len(dets) > 2:
                raise ValueError(f"qubit {q} touches {len(dets)} checks of one type")
            mechs.append(ErrorMechanism(p, dets, (obs_index,) if q in logical else ()))
            qubit_of_mech.append(q)
        graph = graph_from_mechanisms(mechs, h.shape[0], 2)
        edge_of = np.full(n, -1, dtype=np.int64)
        for e, ids in enumerate(graph.fault_ids):
            for i in ids:
                edge_of[qubit_of_mech[i]] = e
        rep = [qubit_of_mech[min(ids)] for ids in graph.fault_ids]
        graph._cache["qubit_rep"] = rep
        graph._cache["edge_qubits"] = [tuple(sorted(qubit_of_mech[i] for i in ids)) for ids in graph.fault_ids]
        return graph, edge_of


def _qubits(graph: MatchingGraph, outcome: DecodeOutcome) -> frozenset[int]:
    rep = graph._cache["qubit_rep"]
    return frozenset(rep[e] for e in outcome.edges)


def _parity_odd(p: float, m: int) -> float:
    """Probability that an odd number of ``m`` independent rate-``p`` events occur."""
    return (1.0 - (1.0 - 2.0 * p) ** m) / 2.0


def _pass2_probabilities(graphs: CssGraphs, order: DecodeOrder, pass1: DecodeOutcome, p_c: float):
    """Second-graph edges touched by the pass-1 correction and their conditional probabilities.

    A fired first-graph edge says an odd number of its parallel qubits carry
    the first error type, not which one.  Each of those qubits then carries
    the second type with ``(p_both E + p_second_only O) / (b E + (1 - b) O)``,
    ``E`` / ``O`` being the even / odd parity probabilities of the other
    parallel qubits and ``b`` the first-type marginal; a lone qubit gets
    ``p_c``.  A second-graph edge flips when an odd number of its qubits do.
    """
    if order is DecodeOrder.ZX:
        first, second, second_edge_of = graphs.z_error_graph, graphs.x_error_graph, graphs.x_edge_of
        b1, only2 = graphs.py + graphs.pz, graphs.px
    else:
        first, second, second_edge_of = graphs.x_error_graph, graphs.z_error_graph, graphs.z_edge_of
        b1, only2 = graphs.px + graphs.py, graphs.pz
    b2 = graphs.py + only2
    rate: dict[int, float] = {}
    for e in pass1.edges:
        group = first._cache["edge_qubits"][e]
        if len(group) == 1:
            r = p_c
        else:
            odd = _parity_odd(b1, len(group) - 1)
            even = 1.0 - odd
            den = b1 * even + (1.0 - b1) * odd
            r = (graphs.py * even + only2 * odd) / den if den > 0 else p_c
        for q in group:
            rate[q] = r
    touched = sorted({int(second_edge_of[q]) for q in rate if second_edge_of[q] >= 0})
    probs = []
    for e2 in touched:
        acc = 0.0
        for q in second._cache["edge_qubits"][e2]:
            acc = xor_merge(acc, rate.get(q, b2))
        probs.append(clamp_probability(acc))
    return touched, np.array(probs, dtype=float)


def css_correlated_decode(
    graphs: CssGraphs, syndrome_x, syndrome_z, cfg: CssCorrelatedConfig
) -> CssDecodeResult:
    """Decode one shot; ``syndrome_x`` are X-type check outcomes, ``syndrome_z`` Z-type."""
    sx = np.flatnonzero(np.asarray(syndrome_x, dtype=bool))
    sz = np.flatnonzero(np.asarray(syndrome_z, dtype=bool))
    p_c = clamp_probability(ConditionalTable.from_eta(cfg.eta).for_order(cfg.order))
    if cfg.order is DecodeOrder.ZX:
        first_graph, first_defects = graphs.z_error_graph, sx
        second_graph, second_defects = graphs.x_error_graph, sz
    else:
        first_graph, first_defects = graphs.x_error_graph, sz
        second_graph, second_defects = graphs.z_error_graph, sx
    pass1 = mwpm_decode(first_graph, first_defects)
    corrected = _qubits(first_graph, pass1)
    targets, probs = _pass2_probabilities(graphs, cfg.order, pass1, p_c)
    graph2 = set_edge_weights(second_graph, targets, np.log((1.0 - probs) / probs)) if targets else second_graph
    pass2 = mwpm_decode(graph2, second_defects)
    second = _qubits(second_graph, pass2)
    if cfg.order is DecodeOrder.ZX:
        z_corr, x_corr = corrected, second
    else:
        x_corr, z_corr = corrected, second
    obs = pass1.observables ^ pass2.observables
    flips = (bool((obs >> Z_LOGICAL) & 1), bool((obs >> X_LOGICAL) & 1))
    return CssDecodeResult(x_corr, z_corr, flips, pass1, pass2)


def css_decode_batch(graphs: CssGraphs, syndromes: np.ndarray, cfg: CssCorrelatedConfig) -> np.ndarray:
    """Predicted (Z_L, X_L) flips for every row of full syndromes (X-type checks first)."""
    syndromes = np.asarray(syndromes, dtype=bool)
    nx = len(graphs.code.x_stabilizers)
    pred = np.zeros((syndromes.shape[0], 2), dtype=bool)
    memo: dict[bytes, tuple[bool, bool]] = {}
    packed = np.packbits(syndromes, axis=1)
    for s in range(syndromes.shape[0]):
        k = packed[s].tobytes()
        hit = memo.get(k)
        if hit is None:
            hit = memo[k] = css_correlated_decode(graphs, syndromes[s, :nx], syndromes[s, nx:], cfg).flips
        pred[s] = hit
    return pred


def independent_css_decode(graphs: CssGraphs, syndrome_x, syndrome_z) -> tuple[bool, bool]:
    """Plain MWPM on the two graphs separately; predicted (Z_L, X_L) flips."""
    a = mwpm_decode(graphs.z_error_graph, np.flatnonzero(syndrome_x))
    b = mwpm_decode(graphs.x_error_graph, np.flatnonzero(syndrome_z))
    obs = a.observables ^ b.observables
    return bool((obs >> Z_LOGICAL) & 1), bool((obs >> X_LOGICAL) & 1)


def sibling_reweights(graph: MatchingGraph, matched_edges) -> dict[int, float]:
    """Conditional probability for each sibling of a matched hyperedge component.

    When several hyperedges reach the same sibling the largest ``p_c`` wins.
    """
    hyper_of = graph.edge_hyperedges()
    best: dict[int, float] = {}
    for e in matched_edges:
        p1 = float(graph.probs[e])
        for h in hyper_of[e]:
            joint = float(graph.hyperedge_probs[h])
            for e2 in graph.hyperedges[h]:
                if e2 == e:
                    continue
                p_c = clamp_probability(joint / p1)
                if p_c > best.get(e2, -1.0):
                    best[e2] = p_c
    return best


def circuit_correlated_decode(graph: MatchingGraph, defects) -> tuple[DecodeOutcome, DecodeOutcome]:
    """Returns (pass-1 outcome, pass-2 outcome); pass 2 is the correlated prediction."""
    pass1 = mwpm_decode(graph, defects)
    updates = sibling_reweights(graph, pass1.edges)
    if not updates:
        return pass1, pass1
    ids = np.fromiter(updates.keys(), dtype=np.int64, count=len(updates))
    pcs = np.fromiter(updates.values(), dtype=float, count=len(updates))
    graph2 = set_edge_weights(graph, ids, np.log((1.0 - pcs) / pcs))
    return pass1, mwpm_decode(graph2, defects)


def correlated_decode_batch(graph: MatchingGraph, detection_events: np.ndarray):
    """Paired decode of every shot: (standard predictions, correlated predictions).

    Both come from the same pass-1 matching, so the comparison is exact per shot.
    """
    events = np.asarray(detection_events, dtype=bool)
    shots = events.shape[0]
    std = np.zeros((shots, graph.num_observables), dtype=bool)
    corr = np.zeros((shots, graph.num_observables), dtype=bool)
    memo: dict[bytes, tuple[int, int]] = {}
    packed = np.packbits(events, axis=1)
    for s in range(shots):
        key = packed[s].tobytes()
        hit = memo.get(key)
        if hit is None:
            p1, p2 = circuit_correlated_decode(graph, np.flatnonzero(events[s]))
            hit = (p1.observables, p2.observables)
            memo[key] = hit
        for o in range(graph.num_observables):
            std[s, o] = (hit[0] >> o) & 1
            corr[s, o] = (hit[1] >> o) & 1
    return std, corr


def conditional_weight(p_c: float) -> float:
    p_c = clamp_probability(p_c)
    return math.log((1.0 - p_c) / p_c)
