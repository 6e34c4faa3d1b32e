"""Weighted detector graphs and exact minimum-weight perfect matching decoding."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._backend import Matcher, UnmatchableDefects
from .dem import DecomposedDEM, ErrorMechanism, edge_weight, xor_merge

__all__ = [
    "DecodeOutcome",
    "MatchingGraph",
    "UnmatchableDefects",
    "decode_batch",
    "mwpm_decode",
    "reweight_edges",
    "to_dot",
    "to_matching_graph",
]


@dataclass(frozen=True, eq=False)
class MatchingGraph:
    """Detectors ``0..num_detectors-1`` plus a boundary node ``num_detectors``.

    Edge ``e`` joins ``eu[e]`` and ``ev[e]`` with probability ``probs[e]`` and
    weight ``weights[e] = log((1 - p) / p)``; ``obs_masks[e]`` is the bitmask
    of observables it flips.  ``fault_ids[e]`` lists the decomposed-DEM edges
    merged into it.  ``hyperedges[h]`` holds the graph edges of hyperedge
    ``h``'s components and ``hyperedge_probs[h]`` its probability.
    """

    num_detectors: int
    num_observables: int
    eu: np.ndarray
    ev: np.ndarray
    probs: np.ndarray
    weights: np.ndarray
    obs_masks: np.ndarray
    fault_ids: tuple[tuple[int, ...], ...] = ()
    hyperedges: tuple[tuple[int, ...], ...] = ()
    hyperedge_probs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def boundary(self) -> int:
        return self.num_detectors

    @property
    def num_edges(self) -> int:
        return len(self.eu)

    def edge_hyperedges(self) -> list[list[int]]:
        """For each edge, the hyperedges it is a component of."""
        if "edge_hyper" not in self._cache:
            out: list[list[int]] = [[] for _ in range(self.num_edges)]
            for h, comps in enumerate(self.hyperedges):
                for e in comps:
                    out[e].append(h)
            self._cache["edge_hyper"] = out
        return self._cache["edge_hyper"]

    def adjacency(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if "csr" not in self._cache:
            n = self.num_detectors + 1
            ends = np.concatenate([self.eu, self.ev])
            others = np.concatenate([self.ev, self.eu])
            edge_ids = np.concatenate([np.arange(self.num_edges)] * 2)
            order = np.lexsort((edge_ids, ends))
            indptr = np.zeros(n + 1, dtype=np.int32)
            np.add.at(indptr, ends + 1, 1)
            self._cache["csr"] = (
                np.cumsum(indptr).astype(np.int32),
                others[order].astype(np.int32),
                edge_ids[order].astype(np.int32),
            )
        return self._cache["csr"]

    def find_edge(self, u: int, v: int) -> int:
        if "pairs" not in self._cache:
            self._cache["pairs"] = {
                (min(a, b), max(a, b)): e for e, (a, b) in enumerate(zip(self.eu.tolist(), self.ev.tolist()))
            }
        return self._cache["pairs"].get((min(u, v), max(u, v)), -1)

    def _matcher(self):
        """Kernel matcher on |w|, plus the edges whose negative weight is pre-applied."""
        if "matcher" not in self._cache:
            if np.isnan(self.weights).any() or np.isinf(self.weights).any():
                raise ValueError("matching weights must be finite")
            negative = np.flatnonzero(self.weights < 0)
            indptr, adj_node, adj_edge = self.adjacency()
            m = Matcher(indptr, adj_node, adj_edge, self.eu, self.ev, np.abs(self.weights), self.boundary)
            self._cache["matcher"] = (m, negative)
        return self._cache["matcher"]


def _mask(obs) -> int:
    out = 0
    for o in obs:
        out |= 1 << int(o)
    return out


def _from_mechanisms(
    mechanisms: list[ErrorMechanism],
    num_detectors: int,
    num_observables: int,
    components: list[tuple[int, ...]] = (),
    hyper_probs: list[float] = (),
) -> MatchingGraph:
    boundary = num_detectors
    # (u, v) -> {obs mask: (p, fault ids)}
    groups: dict[tuple[int, int], dict[int, list]] = {}
    for i, m in enumerate(mechanisms):
        if m.probability <= 0:
            continue
        if len(m.detectors) == 1:
            key = (m.detectors[0], boundary)
        elif len(m.detectors) == 2:
            key = (m.detectors[0], m.detectors[1])
        else:
            raise ValueError(f"mechanism {i} is not graphlike: {m.detectors}")
        slot = groups.setdefault(key, {}).setdefault(_mask(m.observables), [0.0, []])
        slot[0] = xor_merge(slot[0], m.probability)
        slot[1].append(i)

    eu, ev, probs, masks, faults = [], [], [], [], []
    fault_to_edge: dict[int, int] = {}
    for (u, v), by_mask in sorted(groups.items()):
        # parallel edges with different observables: keep the likelier one
        mask, (p, ids) = max(by_mask.items(), key=lambda kv: (kv[1][0], -kv[0]))
        e = len(eu)
        eu.append(u)
        ev.append(v)
        probs.append(p)
        masks.append(mask)
        merged = sorted(i for _, (_, group) in by_mask.items() for i in group)
        faults.append(tuple(merged))
        for i in merged:
            fault_to_edge[i] = e

    hyper = []
    hprobs = []
    for comps, p in zip(components, hyper_probs):
        hyper.append(tuple(fault_to_edge[i] for i in comps if i in fault_to_edge))
        hprobs.append(p)

    probs_arr = np.array(probs, dtype=float)
    return MatchingGraph(
        num_detectors=num_detectors,
        num_observables=num_observables,
        eu=np.array(eu, dtype=np.int32),
        ev=np.array(ev, dtype=np.int32),
        probs=probs_arr,
        weights=np.array([edge_weight(p) for p in probs], dtype=float),
        obs_masks=np.array(masks, dtype=np.uint64),
        fault_ids=tuple(faults),
        hyperedges=tuple(hyper),
        hyperedge_probs=np.array(hprobs, dtype=float),
    )


def to_matching_graph(ddem: DecomposedDEM) -> MatchingGraph:
    """One edge per endpoint pair, probabilities XOR-merged across decomposed edges."""
    return _from_mechanisms(
        ddem.edges,
        ddem.num_detectors,
        ddem.num_observables,
        ddem.components,
        [h.probability for h in ddem.hyperedges],
    )


def graph_from_mechanisms(mechanisms: list[ErrorMechanism], num_detectors: int, num_observables: int) -> MatchingGraph:
    """Matching graph from graphlike mechanisms with no hyperedge bookkeeping."""
    return _from_mechanisms(list(mechanisms), num_detectors, num_observables)


@dataclass(frozen=True)
class DecodeOutcome:
    edges: tuple[int, ...]
    weight: float
    observables: int
    pairs: tuple[tuple[int, int], ...] = ()

    def flips(self, num_observables: int) -> np.ndarray:
        return np.array([(self.observables >> i) & 1 for i in range(num_observables)], dtype=bool)


def mwpm_decode(graph: MatchingGraph, defects) -> DecodeOutcome:
    """Minimum-weight correction (edge set) whose boundary is ``defects``.

    Edges with negative weight are handled by applying them up front,
    toggling their endpoints, and matching on absolute weights.
    """
    matcher, negative = graph._matcher()
    active = set(int(d) for d in defects)
    boundary = graph.boundary
    for d in active:
        if not 0 <= d < graph.num_detectors:
            raise ValueError(f"defect {d} is not a detector of this graph")
    base_weight = 0.0
    chosen: dict[int, int] = {}
    for e in negative.tolist():
        chosen[e] = 1
        base_weight += float(graph.weights[e])
        for end in (int(graph.eu[e]), int(graph.ev[e])):
            if end != boundary:
                active ^= {end}
    total, path_edges, pairs = matcher.match(sorted(active))
    for e in path_edges:
        chosen[e] = chosen.get(e, 0) ^ 1
    edges = tuple(sorted(e for e, on in chosen.items() if on))
    obs = 0
    for e in edges:
        obs ^= int(graph.obs_masks[e])
    return DecodeOutcome(edges, float(base_weight + total), obs, tuple(pairs))


def reweight_edges(graph: MatchingGraph, edge_ids, p_c: float) -> MatchingGraph:
    """Copy of ``graph`` with the listed edges' weights set to ``log((1 - p_c) / p_c)``."""
    if not 0.0 < p_c < 1.0:
        raise ValueError(f"p_c must lie in (0, 1), got {p_c}")
    ids = np.asarray(list(edge_ids), dtype=np.int64)
    if ids.size == 0:
        return graph
    return set_edge_weights(graph, ids, np.full(ids.size, math.log((1.0 - p_c) / p_c)))


def set_edge_weights(graph: MatchingGraph, edge_ids, weights) -> MatchingGraph:
    w = graph.weights.copy()
    w[np.asarray(edge_ids, dtype=np.int64)] = weights
    cache = {k: v for k, v in graph._cache.items() if k in ("csr", "pairs", "edge_hyper")}
    return replace(graph, weights=w, _cache=cache)


def decode_batch(graph: MatchingGraph, detection_events: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Decode every shot; returns (predicted observable flips, matched weights).

    Repeated syndromes within the batch are decoded once.
    """
    events = np.asarray(detection_events, dtype=bool)
    shots = events.shape[0]
    pred = np.zeros((shots, graph.num_observables), dtype=bool)
    weights = np.zeros(shots)
    memo: dict[bytes, DecodeOutcome] = {}
    packed = np.packbits(events, axis=1)
    for s in range(shots):
        key = packed[s].tobytes()
        out = memo.get(key)
        if out is None:
            out = mwpm_decode(graph, np.flatnonzero(events[s]))
            memo[key] = out
        for o in range(graph.num_observables):
            pred[s, o] = (out.observables >> o) & 1
        weights[s] = out.weight
    return pred, weights


def to_dot(graph: MatchingGraph) -> str:
    """Graphviz DOT dump; the boundary node is drawn as a box."""
    lines = ["graph matching {", f'  {graph.boundary} [shape=box, label="B"];']
    for e in range(graph.num_edges):
        label = f"{graph.weights[e]:.3f}"
        if graph.obs_masks[e]:
            label += f" L{int(graph.obs_masks[e]):b}"
        lines.append(f'  {int(graph.eu[e])} -- {int(graph.ev[e])} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
