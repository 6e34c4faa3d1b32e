"""Detector error models: extraction from circuits, hyperedge decomposition, text I/O."""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field, replace

import numpy as np

from .circuit import Circuit, Noise
from .frames import enumerate_faults
from .noise import PauliDistribution, independent_equivalent


@dataclass(frozen=True)
class ErrorMechanism:
    probability: float
    detectors: tuple[int, ...]
    observables: tuple[int, ...] = ()

    @property
    def signature(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return self.detectors, self.observables


@dataclass
class DetectorErrorModel:
    """Independent error mechanisms.

    ``detector_classes`` (one letter per detector, ``"X"`` or ``"Z"``) names
    the stabilizer type behind each detector; decomposition keeps every
    matching edge inside one class.
    """

    mechanisms: list[ErrorMechanism]
    num_detectors: int
    num_observables: int
    detector_classes: str | None = None

    def __len__(self) -> int:
        return len(self.mechanisms)

    def to_text(self) -> str:
        lines = []
        for m in self.mechanisms:
            targets = [f"D{d}" for d in m.detectors] + [f"L{o}" for o in m.observables]
            lines.append(f"error({m.probability:.17g}) " + " ".join(targets))
        lines.append(f"detectors {self.num_detectors}")
        lines.append(f"observables {self.num_observables}")
        if self.detector_classes is not None:
            lines.append(f"classes {self.detector_classes}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "DetectorErrorModel":
        mechs = []
        num_d = num_o = None
        classes = None
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("detectors "):
                num_d = int(line.split()[1])
                continue
            if line.startswith("observables "):
                num_o = int(line.split()[1])
                continue
            if line.startswith("classes "):
                classes = line.split()[1]
                continue
            m = re.fullmatch(r"error\(([^)]+)\)((?:\s+(?:[DL]\d+|\^))*)", line)
            if m is None:
                raise ValueError(f"unparseable line: {raw!r}")
            # "^" separates suggested components; the mechanism is their symmetric difference
            dset: set[int] = set()
            oset: set[int] = set()
            for t in m.group(2).split():
                if t == "^":
                    continue
                (dset if t[0] == "D" else oset).symmetric_difference_update({int(t[1:])})
            mechs.append(ErrorMechanism(float(m.group(1)), tuple(sorted(dset)), tuple(sorted(oset))))
        if num_d is None:
            num_d = 1 + max((d for m in mechs for d in m.detectors), default=-1)
        if num_o is None:
            num_o = 1 + max((o for m in mechs for o in m.observables), default=-1)
        return cls(mechs, num_d, num_o, classes)

    def sample(self, shots: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
        """Sample mechanisms independently; returns (detection events, observable flips)."""
        rng = np.random.default_rng(seed)
        det = np.zeros((shots, self.num_detectors), dtype=bool)
        obs = np.zeros((shots, self.num_observables), dtype=bool)
        for m in self.mechanisms:
            fired = rng.random(shots) < m.probability
            if not fired.any():
                continue
            for d in m.detectors:
                det[:, d] ^= fired
            for o in m.observables:
                obs[:, o] ^= fired
        return det, obs


def xor_merge(p1: float, p2: float) -> float:
    """Probability that exactly one of two independent events fires."""
    return p1 * (1.0 - p2) + p2 * (1.0 - p1)


def extract_dem(circuit: Circuit) -> DetectorErrorModel:
    """Collect every single fault by signature, merging identical signatures.

    Each channel's mutually exclusive outcomes are first rewritten as
    independent mechanisms with the same joint distribution, so merging by
    XOR is exact.  Faults that flip nothing are dropped.
    """
    merged: dict[tuple, float] = {}
    for f in enumerate_faults(independent_form(circuit)):
        if not f.detectors and not f.observables:
            continue
        key = (f.detectors, f.observables)
        merged[key] = xor_merge(merged.get(key, 0.0), f.probability)
    mechs = []
    for (dets, obs), p in sorted(merged.items()):
        if p > 0.5 + 1e-12:
            raise ValueError(f"merged probability {p} exceeds 1/2 for {dets}")
        mechs.append(ErrorMechanism(p, dets, obs))
    classes = "".join(det.kind for det in circuit.detectors)
    return DetectorErrorModel(mechs, circuit.num_detectors, circuit.num_observables, classes)


def independent_form(circuit: Circuit) -> Circuit:
    """The same circuit with every noise channel replaced by its independent-mechanism rates."""
    cache: dict[PauliDistribution, PauliDistribution] = {}
    out = []
    for ins in circuit.instructions:
        if isinstance(ins, Noise):
            if ins.dist not in cache:
                cache[ins.dist] = independent_equivalent(ins.dist) or ins.dist
            ins = replace(ins, dist=cache[ins.dist])
        out.append(ins)
    return replace(circuit, instructions=tuple(out))


class UndecomposableHyperedge(ValueError):
    pass


@dataclass
class DecomposedDEM:
    """Graphlike view of a DEM.

    ``edges`` holds every graphlike mechanism (one or two detectors of one
    class) plus, for each other mechanism ("hyperedge"), one component copy
    per piece carrying the hyperedge's probability.  ``hyperedges[h]`` is the
    original mechanism and ``components[h]`` the indices of its copies in
    ``edges``.
    """

    edges: list[ErrorMechanism]
    hyperedges: list[ErrorMechanism]
    components: list[tuple[int, ...]]
    undetectable: list[ErrorMechanism]
    num_detectors: int
    num_observables: int
    source: DetectorErrorModel | None = field(default=None, repr=False)


def _targets(dets, obs) -> str:
    return " ".join([f"D{d}" for d in dets] + [f"L{o}" for o in obs])


def decomposed_to_text(ddem: "DecomposedDEM") -> str:
    """DEM text with each hyperedge written as its components joined by ``^``."""
    n_plain = len(ddem.edges) - sum(len(c) for c in ddem.components)
    lines = [f"error({m.probability:.17g}) {_targets(m.detectors, m.observables)}" for m in ddem.edges[:n_plain]]
    for h, comps in zip(ddem.hyperedges, ddem.components):
        parts = " ^ ".join(_targets(ddem.edges[i].detectors, ddem.edges[i].observables) for i in comps)
        lines.append(f"error({h.probability:.17g}) {parts}")
    for m in ddem.undetectable:
        lines.append(f"error({m.probability:.17g}) {_targets(m.detectors, m.observables)}")
    lines.append(f"detectors {ddem.num_detectors}")
    lines.append(f"observables {ddem.num_observables}")
    if ddem.source is not None and ddem.source.detector_classes is not None:
        lines.append(f"classes {ddem.source.detector_classes}")
    return "\n".join(lines) + "\n"


def _obs_xor(parts) -> tuple[int, ...]:
    acc: set[int] = set()
    for obs in parts:
        acc ^= set(obs)
    return tuple(sorted(acc))


def _split_search(dets, obs, by_dets, candidates, sizes):
    """Cheapest split of ``dets`` into existing edges whose detector sets XOR to ``dets``."""
    target = frozenset(dets)
    for size in sizes:
        found = []
        for combo in itertools.combinations(candidates, size):
            acc: set[int] = set()
            for c in combo:
                acc ^= set(c)
            if acc != target:
                continue
            for obs_choice in itertools.product(*(by_dets[c] for c in combo)):
                if _obs_xor(obs_choice) == obs:
                    found.append(tuple(sorted(zip(combo, obs_choice))))
        if found:
            return min(found)
    return None


def _graphlike(dets: tuple[int, ...], classes: str | None) -> bool:
    if not 1 <= len(dets) <= 2:
        return False
    return classes is None or len({classes[d] for d in dets}) == 1


def decompose_hyperedges(dem: DetectorErrorModel) -> DecomposedDEM:
    """Split every non-graphlike mechanism into existing graphlike edges.

    Graphlike means one or two detectors of a single class.  Two-piece splits
    are preferred over three-piece ones; ties go to the lexicographically
    smallest list of pieces.  The pieces' observable sets must XOR to the
    mechanism's.
    """
    classes = dem.detector_classes
    edges: list[ErrorMechanism] = []
    hyper: list[ErrorMechanism] = []
    undetectable: list[ErrorMechanism] = []
    by_dets: dict[tuple[int, ...], list[tuple[int, ...]]] = {}
    touching: dict[int, set[tuple[int, ...]]] = {}
    for m in dem.mechanisms:
        if not m.detectors:
            undetectable.append(m)
        elif _graphlike(m.detectors, classes):
            edges.append(m)
            if m.observables not in by_dets.setdefault(m.detectors, []):
                by_dets[m.detectors].append(m.observables)
            for d in m.detectors:
                touching.setdefault(d, set()).add(m.detectors)
        else:
            hyper.append(m)

    components = []
    for h in hyper:
        dset = set(h.detectors)
        inside = sorted({c for d in h.detectors for c in touching.get(d, ()) if set(c) <= dset})
        split = _split_search(h.detectors, h.observables, by_dets, inside, (2, 3))
        if split is None:
            near = sorted({c for d in h.detectors for c in touching.get(d, ())})
            split = _split_search(h.detectors, h.observables, by_dets, near, (2, 3))
        if split is None:
            raise UndecomposableHyperedge(f"no decomposition for detectors {h.detectors} observables {h.observables}")
        ids = []
        for dets, obs in split:
            ids.append(len(edges))
            edges.append(ErrorMechanism(h.probability, dets, obs))
        components.append(tuple(ids))
    return DecomposedDEM(edges, hyper, components, undetectable, dem.num_detectors, dem.num_observables, dem)


def edge_weight(p: float) -> float:
    """Log-likelihood weight ``log((1 - p) / p)``; negative when ``p > 1/2``."""
    if p <= 0.0:
        return math.inf
    if p >= 1.0:
        return -math.inf
    return math.log((1.0 - p) / p)
