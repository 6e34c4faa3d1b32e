"""Bit-packed Pauli-frame propagation.

A frame holds one X bit and one Z bit per qubit and lane.  Lanes are packed
64 to a ``uint64`` word, lane ``k`` living in word ``k >> 6`` at bit
``k & 63``.  The same engine serves three purposes: Monte-Carlo sampling
(lanes are shots), fault enumeration for the detector error model (lanes are
single faults) and the determinism check (lanes are injected stabilizers of
freshly prepared qubits).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from .circuit import Circuit, DetectorDef, Gate1, Gate2, Measure, Noise, ObservableDef, PrepBasis

CHUNK_LANES = 16384
_ONE = np.uint64(1)

_PREP, _H, _CNOT, _CZ, _NOISE, _MEAS = range(6)

# (x, z) bits of a single-qubit Pauli label
_XZ = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}


@dataclass
class ShotBatch:
    detection_events: np.ndarray
    observable_flips: np.ndarray
    seed: int | None = None

    @property
    def shots(self) -> int:
        return self.detection_events.shape[0]

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.packbits(self.detection_events, axis=1, bitorder="little").tobytes())
        h.update(np.packbits(self.observable_flips, axis=1, bitorder="little").tobytes())
        return h.hexdigest()

    @staticmethod
    def concatenate(batches: list["ShotBatch"]) -> "ShotBatch":
        return ShotBatch(
            np.concatenate([b.detection_events for b in batches], axis=0),
            np.concatenate([b.observable_flips for b in batches], axis=0),
            batches[0].seed if batches else None,
        )


class _Program:
    """Flat op list for one circuit, built once and cached on the circuit."""

    def __init__(self, circuit: Circuit):
        self.num_qubits = circuit.num_qubits
        self.num_records = circuit.num_records
        ops = []
        self.noise_ops = {}
        self.meas_ops = {}
        self.prep_ops = []
        for ins in circuit.instructions:
            if isinstance(ins, PrepBasis):
                self.prep_ops.append(len(ops))
                ops.append((_PREP, np.array(ins.qubits, dtype=np.intp), ins.basis))
            elif isinstance(ins, Gate1):
                if ins.kind != "H":
                    raise ValueError(f"unsupported single-qubit gate {ins.kind}")
                ops.append((_H, ins.qubit))
            elif isinstance(ins, Gate2):
                if ins.kind == "CNOT":
                    ops.append((_CNOT, ins.control, ins.target))
                elif ins.kind == "CZ":
                    ops.append((_CZ, ins.control, ins.target))
                else:
                    raise ValueError(f"unsupported two-qubit gate {ins.kind}")
            elif isinstance(ins, Noise):
                dist = ins.dist
                probs = np.array(dist.probs, dtype=float)
                xb = np.array([[_XZ[c][0] for c in lab] for lab in dist.labels], dtype=bool)
                zb = np.array([[_XZ[c][1] for c in lab] for lab in dist.labels], dtype=bool)
                op = (_NOISE, ins.location, ins.qubits, float(probs.sum()), np.cumsum(probs), xb, zb)
                self.noise_ops[ins.location] = op
                ops.append(op)
            elif isinstance(ins, Measure):
                op = (_MEAS, ins.qubit, ins.record, ins.basis, ins.flip_prob)
                self.meas_ops[ins.record] = op
                ops.append(op)
        self.ops = ops
        self.detectors = [np.array(ins.records, dtype=np.intp) for ins in circuit.instructions if isinstance(ins, DetectorDef)]
        self.observables = [
            np.array(ins.records, dtype=np.intp) for ins in circuit.instructions if isinstance(ins, ObservableDef)
        ]


def _program(circuit: Circuit) -> _Program:
    prog = circuit.__dict__.get("_program")
    if prog is None:
        prog = _Program(circuit)
        object.__setattr__(circuit, "_program", prog)
    return prog


def _xor_lanes(row: np.ndarray, lanes: np.ndarray) -> None:
    np.bitwise_xor.at(row, lanes >> 6, _ONE << (lanes & 63).astype(np.uint64))


def _run(
    prog: _Program,
    num_lanes: int,
    on_noise: Callable | None,
    on_measure: Callable | None,
    on_prep: Callable | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    words = (num_lanes + 63) // 64
    fx = np.zeros((prog.num_qubits, words), dtype=np.uint64)
    fz = np.zeros_like(fx)
    rec = np.zeros((prog.num_records, words), dtype=np.uint64)
    for op in prog.ops:
        code = op[0]
        if code == _CZ:
            a, b = op[1], op[2]
            fz[a] ^= fx[b]
            fz[b] ^= fx[a]
        elif code == _CNOT:
            c, t = op[1], op[2]
            fx[t] ^= fx[c]
            fz[c] ^= fz[t]
        elif code == _NOISE:
            if on_noise is not None:
                on_noise(op, fx, fz)
        elif code == _H:
            q = op[1]
            fx[q] ^= fz[q]
            fz[q] ^= fx[q]
            fx[q] ^= fz[q]
        elif code == _MEAS:
            q, r, basis = op[1], op[2], op[3]
            rec[r] = fx[q] if basis == "Z" else fz[q]
            if on_measure is not None:
                on_measure(op, rec[r])
        elif code == _PREP:
            fx[op[1]] = 0
            fz[op[1]] = 0
            if on_prep is not None:
                on_prep(op, fx, fz)
    det = np.zeros((len(prog.detectors), words), dtype=np.uint64)
    for i, recs in enumerate(prog.detectors):
        det[i] = np.bitwise_xor.reduce(rec[recs], axis=0)
    obs = np.zeros((len(prog.observables), words), dtype=np.uint64)
    for i, recs in enumerate(prog.observables):
        obs[i] = np.bitwise_xor.reduce(rec[recs], axis=0)
    return det, obs


def unpack_lanes(packed: np.ndarray, num_lanes: int) -> np.ndarray:
    """``(rows, words)`` uint64 -> ``(num_lanes, rows)`` bool."""
    if packed.shape[0] == 0:
        return np.zeros((num_lanes, 0), dtype=bool)
    bits = np.unpackbits(np.ascontiguousarray(packed).view(np.uint8), axis=1, bitorder="little")
    return bits[:, :num_lanes].T.astype(bool)


def _bernoulli_lanes(rng: np.random.Generator, n: int, p: float) -> np.ndarray:
    if p <= 0.0:
        return np.empty(0, dtype=np.int64)
    if p >= 0.05:
        return np.flatnonzero(rng.random(n) < p)
    positions = []
    start = -1
    while True:
        expect = int((n - start) * p + 6.0 * np.sqrt((n - start) * p) + 16)
        gaps = rng.geometric(p, size=expect)
        pos = start + np.cumsum(gaps)
        positions.append(pos)
        if pos[-1] >= n:
            break
        start = int(pos[-1])
    pos = np.concatenate(positions)
    return pos[pos < n]


def _sampling_hooks(rng: np.random.Generator, num_lanes: int):
    def on_noise(op, fx, fz):
        _, _, qubits, ptot, cum, xb, zb = op
        lanes = _bernoulli_lanes(rng, num_lanes, ptot)
        if lanes.size == 0:
            return
        if cum.size == 1:
            outcome = np.zeros(lanes.size, dtype=np.intp)
        else:
            outcome = np.searchsorted(cum, rng.random(lanes.size) * ptot, side="right")
            np.minimum(outcome, cum.size - 1, out=outcome)
        for j, q in enumerate(qubits):
            sel = xb[outcome, j]
            if sel.any():
                _xor_lanes(fx[q], lanes[sel])
            sel = zb[outcome, j]
            if sel.any():
                _xor_lanes(fz[q], lanes[sel])

    def on_measure(op, row):
        p = op[4]
        if p > 0:
            lanes = _bernoulli_lanes(rng, num_lanes, p)
            if lanes.size:
                _xor_lanes(row, lanes)

    return on_noise, on_measure


def _chunk_sizes(shots: int, chunk: int) -> list[int]:
    sizes = [chunk] * (shots // chunk)
    if shots % chunk:
        sizes.append(shots % chunk)
    return sizes


def iter_simulate(circuit: Circuit, shots: int, seed: int, chunk: int = CHUNK_LANES) -> Iterator[ShotBatch]:
    """Yield consecutive :class:`ShotBatch` chunks; each chunk has its own Philox stream."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    prog = _program(circuit)
    sizes = _chunk_sizes(shots, chunk)
    streams = np.random.SeedSequence(seed).spawn(len(sizes))
    for size, ss in zip(sizes, streams):
        rng = np.random.Generator(np.random.Philox(ss))
        on_noise, on_measure = _sampling_hooks(rng, size)
        det, obs = _run(prog, size, on_noise, on_measure)
        yield ShotBatch(unpack_lanes(det, size), unpack_lanes(obs, size), seed)


def simulate(circuit: Circuit, shots: int, seed: int, chunk: int = CHUNK_LANES) -> ShotBatch:
    return ShotBatch.concatenate(list(iter_simulate(circuit, shots, seed, chunk)))


@dataclass(frozen=True)
class Fault:
    """A single fault: Pauli ``label`` at a noise location, or a flip of record ``record``."""

    location: int | None
    record: int | None
    label: str
    probability: float
    detectors: tuple[int, ...]
    observables: tuple[int, ...]


def enumerate_faults(circuit: Circuit) -> list[Fault]:
    """Propagate every single fault of the circuit in its own lane."""
    prog = _program(circuit)
    plan = []
    lane_of_noise: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    lane_of_meas: dict[int, int] = {}
    lane = 0
    for loc, op in prog.noise_ops.items():
        k = op[4].size
        lane_of_noise[loc] = (np.arange(lane, lane + k, dtype=np.int64), np.arange(k))
        for j in range(k):
            prob = op[4][j] - (op[4][j - 1] if j else 0.0)
            plan.append((loc, None, j, float(prob)))
        lane += k
    for r, op in prog.meas_ops.items():
        if op[4] > 0:
            lane_of_meas[r] = lane
            plan.append((None, r, -1, float(op[4])))
            lane += 1
    num_lanes = lane
    if num_lanes == 0:
        return []

    def on_noise(op, fx, fz):
        lanes, outcome = lane_of_noise[op[1]]
        xb, zb = op[5], op[6]
        for j, q in enumerate(op[2]):
            sel = xb[outcome, j]
            if sel.any():
                _xor_lanes(fx[q], lanes[sel])
            sel = zb[outcome, j]
            if sel.any():
                _xor_lanes(fz[q], lanes[sel])

    def on_measure(op, row):
        lane_ = lane_of_meas.get(op[2])
        if lane_ is not None:
            _xor_lanes(row, np.array([lane_], dtype=np.int64))

    det, obs = _run(prog, num_lanes, on_noise, on_measure)
    det_bits = unpack_lanes(det, num_lanes)
    obs_bits = unpack_lanes(obs, num_lanes)
    noise_by_loc = {ins.location: ins for ins in circuit.noise_locations}
    faults = []
    for i, (loc, rec, j, prob) in enumerate(plan):
        label = noise_by_loc[loc].dist.labels[j] if loc is not None else "M"
        faults.append(
            Fault(
                location=loc,
                record=rec,
                label=label,
                probability=prob,
                detectors=tuple(np.flatnonzero(det_bits[i]).tolist()),
                observables=tuple(np.flatnonzero(obs_bits[i]).tolist()),
            )
        )
    return faults


def nondeterministic_outputs(circuit: Circuit) -> tuple[list[int], list[int]]:
    """Detectors and observables that a stabilizer of some fresh preparation can flip.

    Right after a reset into basis B the prepared qubit is stabilized by B, so
    injecting B there is physically trivial.  A detector that notices such an
    injection depends on a random outcome and is not deterministic.
    """
    prog = _program(circuit)
    slots = []
    for idx in prog.prep_ops:
        op = prog.ops[idx]
        for q in op[1]:
            slots.append((idx, int(q), op[2]))
    num_lanes = len(slots)
    if num_lanes == 0:
        return [], []
    by_op: dict[int, list[tuple[int, int, str]]] = {}
    for lane, (idx, q, basis) in enumerate(slots):
        by_op.setdefault(idx, []).append((lane, q, basis))
    op_ids = {id(prog.ops[idx]): idx for idx in prog.prep_ops}

    def on_prep(op, fx, fz):
        for lane, q, basis in by_op[op_ids[id(op)]]:
            target = fz if basis == "Z" else fx
            _xor_lanes(target[q], np.array([lane], dtype=np.int64))

    det, obs = _run(prog, num_lanes, None, None, on_prep)
    bad_det = np.flatnonzero(det.any(axis=1)).tolist()
    bad_obs = np.flatnonzero(obs.any(axis=1)).tolist()
    return bad_det, bad_obs


def assert_deterministic(circuit: Circuit) -> None:
    bad_det, bad_obs = nondeterministic_outputs(circuit)
    if bad_det or bad_obs:
        raise ValueError(f"non-deterministic detectors {bad_det[:10]} / observables {bad_obs}")
