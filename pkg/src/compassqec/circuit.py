"""Serial syndrome-extraction memory circuits.

Each stabilizer owns one ancilla.  A round extracts the stabilizers one at a
time: reset the ancilla, Hadamard, one controlled gate per data qubit (CNOT
where the stabilizer reads X, CZ where it reads Z), Hadamard, measure.  X-type
stabilizers (CSS origin) go first, scanned column by column; Z-type follow,
scanned row by row.  Inside a Z-type stabilizer the gates walk each column top
to bottom, left to right (q1, q4, q2, q5, q3, q6 for a 2x3 strip); inside an
X-type stabilizer they walk each row left to right, top to bottom, so a
mid-extraction ancilla fault leaves a residue perpendicular to the logical it
could otherwise shorten.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from .codes import PauliString, StabilizerCode
from .noise import ChannelTable, NoiseParams, PauliDistribution, code_capacity_channel


@dataclass(frozen=True)
class PrepBasis:
    qubits: tuple[int, ...]
    basis: str


@dataclass(frozen=True)
class Gate1:
    kind: str
    qubit: int


@dataclass(frozen=True)
class Gate2:
    kind: str
    control: int
    target: int


@dataclass(frozen=True)
class Noise:
    location: int
    qubits: tuple[int, ...]
    dist: PauliDistribution


@dataclass(frozen=True)
class Measure:
    qubit: int
    record: int
    basis: str
    flip_prob: float = 0.0


@dataclass(frozen=True)
class DetectorDef:
    records: tuple[int, ...]
    stabilizer: int
    round: int
    kind: str


@dataclass(frozen=True)
class ObservableDef:
    records: tuple[int, ...]
    index: int = 0


Instruction = Union[PrepBasis, Gate1, Gate2, Noise, Measure, DetectorDef, ObservableDef]


@dataclass(frozen=True)
class CodeCapacity:
    """Marker for a single noise layer between two perfect extraction rounds."""

    params: NoiseParams


@dataclass(frozen=True)
class Circuit:
    instructions: tuple[Instruction, ...]
    num_qubits: int
    num_records: int
    basis: str = "Z"
    rounds: int = 1
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def detectors(self) -> list[DetectorDef]:
        return [ins for ins in self.instructions if isinstance(ins, DetectorDef)]

    @property
    def observables(self) -> list[ObservableDef]:
        return [ins for ins in self.instructions if isinstance(ins, ObservableDef)]

    @property
    def num_detectors(self) -> int:
        return len(self.detectors)

    @property
    def num_observables(self) -> int:
        return len(self.observables)

    @property
    def noise_locations(self) -> list[Noise]:
        return [ins for ins in self.instructions if isinstance(ins, Noise)]

    def count(self, cls) -> int:
        return sum(isinstance(ins, cls) for ins in self.instructions)


def _gate_order(stab: PauliString, d: int, column_major: bool) -> list[tuple[int, str]]:
    if column_major:
        return sorted(stab.support, key=lambda qp: (qp[0] % d, qp[0] // d))
    return sorted(stab.support, key=lambda qp: (qp[0] // d, qp[0] % d))


class _Builder:
    def __init__(self, num_qubits: int):
        self.instructions: list[Instruction] = []
        self.num_qubits = num_qubits
        self.num_records = 0
        self.num_locations = 0

    def add(self, ins: Instruction) -> None:
        self.instructions.append(ins)

    def noise(self, qubits, dist: PauliDistribution | None) -> None:
        if dist is None:
            return
        dist = dist.nonzero()
        if not dist.labels:
            return
        self.instructions.append(Noise(self.num_locations, tuple(qubits), dist))
        self.num_locations += 1

    def measure(self, qubit: int, basis: str, flip_prob: float) -> int:
        rec = self.num_records
        self.instructions.append(Measure(qubit, rec, basis, flip_prob))
        self.num_records += 1
        return rec


def _other(basis: str) -> str:
    return "X" if basis == "Z" else "Z"


def _extract_round(b: _Builder, code: StabilizerCode, channels: ChannelTable | None, flip: float) -> list[int]:
    """Append one serial extraction round; returns the record index per stabilizer."""
    n = code.num_qubits
    d = code.d
    records = []
    nx = len(code.x_stabilizers)
    for s, stab in enumerate(code.stabilizers):
        anc = n + s
        column_major = s >= nx
        b.add(PrepBasis((anc,), "Z"))
        b.add(Gate1("H", anc))
        b.noise((anc,), channels.h_channel if channels else None)
        for q, pauli in _gate_order(stab, d, column_major):
            if pauli == "X":
                b.add(Gate2("CNOT", anc, q))
                b.noise((anc, q), channels.cnot_channel if channels else None)
            elif pauli == "Z":
                b.add(Gate2("CZ", anc, q))
                b.noise((anc, q), channels.cz_channel if channels else None)
            else:
                raise ValueError("stabilizers with Y components are not supported")
        b.add(Gate1("H", anc))
        b.noise((anc,), channels.h_channel if channels else None)
        records.append(b.measure(anc, "Z", flip))
    return records


def _data_bases(code: StabilizerCode, basis: str) -> dict[int, str]:
    """Per-qubit basis in which the deformed memory state is a product state."""
    other = _other(basis)
    return {q: (other if q in code.hadamard_mask else basis) for q in range(code.num_qubits)}


def build_memory_circuit(
    code: StabilizerCode,
    basis: str = "Z",
    rounds: int | None = None,
    noise: ChannelTable | CodeCapacity | NoiseParams | None = None,
) -> Circuit:
    """Build an X- or Z-basis memory experiment for ``code``.

    ``noise`` is a :class:`ChannelTable` for circuit-level noise, a
    :class:`CodeCapacity` marker for a single data-noise layer sandwiched by
    perfect rounds, or ``None`` for a noiseless circuit.  A bare
    :class:`NoiseParams` is expanded with :func:`hbd_channels`.
    """
    from .noise import hbd_channels

    if basis not in ("X", "Z"):
        raise ValueError(f"memory basis must be 'X' or 'Z', got {basis!r}")
    if rounds is None:
        rounds = code.d
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    if isinstance(noise, NoiseParams):
        noise = hbd_channels(noise)
    if isinstance(noise, CodeCapacity):
        return _code_capacity_circuit(code, basis, noise)

    channels = noise
    flip = channels.meas_flip if channels else 0.0
    n = code.num_qubits
    m = len(code.stabilizers)
    nx = len(code.x_stabilizers)
    memory_type = range(0, nx) if basis == "X" else range(nx, m)
    b = _Builder(n + m)

    bases = _data_bases(code, basis)
    for pb in ("X", "Z"):
        qs = tuple(q for q in range(n) if bases[q] == pb)
        if qs:
            b.add(PrepBasis(qs, pb))

    history: list[list[int]] = []
    for r in range(rounds):
        for q in range(n):
            b.noise((q,), channels.idle_channel if channels else None)
        history.append(_extract_round(b, code, channels, flip))
        for s in range(m):
            kind = "X" if s < nx else "Z"
            if r == 0:
                if s in memory_type:
                    b.add(DetectorDef((history[0][s],), s, 0, kind))
            else:
                b.add(DetectorDef((history[r - 1][s], history[r][s]), s, r, kind))

    data_records = {}
    for q in range(n):
        data_records[q] = b.measure(q, bases[q], flip)
    kind = basis
    for s in memory_type:
        recs = tuple(sorted([history[-1][s]] + [data_records[q] for q in code.stabilizers[s].qubits]))
        b.add(DetectorDef(recs, s, rounds, kind))
    logical = code.logical_x if basis == "X" else code.logical_z
    b.add(ObservableDef(tuple(data_records[q] for q in logical.qubits), 0))

    return Circuit(
        instructions=tuple(b.instructions),
        num_qubits=b.num_qubits,
        num_records=b.num_records,
        basis=basis,
        rounds=rounds,
        meta={"d": code.d, "ell": code.ell, "deformation": code.deformation.value, "noise": "hbd" if channels else "none"},
    )


def _code_capacity_circuit(code: StabilizerCode, basis: str, noise: CodeCapacity) -> Circuit:
    n = code.num_qubits
    m = len(code.stabilizers)
    nx = len(code.x_stabilizers)
    b = _Builder(n + m)
    bases = _data_bases(code, basis)
    for pb in ("X", "Z"):
        qs = tuple(q for q in range(n) if bases[q] == pb)
        if qs:
            b.add(PrepBasis(qs, pb))
    reference = _extract_round(b, code, None, 0.0)
    dist = code_capacity_channel(noise.params)
    for q in range(n):
        b.noise((q,), dist)
    after = _extract_round(b, code, None, 0.0)
    for s in range(m):
        b.add(DetectorDef((reference[s], after[s]), s, 1, "X" if s < nx else "Z"))
    data_records = {q: b.measure(q, bases[q], 0.0) for q in range(n)}
    logical = code.logical_x if basis == "X" else code.logical_z
    b.add(ObservableDef(tuple(data_records[q] for q in logical.qubits), 0))
    return Circuit(
        instructions=tuple(b.instructions),
        num_qubits=b.num_qubits,
        num_records=b.num_records,
        basis=basis,
        rounds=1,
        meta={"d": code.d, "ell": code.ell, "deformation": code.deformation.value, "noise": "code_capacity"},
    )
