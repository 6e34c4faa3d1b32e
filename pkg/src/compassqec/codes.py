"""Elongated compass codes and their ZXXZ-square Clifford deformation.

Qubits sit on the vertices of a d x d grid, indexed row-major from the top
left: qubit ``i * d + j`` is at row ``i``, column ``j``.  Cells are the unit
squares between qubits; cell ``(i, j)`` has corners ``(i, j)``, ``(i, j+1)``,
``(i+1, j)`` and ``(i+1, j+1)`` for ``0 <= i, j <= d - 2``.

Cells whose coordinates satisfy ``i - j = 0 (mod ell)`` carry weight-4 X
stabilizers.  Between consecutive X cells of a cell row the vertical ZZ gauge
operators are merged into one Z stabilizer (weight ``2 * ell`` in the bulk,
shorter at the left and right edges).  Horizontal XX gauge operators that
commute with every Z stabilizer and are not already part of an X cell become
weight-2 X stabilizers.  The cell labelling ``1 <= i, j <= n - 1`` is taken
with ``n = d``; shifting to 0-based indices leaves ``i - j`` unchanged.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field, replace

import numpy as np

_PAULIS = ("X", "Y", "Z")


class Deformation(str, enum.Enum):
    CSS = "css"
    ZXXZ_SQUARE = "zxxz"


@dataclass(frozen=True, order=True)
class LatticeCoord:
    row: int
    col: int

    def index(self, d: int) -> int:
        if not (0 <= self.row < d and 0 <= self.col < d):
            raise ValueError(f"coordinate {self} outside a {d}x{d} lattice")
        return self.row * d + self.col

    @classmethod
    def from_index(cls, q: int, d: int) -> "LatticeCoord":
        if not 0 <= q < d * d:
            raise ValueError(f"qubit {q} outside a {d}x{d} lattice")
        return cls(q // d, q % d)


@dataclass(frozen=True)
class PauliString:
    """A Pauli operator given by its support: sorted ``(qubit, 'X'|'Y'|'Z')`` pairs."""

    support: tuple[tuple[int, str], ...]

    def __post_init__(self):
        qubits = [q for q, _ in self.support]
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"duplicate qubit in Pauli support {self.support}")
        if not self.support:
            raise ValueError("Pauli string must have weight >= 1")
        for _, p in self.support:
            if p not in _PAULIS:
                raise ValueError(f"bad Pauli label {p!r}")
        object.__setattr__(self, "support", tuple(sorted(self.support)))

    @classmethod
    def uniform(cls, qubits, pauli: str) -> "PauliString":
        return cls(tuple((int(q), pauli) for q in qubits))

    @property
    def weight(self) -> int:
        return len(self.support)

    @property
    def qubits(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.support)

    def as_dict(self) -> dict[int, str]:
        return dict(self.support)

    @property
    def x_mask(self) -> int:
        m = 0
        for q, p in self.support:
            if p != "Z":
                m |= 1 << q
        return m

    @property
    def z_mask(self) -> int:
        m = 0
        for q, p in self.support:
            if p != "X":
                m |= 1 << q
        return m

    def commutes_with(self, other: "PauliString") -> bool:
        overlap = (self.x_mask & other.z_mask) ^ (self.z_mask & other.x_mask)
        return bin(overlap).count("1") % 2 == 0

    def conjugate_hadamard(self, qubits) -> "PauliString":
        """Swap X and Z on the given qubits; supports are unchanged."""
        swap = {"X": "Z", "Z": "X", "Y": "Y"}
        qs = set(qubits)
        return PauliString(tuple((q, swap[p] if q in qs else p) for q, p in self.support))

    def __str__(self) -> str:
        return " ".join(f"{p}{q}" for q, p in self.support)


@dataclass(frozen=True)
class StabilizerCode:
    d: int
    ell: int
    deformation: Deformation
    x_stabilizers: tuple[PauliString, ...]
    z_stabilizers: tuple[PauliString, ...]
    logical_x: PauliString
    logical_z: PauliString
    hadamard_mask: frozenset[int] = field(default_factory=frozenset)

    @property
    def num_qubits(self) -> int:
        return self.d * self.d

    @property
    def stabilizers(self) -> tuple[PauliString, ...]:
        """X-type generators followed by Z-type generators (types name the CSS origin)."""
        return self.x_stabilizers + self.z_stabilizers

    @property
    def is_css(self) -> bool:
        return self.deformation is Deformation.CSS

    def coord(self, q: int) -> LatticeCoord:
        return LatticeCoord.from_index(q, self.d)

    def symplectic(self, paulis=None) -> np.ndarray:
        """Rows ``[x | z]`` of shape (len(paulis), 2n) over GF(2)."""
        if paulis is None:
            paulis = self.stabilizers
        n = self.num_qubits
        out = np.zeros((len(paulis), 2 * n), dtype=np.uint8)
        for r, ps in enumerate(paulis):
            for q, p in ps.support:
                if p != "Z":
                    out[r, q] = 1
                if p != "X":
                    out[r, n + q] = 1
        return out

    def parity_check_matrices(self) -> tuple[np.ndarray, np.ndarray]:
        """``(H_x, H_z)`` supports of the X-type and Z-type generators (CSS codes only)."""
        if not self.is_css:
            raise ValueError("parity-check split is only defined for the CSS code")
        n = self.num_qubits
        hx = np.zeros((len(self.x_stabilizers), n), dtype=np.uint8)
        hz = np.zeros((len(self.z_stabilizers), n), dtype=np.uint8)
        for r, s in enumerate(self.x_stabilizers):
            hx[r, list(s.qubits)] = 1
        for r, s in enumerate(self.z_stabilizers):
            hz[r, list(s.qubits)] = 1
        return hx, hz


def _x_cells(d: int, ell: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(d - 1) for j in range(d - 1) if (i - j) % ell == 0]


def build_elongated_compass(d: int, ell: int) -> StabilizerCode:
    """Build the CSS elongated compass code of distance ``d`` and elongation ``ell``."""
    if isinstance(d, bool) or not isinstance(d, (int, np.integer)):
        raise TypeError("d must be an integer")
    if d < 3 or d % 2 == 0:
        raise ValueError(f"distance must be an odd integer >= 3, got {d}")
    if ell < 2:
        raise ValueError(f"elongation must be >= 2, got {ell}")
    d, ell = int(d), int(ell)

    def q(i: int, j: int) -> int:
        return i * d + j

    x_cells = _x_cells(d, ell)
    x_cell_set = set(x_cells)

    # Z strips: in cell row r, qubit columns are cut after every X cell column.
    z_stabs = []
    cuts_by_row = {}
    for r in range(d - 1):
        cols = sorted(c for (i, c) in x_cells if i == r)
        cuts_by_row[r] = set(cols)
        edges = [-1] + cols + [d - 1]
        for a, b in zip(edges, edges[1:]):
            lo, hi = a + 1, b
            if lo > hi:
                continue
            qs = [q(r, j) for j in range(lo, hi + 1)] + [q(r + 1, j) for j in range(lo, hi + 1)]
            z_stabs.append(PauliString.uniform(qs, "Z"))

    x_stabs = []
    for i, j in x_cells:
        x_stabs.append(PauliString.uniform([q(i, j), q(i, j + 1), q(i + 1, j), q(i + 1, j + 1)], "X"))
    # Weight-2 X stabilizers from the remaining horizontal XX gauge operators.
    for i in range(d):
        for j in range(d - 1):
            if (i - 1, j) in x_cell_set or (i, j) in x_cell_set:
                continue
            crosses = any(r in cuts_by_row and j in cuts_by_row[r] for r in (i - 1, i))
            if crosses:
                continue
            x_stabs.append(PauliString.uniform([q(i, j), q(i, j + 1)], "X"))

    x_stabs.sort(key=lambda s: _anchor(s, d, column_major=True))
    z_stabs.sort(key=lambda s: _anchor(s, d, column_major=False))

    logical_x = PauliString.uniform([q(i, 0) for i in range(d)], "X")
    logical_z = PauliString.uniform([q(0, j) for j in range(d)], "Z")
    return StabilizerCode(
        d=d,
        ell=ell,
        deformation=Deformation.CSS,
        x_stabilizers=tuple(x_stabs),
        z_stabilizers=tuple(z_stabs),
        logical_x=logical_x,
        logical_z=logical_z,
        hadamard_mask=frozenset(),
    )


def _anchor(s: PauliString, d: int, column_major: bool) -> tuple[int, int]:
    rows = [q // d for q in s.qubits]
    cols = [q % d for q in s.qubits]
    if column_major:
        return (min(cols), min(rows))
    return (min(rows), min(cols))


def deformation_mask(code: StabilizerCode) -> frozenset[int]:
    """Top-left and bottom-right qubits of every weight-4 X stabilizer, plus the lattice corners on those diagonals.

    Every qubit with ``i - j = 0 (mod ell)`` is such a corner except
    ``(0, d-1)`` and ``(d-1, 0)``; taking the whole diagonal set makes the
    ``ell = 2`` code read ``ZXXZ`` on every plaquette.
    """
    d, ell = code.d, code.ell
    return frozenset(i * d + j for i in range(d) for j in range(d) if (i - j) % ell == 0)


def apply_deformation(code: StabilizerCode) -> StabilizerCode:
    """Return the ZXXZ-square deformed code (Hadamard on the mask qubits)."""
    if code.deformation is not Deformation.CSS:
        raise ValueError("code is already deformed")
    mask = deformation_mask(code)
    return replace(
        code,
        deformation=Deformation.ZXXZ_SQUARE,
        x_stabilizers=tuple(s.conjugate_hadamard(mask) for s in code.x_stabilizers),
        z_stabilizers=tuple(s.conjugate_hadamard(mask) for s in code.z_stabilizers),
        logical_x=code.logical_x.conjugate_hadamard(mask),
        logical_z=code.logical_z.conjugate_hadamard(mask),
        hadamard_mask=mask,
    )


def undeform(code: StabilizerCode) -> StabilizerCode:
    """Inverse of :func:`apply_deformation`; the mask is an involution."""
    if code.deformation is Deformation.CSS:
        return code
    mask = code.hadamard_mask
    return replace(
        code,
        deformation=Deformation.CSS,
        x_stabilizers=tuple(s.conjugate_hadamard(mask) for s in code.x_stabilizers),
        z_stabilizers=tuple(s.conjugate_hadamard(mask) for s in code.z_stabilizers),
        logical_x=code.logical_x.conjugate_hadamard(mask),
        logical_z=code.logical_z.conjugate_hadamard(mask),
        hadamard_mask=frozenset(),
    )


def make_code(d: int, ell: int, deformation: Deformation | str = Deformation.CSS) -> StabilizerCode:
    code = build_elongated_compass(d, ell)
    if Deformation(deformation) is Deformation.ZXXZ_SQUARE:
        code = apply_deformation(code)
    return code


def logical_operators(code: StabilizerCode) -> tuple[PauliString, PauliString]:
    """``(X_L, Z_L)``: a column of X on column 0 and a row of Z on row 0, conjugated by the mask."""
    return code.logical_x, code.logical_z


def gf2_rank(mat: np.ndarray) -> int:
    m = (np.asarray(mat, dtype=np.uint8) & 1).copy()
    rank = 0
    rows, cols = m.shape
    for c in range(cols):
        pivot = None
        for r in range(rank, rows):
            if m[r, c]:
                pivot = r
                break
        if pivot is None:
            continue
        if pivot != rank:
            m[[rank, pivot]] = m[[pivot, rank]]
        hits = np.nonzero(m[:, c])[0]
        hits = hits[hits != rank]
        if hits.size:
            m[hits] ^= m[rank]
        rank += 1
        if rank == rows:
            break
    return rank


def symplectic_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise symplectic inner products of rows of ``a`` and ``b`` over GF(2)."""
    n = a.shape[1] // 2
    a = a.astype(np.int64)
    b = b.astype(np.int64)
    return (a[:, :n] @ b[:, n:].T + a[:, n:] @ b[:, :n].T) % 2


def validate_code(code: StabilizerCode) -> None:
    """Raise ``AssertionError`` if the generators or logicals are inconsistent."""
    n = code.num_qubits
    stabs = code.symplectic()
    assert not symplectic_product(stabs, stabs).any(), "stabilizers do not commute"
    assert len(code.stabilizers) == n - 1, "generator count must be n - 1"
    assert gf2_rank(stabs) == n - 1, "generators are not independent"
    logs = code.symplectic([code.logical_x, code.logical_z])
    assert not symplectic_product(logs, stabs).any(), "logical fails to commute with stabilizers"
    assert symplectic_product(logs[:1], logs[1:])[0, 0] == 1, "logicals must anticommute"


def code_distance(code: StabilizerCode) -> int:
    """Exhaustive minimum weight of a nontrivial logical operator (d <= 5 only).

    Every Pauli commuting with all generators is either a stabilizer or a
    nontrivial logical; the latter are exactly those anticommuting with
    ``X_L`` or ``Z_L``.
    """
    if code.d > 5:
        raise ValueError("exhaustive distance search is limited to d <= 5")
    n = code.num_qubits
    sx = np.array([s.x_mask for s in code.stabilizers], dtype=np.int64)
    sz = np.array([s.z_mask for s in code.stabilizers], dtype=np.int64)
    lx = np.array([code.logical_x.x_mask, code.logical_z.x_mask], dtype=np.int64)
    lz = np.array([code.logical_x.z_mask, code.logical_z.z_mask], dtype=np.int64)
    # (x, z) bits of X, Y, Z.
    letter_bits = np.array([[1, 0], [1, 1], [0, 1]], dtype=np.int64)
    for w in range(1, n + 1):
        assign = np.array(list(itertools.product(range(3), repeat=w)), dtype=np.int64)
        ax = letter_bits[assign, 0]
        az = letter_bits[assign, 1]
        for chunk in _chunks(itertools.combinations(range(n), w), 4096):
            powers = np.left_shift(np.int64(1), np.array(chunk, dtype=np.int64))
            cx = (ax @ powers.T).ravel()
            cz = (az @ powers.T).ravel()
            anti = np.bitwise_count((cx[:, None] & sz[None, :]) ^ (cz[:, None] & sx[None, :])) & 1
            in_centralizer = ~anti.any(axis=1)
            if not in_centralizer.any():
                continue
            cx, cz = cx[in_centralizer], cz[in_centralizer]
            lanti = np.bitwise_count((cx[:, None] & lz[None, :]) ^ (cz[:, None] & lx[None, :])) & 1
            if lanti.any():
                return w
    raise AssertionError("no logical operator found")


def _chunks(iterable, size):
    it = iter(iterable)
    while True:
        block = list(itertools.islice(it, size))
        if not block:
            return
        yield block


def describe(code: StabilizerCode) -> dict:
    """JSON-ready description used by ``compassqec code describe``."""

    def pauli_json(ps: PauliString):
        return [[q, p] for q, p in ps.support]

    return {
        "d": code.d,
        "ell": code.ell,
        "deformation": code.deformation.value,
        "num_qubits": code.num_qubits,
        "x_stabilizers": [pauli_json(s) for s in code.x_stabilizers],
        "z_stabilizers": [pauli_json(s) for s in code.z_stabilizers],
        "logical_x": pauli_json(code.logical_x),
        "logical_z": pauli_json(code.logical_z),
        "hadamard_mask": sorted(code.hadamard_mask),
    }
