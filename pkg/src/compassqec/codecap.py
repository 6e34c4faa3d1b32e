"""Code-capacity noise: independent single-qubit Paulis on data, perfect syndromes.

Detector ``s`` is stabilizer ``s`` of the code (X-type first).  Observable 0
is the ``Z_L`` outcome (flipped by errors anticommuting with ``Z_L``) and
observable 1 the ``X_L`` outcome.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codes import PauliString, StabilizerCode
from .dem import DetectorErrorModel, ErrorMechanism, xor_merge
from .noise import NoiseParams, code_capacity_channel, independent_equivalent

Z_LOGICAL = 0
X_LOGICAL = 1


def _anticommuting(code: StabilizerCode, q: int, pauli: str) -> tuple[tuple[int, ...], tuple[int, ...]]:
    err = PauliString(((q, pauli),))
    dets = tuple(s for s, stab in enumerate(code.stabilizers) if not stab.commutes_with(err))
    obs = []
    if not code.logical_z.commutes_with(err):
        obs.append(Z_LOGICAL)
    if not code.logical_x.commutes_with(err):
        obs.append(X_LOGICAL)
    return dets, tuple(obs)


def code_capacity_dem(code: StabilizerCode, params: NoiseParams) -> DetectorErrorModel:
    exclusive = code_capacity_channel(params)
    dist = independent_equivalent(exclusive) or exclusive
    merged: dict[tuple, float] = {}
    for q in range(code.num_qubits):
        for pauli, p in zip(dist.labels, dist.probs):
            if p <= 0:
                continue
            key = _anticommuting(code, q, pauli)
            if not key[0] and not key[1]:
                continue
            merged[key] = xor_merge(merged.get(key, 0.0), p)
    mechs = [ErrorMechanism(p, dets, obs) for (dets, obs), p in sorted(merged.items())]
    classes = "X" * len(code.x_stabilizers) + "Z" * len(code.z_stabilizers)
    return DetectorErrorModel(mechs, len(code.stabilizers), 2, classes)


@dataclass
class CodeCapacityBatch:
    x_errors: np.ndarray
    z_errors: np.ndarray
    syndromes: np.ndarray
    flips: np.ndarray
    seed: int

    @property
    def shots(self) -> int:
        return self.syndromes.shape[0]


def _anticommute_matrix(paulis, n: int) -> tuple[np.ndarray, np.ndarray]:
    """(X part, Z part) support matrices of the given Pauli strings."""
    xs = np.zeros((len(paulis), n), dtype=np.uint8)
    zs = np.zeros((len(paulis), n), dtype=np.uint8)
    for r, ps in enumerate(paulis):
        for q, p in ps.support:
            if p != "Z":
                xs[r, q] = 1
            if p != "X":
                zs[r, q] = 1
    return xs, zs


def syndromes_of(code: StabilizerCode, x_errors: np.ndarray, z_errors: np.ndarray):
    """Stabilizer syndromes and (Z_L, X_L) flips of the given error patterns."""
    n = code.num_qubits
    sx, sz = _anticommute_matrix(code.stabilizers, n)
    lx, lz = _anticommute_matrix((code.logical_z, code.logical_x), n)
    ex = np.asarray(x_errors, dtype=np.int32)
    ez = np.asarray(z_errors, dtype=np.int32)
    syn = ((ex @ sz.T.astype(np.int32)) + (ez @ sx.T.astype(np.int32))) & 1
    flips = ((ex @ lz.T.astype(np.int32)) + (ez @ lx.T.astype(np.int32))) & 1
    return syn.astype(bool), flips.astype(bool)


def sample_code_capacity(code: StabilizerCode, params: NoiseParams, shots: int, seed: int) -> CodeCapacityBatch:
    dist = code_capacity_channel(params)
    px, py, pz = (dist.prob(lab) for lab in ("X", "Y", "Z"))
    rng = np.random.default_rng(seed)
    u = rng.random((shots, code.num_qubits))
    is_x = u < px
    is_y = (u >= px) & (u < px + py)
    is_z = (u >= px + py) & (u < px + py + pz)
    x_err = is_x | is_y
    z_err = is_z | is_y
    syn, flips = syndromes_of(code, x_err, z_err)
    return CodeCapacityBatch(x_err, z_err, syn, flips, seed)
