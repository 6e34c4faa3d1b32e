"""Pauli channels for code-capacity and hybrid biased-depolarizing (HBD) noise."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

SINGLE_PAULIS = ("X", "Y", "Z")
TWO_QUBIT_PAULIS = tuple(
    a + b for a, b in itertools.product("IXYZ", repeat=2) if a + b != "II"
)


@dataclass(frozen=True)
class NoiseParams:
    p: float
    eta: float

    def __post_init__(self):
        if not (0.0 <= self.p <= 0.5):
            raise ValueError(f"p must lie in [0, 0.5], got {self.p}")
        if math.isnan(self.eta) or self.eta < 0:
            raise ValueError(f"eta must be >= 0 (or inf), got {self.eta}")


@dataclass(frozen=True)
class PauliDistribution:
    """Mutually exclusive non-identity Pauli outcomes; identity takes the rest.

    Labels are strings over ``IXYZ``, one character per qubit the channel acts on.
    """

    labels: tuple[str, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        if len(self.labels) != len(self.probs):
            raise ValueError("labels and probs differ in length")
        if any(p < 0 for p in self.probs):
            raise ValueError("negative probability")
        if self.total > 1 + 1e-12:
            raise ValueError("probabilities exceed 1")
        widths = {len(lab) for lab in self.labels}
        if len(widths) > 1:
            raise ValueError("mixed channel arity")

    @property
    def total(self) -> float:
        return math.fsum(self.probs)

    @property
    def arity(self) -> int:
        return len(self.labels[0]) if self.labels else 1

    def prob(self, label: str) -> float:
        if label == "I" * self.arity:
            return 1.0 - self.total
        try:
            return self.probs[self.labels.index(label)]
        except ValueError:
            return 0.0

    def nonzero(self) -> "PauliDistribution":
        keep = [(lab, p) for lab, p in zip(self.labels, self.probs) if p > 0]
        return PauliDistribution(tuple(lab for lab, _ in keep), tuple(p for _, p in keep))


@dataclass(frozen=True)
class ChannelTable:
    cz_channel: PauliDistribution
    cnot_channel: PauliDistribution
    h_channel: PauliDistribution
    idle_channel: PauliDistribution
    meas_flip: float


def code_capacity_channel(params: NoiseParams) -> PauliDistribution:
    """Asymmetric single-qubit channel with ``p_x = p_y`` and ``eta = p_z / (p_x + p_y)``."""
    p, eta = params.p, params.eta
    if math.isinf(eta):
        px = 0.0
        pz = p
    else:
        px = p / (2.0 * (1.0 + eta))
        pz = eta * p / (1.0 + eta)
    return PauliDistribution(("X", "Y", "Z"), (px, px, pz))


def depolarizing1(p: float) -> PauliDistribution:
    return PauliDistribution(SINGLE_PAULIS, (p / 3.0,) * 3)


def depolarizing2(p: float) -> PauliDistribution:
    return PauliDistribution(TWO_QUBIT_PAULIS, (p / 15.0,) * 15)


def biased_cz_channel(params: NoiseParams) -> PauliDistribution:
    """Two-qubit channel after CZ: IZ, ZI, ZZ share the dephasing mass, the rest is uniform."""
    p, eta = params.p, params.eta
    dephasing = ("IZ", "ZI", "ZZ")
    if math.isinf(eta):
        a, b = p / 3.0, 0.0
    else:
        a = eta * p / (3.0 * (1.0 + eta))
        b = p / (12.0 * (1.0 + eta))
    return PauliDistribution(TWO_QUBIT_PAULIS, tuple(a if lab in dephasing else b for lab in TWO_QUBIT_PAULIS))


def hbd_channels(params: NoiseParams) -> ChannelTable:
    return ChannelTable(
        cz_channel=biased_cz_channel(params),
        cnot_channel=depolarizing2(params.p),
        h_channel=depolarizing1(params.p),
        idle_channel=code_capacity_channel(params),
        meas_flip=params.p,
    )


def sample_pauli(dist: PauliDistribution, rng: np.random.Generator, size: int | None = None):
    """Draw labels i.i.d. from ``dist``; the identity is returned as ``'I' * arity``."""
    ident = "I" * dist.arity
    labels = np.array((ident,) + dist.labels, dtype=object)
    probs = np.array((max(0.0, 1.0 - dist.total),) + dist.probs, dtype=float)
    probs /= probs.sum()
    if size is None:
        return labels[rng.choice(len(labels), p=probs)]
    return labels[rng.choice(len(labels), size=size, p=probs)]


def _anticommute(a: str, b: str) -> bool:
    return sum(x != "I" and y != "I" and x != y for x, y in zip(a, b)) % 2 == 1


def independent_equivalent(dist: PauliDistribution) -> PauliDistribution | None:
    """Rates of independent Pauli mechanisms whose product is exactly ``dist``.

    A Pauli channel is fixed by its fidelities ``f_b = sum_a P(a) (-1)^<a,b>``,
    and independent mechanisms with rates ``q_a`` give
    ``log f_b = sum_{a anticommuting with b} log(1 - 2 q_a)``; that linear
    system is solved over the ``4^n - 1`` non-identity Paulis.  Returns None
    when the channel has no such form (a fidelity <= 0 or a negative rate).
    """
    n = dist.arity
    labels = ["".join(t) for t in itertools.product("IXYZ", repeat=n)]
    probs = np.array([dist.prob(lab) for lab in labels])
    anti = np.array([[_anticommute(a, b) for a in labels] for b in labels], dtype=float)
    fid = np.where(anti > 0, -1.0, 1.0) @ probs
    if np.any(fid[1:] <= 0):
        return None
    logs = np.linalg.solve(anti[1:, 1:], np.log(fid[1:]))
    rates = -np.expm1(logs) / 2
    if np.any(rates < -1e-15):
        return None
    rates = np.clip(rates, 0.0, None)
    return PauliDistribution(tuple(labels[1:]), tuple(float(r) for r in rates)).nonzero()


def conditional_x_given_z(eta: float) -> float:
    """P(X component | Z component) for the code-capacity channel: ``1 / (1 + 2 eta)``."""
    return 1.0 / (1.0 + 2.0 * eta)


def conditional_z_given_x(eta: float) -> float:
    """P(Z component | X component); ``p_x = p_y`` pins this at one half."""
    return 0.5
