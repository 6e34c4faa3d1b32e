import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from compassqec.noise import (
    TWO_QUBIT_PAULIS,
    NoiseParams,
    PauliDistribution,
    biased_cz_channel,
    code_capacity_channel,
    conditional_x_given_z,
    conditional_z_given_x,
    hbd_channels,
    independent_equivalent,
    sample_pauli,
)

ps = st.floats(0.0, 0.5, allow_nan=False)
etas = st.one_of(st.floats(0.0, 1e4, allow_nan=False), st.just(math.inf))


def test_equal_noise_at_half_bias():
    dist = code_capacity_channel(NoiseParams(0.3, 0.5))
    for lab in "XYZ":
        assert dist.prob(lab) == pytest.approx(0.1, abs=1e-15)


def test_infinite_bias_is_pure_dephasing():
    dist = code_capacity_channel(NoiseParams(0.1, math.inf))
    assert (dist.prob("X"), dist.prob("Y"), dist.prob("Z")) == (0.0, 0.0, 0.1)


def test_closed_form_at_eta_five():
    dist = code_capacity_channel(NoiseParams(0.12, 5.0))
    assert dist.prob("X") == pytest.approx(0.01, abs=1e-15)
    assert dist.prob("Y") == pytest.approx(0.01, abs=1e-15)
    assert dist.prob("Z") == pytest.approx(0.10, abs=1e-15)
    assert math.fsum(dist.probs) == pytest.approx(0.12, abs=1e-15)


def test_cz_at_half_bias():
    p = 0.03
    cz = hbd_channels(NoiseParams(p, 0.5)).cz_channel
    for lab in TWO_QUBIT_PAULIS:
        want = p / 9 if lab in ("IZ", "ZI", "ZZ") else p / 18
        assert cz.prob(lab) == pytest.approx(want, rel=1e-12)
    assert cz.total == pytest.approx(p, rel=1e-12)


def test_cz_at_high_bias():
    cz = hbd_channels(NoiseParams(0.01, 100.0)).cz_channel
    a, b = cz.prob("IZ"), cz.prob("XX")
    assert a == pytest.approx(0.01 * 100 / 303, rel=1e-12)
    assert 3 * a + 12 * b == pytest.approx(0.01, rel=1e-12)


def test_noiseless_table():
    table = hbd_channels(NoiseParams(0.0, 3.0))
    for dist in (table.cz_channel, table.cnot_channel, table.h_channel, table.idle_channel):
        assert dist.total == 0.0
    assert table.meas_flip == 0.0


def test_depolarizing_parts():
    table = hbd_channels(NoiseParams(0.06, 7.0))
    assert table.cnot_channel.probs == pytest.approx((0.004,) * 15)
    assert len(table.cnot_channel.labels) == 15
    assert table.h_channel.probs == pytest.approx((0.02, 0.02, 0.02))
    assert table.idle_channel == code_capacity_channel(NoiseParams(0.06, 7.0))
    assert table.meas_flip == 0.06


@pytest.mark.parametrize("bad", [(-0.1, 1.0), (0.6, 1.0), (0.1, -1.0), (0.1, math.nan)])
def test_invalid_params(bad):
    with pytest.raises(ValueError):
        NoiseParams(*bad)


def test_distribution_validation():
    with pytest.raises(ValueError):
        PauliDistribution(("X",), (-0.1,))
    with pytest.raises(ValueError):
        PauliDistribution(("X", "Z"), (0.7, 0.7))
    with pytest.raises(ValueError):
        PauliDistribution(("X", "ZZ"), (0.1, 0.1))


@given(ps, etas)
def test_property_normalisation(p, eta):
    table = hbd_channels(NoiseParams(p, eta))
    for dist in (table.cz_channel, table.cnot_channel, table.h_channel, table.idle_channel):
        assert math.isclose(dist.total, p, rel_tol=1e-12, abs_tol=1e-15)
        assert math.isclose(dist.total + dist.prob("I" * dist.arity), 1.0, rel_tol=1e-12)
        assert all(x >= 0 for x in dist.probs)


@given(st.floats(1e-4, 0.5), st.floats(1e-3, 1e4))
def test_property_bias_identity(p, eta):
    params = NoiseParams(p, eta)
    idle = code_capacity_channel(params)
    assert math.isclose(idle.prob("Z") / (idle.prob("X") + idle.prob("Y")), eta, rel_tol=1e-12)
    cz = hbd_channels(params).cz_channel
    # Z-only mass over mass carrying an X component, summed over the channel
    z_only = sum(cz.prob(lab) for lab in TWO_QUBIT_PAULIS if set(lab) <= {"I", "Z"})
    rest = sum(cz.prob(lab) for lab in TWO_QUBIT_PAULIS if not set(lab) <= {"I", "Z"})
    assert math.isclose(z_only / rest, eta, rel_tol=1e-12)


@given(st.floats(0.0, 0.5), st.floats(0.0, 100.0), st.floats(0.0, 100.0))
def test_property_monotone_in_eta(p, e1, e2):
    lo, hi = sorted((e1, e2))
    a, b = code_capacity_channel(NoiseParams(p, lo)), code_capacity_channel(NoiseParams(p, hi))
    assert b.prob("Z") >= a.prob("Z") - 1e-15
    assert b.prob("X") <= a.prob("X") + 1e-15


@given(st.floats(0.0, 1e6))
def test_property_conditionals_match_channel(eta):
    dist = code_capacity_channel(NoiseParams(0.1, eta))
    py, pz = dist.prob("Y"), dist.prob("Z")
    assert math.isclose(conditional_x_given_z(eta), py / (py + pz), rel_tol=1e-12)
    assert conditional_z_given_x(eta) == 0.5


def test_sampling_noiseless_is_identity(rng):
    dist = code_capacity_channel(NoiseParams(0.0, 1.0))
    assert set(sample_pauli(dist, rng, size=1000)) == {"I"}
    assert sample_pauli(dist, rng) == "I"


def test_sampling_frequencies():
    dist = PauliDistribution(("X", "Y", "Z"), (0.1, 0.1, 0.1))
    draws = sample_pauli(dist, np.random.default_rng(5), size=1_000_000)
    for lab in "XYZ":
        freq = np.mean(draws == lab)
        assert abs(freq - 0.1) < 0.001


def test_sampling_is_reproducible():
    dist = hbd_channels(NoiseParams(0.2, 3.0)).cz_channel
    a = sample_pauli(dist, np.random.default_rng(11), size=500)
    b = sample_pauli(dist, np.random.default_rng(11), size=500)
    assert (a == b).all()


_MUL = {("I", b): b for b in "IXYZ"} | {(a, "I"): a for a in "XYZ"} | {(a, a): "I" for a in "XYZ"}
_MUL |= {("X", "Y"): "Z", ("Y", "X"): "Z", ("Y", "Z"): "X", ("Z", "Y"): "X", ("X", "Z"): "Y", ("Z", "X"): "Y"}


def _compose(indep: PauliDistribution) -> dict[str, float]:
    """Joint outcome distribution of independent mechanisms, up to phase."""
    n = indep.arity
    joint = {"I" * n: 1.0}
    for lab, q in zip(indep.labels, indep.probs):
        nxt: dict[str, float] = {}
        for cur, w in joint.items():
            nxt[cur] = nxt.get(cur, 0.0) + w * (1 - q)
            prod = "".join(_MUL[a, b] for a, b in zip(cur, lab))
            nxt[prod] = nxt.get(prod, 0.0) + w * q
        joint = nxt
    return joint


def test_independent_form_of_single_qubit_depolarizing():
    q = independent_equivalent(PauliDistribution(("X", "Y", "Z"), (0.01, 0.01, 0.01)))
    assert q.probs == pytest.approx([(1 - math.sqrt(1 - 0.04)) / 2] * 3, rel=1e-12)


def test_independent_form_of_two_qubit_depolarizing():
    dist = PauliDistribution(TWO_QUBIT_PAULIS, (0.02 / 15,) * 15)
    q = independent_equivalent(dist)
    assert q.probs == pytest.approx([(1 - (1 - 16 * 0.02 / 15) ** (1 / 8)) / 2] * 15, rel=1e-10)


@given(st.floats(0.0, 0.2), st.one_of(st.floats(0.5, 1e4), st.just(math.inf)))
def test_property_independent_form_reproduces_channel(p, eta):
    params = NoiseParams(p, eta)
    for dist in (code_capacity_channel(params), biased_cz_channel(params)):
        indep = independent_equivalent(dist)
        assert indep is not None
        joint = _compose(indep)
        for lab in set(joint) | set(dist.labels):
            if set(lab) != {"I"}:
                assert joint.get(lab, 0.0) == pytest.approx(dist.prob(lab), abs=1e-12)


@given(st.floats(0.0, 0.3), st.floats(0.0, 0.3))
def test_property_single_qubit_z_marginal_is_preserved(px, pz):
    dist = PauliDistribution(("X", "Y", "Z"), (px, 0.1, pz)).nonzero()
    indep = independent_equivalent(dist)
    assume(indep is not None)
    qy, qz = indep.prob("Y"), indep.prob("Z")
    assert qy + qz - 2 * qy * qz == pytest.approx(0.1 + pz, abs=1e-12)


def test_channel_without_independent_form():
    assert independent_equivalent(PauliDistribution(("X",), (0.6,))) is None
    # X and Y alone, no Z: the implied Z rate would be negative
    assert independent_equivalent(code_capacity_channel(NoiseParams(0.2, 0.0))) is None
