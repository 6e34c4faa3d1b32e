import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from compassqec.stats import (
    NoCrossing,
    RatePoint,
    ThresholdFit,
    count_failures,
    decoder_gain,
    empirical_crossing,
    estimate_rate,
    fit_threshold,
    select_window,
    wilson_interval,
)

Z = 1.959963984540054


def _wilson_by_roots(f, n):
    """Both roots of (phat - p)^2 = z^2 p (1 - p) / n."""
    phat = f / n
    k = Z * Z / n
    roots = np.roots([1 + k, -(2 * phat + k), phat * phat])
    lo, hi = sorted(float(r.real) for r in roots)
    return max(0.0, lo), min(1.0, hi)


def _model_points(p_th, nu, coeffs, ds, ps, shots=None, rng=None):
    a, b, c = coeffs
    pts = []
    for d in ds:
        for p in ps:
            x = (p - p_th) * d ** (1 / nu)
            rate = a + b * x + c * x * x
            if shots is None:
                n, f = 10**9, int(round(rate * 10**9))
            else:
                n, f = shots, int(rng.binomial(shots, rate))
            pts.append(RatePoint(d, 3, "css", 1.0, float(p), "mwpm", n, f))
    return pts


def test_wilson_zero_failures():
    lo, hi = wilson_interval(0, 100)
    assert lo == 0.0
    assert hi == pytest.approx(Z * Z / (100 + Z * Z), rel=1e-12)
    assert hi == pytest.approx(0.037, abs=5e-4)


def test_wilson_all_failures():
    lo, hi = wilson_interval(100, 100)
    assert hi == 1.0 and lo == pytest.approx(1 - 0.037, abs=5e-4)


@given(st.integers(1, 10_000), st.data())
def test_property_wilson_agrees_with_quadratic_roots(n, data):
    f = data.draw(st.integers(0, n))
    lo, hi = wilson_interval(f, n)
    want = _wilson_by_roots(f, n)
    assert lo == pytest.approx(want[0], abs=1e-10)
    assert hi == pytest.approx(want[1], abs=1e-10)
    assert lo <= f / n <= hi


def test_bernoulli_rate_estimate(rng):
    truth = rng.random(100_000) < 0.1
    point = estimate_rate(np.zeros(100_000, dtype=bool), truth, d=5, p=0.01)
    assert abs(point.rate - 0.1) < 0.003
    assert point.ci_low < 0.1 < point.ci_high


def test_failures_count_any_observable():
    pred = np.array([[0, 0], [1, 0], [1, 1]], dtype=bool)
    act = np.array([[0, 1], [1, 0], [0, 0]], dtype=bool)
    assert count_failures(pred, act) == 2


def test_rate_point_validation():
    with pytest.raises(ValueError):
        RatePoint(3, 2, "css", 1.0, 0.1, "mwpm", 0, 0)
    with pytest.raises(ValueError):
        RatePoint(3, 2, "css", 1.0, 0.1, "mwpm", 10, 11)


def test_no_crossing_when_curves_never_meet():
    pts = [RatePoint(d, 2, "css", 1.0, p, "mwpm", 1000, 100 + (d == 7)) for d in (5, 7) for p in (0.1, 0.2, 0.3)]
    with pytest.raises(NoCrossing):
        empirical_crossing(pts)
    with pytest.raises(NoCrossing):
        fit_threshold(pts, bootstrap=0)


def test_all_equal_rates_have_no_crossing():
    pts = [RatePoint(d, 2, "css", 1.0, p, "mwpm", 1000, 100) for d in (5, 7) for p in (0.1, 0.2)]
    with pytest.raises(NoCrossing):
        empirical_crossing(pts)


def test_crossing_interpolates_linearly():
    rates = {5: [0.10, 0.20], 7: [0.05, 0.25]}
    pts = [RatePoint(d, 2, "css", 1.0, p, "mwpm", 10**6, int(r * 10**6)) for d in rates for p, r in zip((0.1, 0.2), rates[d])]
    pc, lc = empirical_crossing(pts)
    # diff goes -0.05 -> +0.05, so t = 1/2
    assert pc == pytest.approx(0.15)
    assert lc == pytest.approx(0.15)


def test_noiseless_model_recovery():
    ps = np.linspace(0.08, 0.12, 9)
    pts = _model_points(0.1, 1.3, (0.2, 1.1, 0.5), (5, 7, 9), ps)
    fit = fit_threshold(pts, bootstrap=0, window=None)
    assert fit.p_th == pytest.approx(0.1, abs=1e-5)
    assert fit.nu == pytest.approx(1.3, abs=1e-3)
    assert fit.coeffs == pytest.approx((0.2, 1.1, 0.5), abs=1e-3)


def test_fit_is_invariant_to_point_order(rng):
    pts = _model_points(0.09, 1.0, (0.15, 0.5, 0.0), (5, 7, 9), np.linspace(0.07, 0.11, 7), shots=20_000, rng=rng)
    a = fit_threshold(pts, bootstrap=10, seed=3)
    shuffled = [pts[i] for i in rng.permutation(len(pts))]
    b = fit_threshold(shuffled, bootstrap=10, seed=3)
    assert a == b


def test_bootstrap_spread_is_reported(rng):
    pts = _model_points(0.1, 1.2, (0.2, 1.0, 0.0), (5, 7, 9), np.linspace(0.085, 0.115, 7), shots=20_000, rng=rng)
    fit = fit_threshold(pts, bootstrap=40, seed=1)
    assert 0 < fit.p_th_std < 0.01
    assert fit.p_th_ci[0] <= fit.p_th <= fit.p_th_ci[1] or abs(fit.p_th - 0.1) < 3 * fit.p_th_std
    assert abs(fit.p_th - 0.1) < 4 * fit.p_th_std + 1e-4


def test_window_keeps_points_near_the_crossing():
    pts = [RatePoint(d, 2, "css", 1.0, p, "mwpm", 1000, f) for d in (5, 7) for p, f in ((0.1, 50), (0.2, 100), (0.3, 130), (0.4, 300))]
    kept = select_window(pts, 0.2, 100 / 1000, min_points=4)
    assert {pt.failures for pt in kept} == {100, 130}
    assert len(kept) == 4


def test_window_falls_back_to_every_point():
    pts = [RatePoint(d, 2, "css", 1.0, p, "mwpm", 1000, f) for d in (5, 7) for p, f in ((0.1, 10), (0.2, 100), (0.3, 500))]
    assert select_window(pts, 0.2, 0.1) == pts


def _fit(p_th, std=0.001):
    return ThresholdFit(p_th, 1.0, (0.0, 0.0, 0.0), 0.0, p_th_std=std)


def test_gain_of_known_thresholds():
    g = decoder_gain(_fit(0.027), _fit(0.020))
    assert g.delta == pytest.approx(0.007)
    assert g.relative == pytest.approx(0.35)
    assert g.delta_err == pytest.approx(0.002)


def test_equal_thresholds_give_zero_gain():
    g = decoder_gain(_fit(0.05), _fit(0.05))
    assert g.delta == 0.0 and g.relative == 0.0
    assert g.relative_err == pytest.approx(0.002 / 0.05)


@given(st.floats(0.001, 0.4), st.floats(0.001, 0.4))
def test_property_gain_antisymmetry(a, b):
    ab, ba = decoder_gain(_fit(a), _fit(b)), decoder_gain(_fit(b), _fit(a))
    assert ab.delta == -ba.delta
    assert math.copysign(1, ab.relative) == -math.copysign(1, ba.relative) or ab.delta == 0
