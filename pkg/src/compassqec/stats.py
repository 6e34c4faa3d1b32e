"""Logical error rates, threshold fits and decoder gains."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize

Z95 = 1.959963984540054


@dataclass(frozen=True)
class RatePoint:
    d: int
    ell: int
    deformation: str
    eta: float
    p: float
    decoder: str
    shots: int
    failures: int
    rate: float = field(init=False)
    ci_low: float = field(init=False)
    ci_high: float = field(init=False)

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("a rate needs at least one shot")
        if not 0 <= self.failures <= self.shots:
            raise ValueError("failures must lie in [0, shots]")
        lo, hi = wilson_interval(self.failures, self.shots)
        object.__setattr__(self, "rate", self.failures / self.shots)
        object.__setattr__(self, "ci_low", lo)
        object.__setattr__(self, "ci_high", hi)

    def as_row(self) -> dict:
        return asdict(self)


def wilson_interval(failures: int, shots: int, z: float = Z95) -> tuple[float, float]:
    n = shots
    phat = failures / n
    denom = 1.0 + z * z / n
    centre = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if failures == 0 else max(0.0, centre - half)
    hi = 1.0 if failures == n else min(1.0, centre + half)
    return lo, hi


def count_failures(predicted: np.ndarray, actual: np.ndarray) -> int:
    """Shots where any predicted observable flip disagrees with the true one."""
    pred = np.asarray(predicted, dtype=bool).reshape(len(predicted), -1)
    act = np.asarray(actual, dtype=bool).reshape(len(actual), -1)
    return int(np.any(pred != act, axis=1).sum())


def estimate_rate(predicted, actual, *, d=0, ell=0, deformation="css", eta=0.0, p=0.0, decoder="mwpm") -> RatePoint:
    shots = len(predicted)
    return RatePoint(d, ell, str(deformation), float(eta), float(p), decoder, shots, count_failures(predicted, actual))


class NoCrossing(ValueError):
    pass


@dataclass(frozen=True)
class ThresholdFit:
    p_th: float
    nu: float
    coeffs: tuple[float, float, float]
    residual: float
    p_th_std: float = float("nan")
    nu_std: float = float("nan")
    p_th_ci: tuple[float, float] = (float("nan"), float("nan"))
    nu_ci: tuple[float, float] = (float("nan"), float("nan"))
    n_points: int = 0
    p_cross: float = float("nan")

    def to_dict(self) -> dict:
        return asdict(self)


def _by_distance(points):
    out: dict[int, dict[float, float]] = {}
    for pt in points:
        out.setdefault(pt.d, {})[pt.p] = pt.rate
    return out


def empirical_crossing(points) -> tuple[float, float]:
    """Where the two largest distances' curves cross: ``(p, rate)`` by linear interpolation."""
    curves = _by_distance(points)
    if len(curves) < 2:
        raise NoCrossing("need at least two distances")
    d_small, d_big = sorted(curves)[-2:]
    ps = sorted(set(curves[d_small]) & set(curves[d_big]))
    if len(ps) < 2:
        raise NoCrossing("the two largest distances share fewer than two p values")
    a = np.array([curves[d_small][p] for p in ps])
    b = np.array([curves[d_big][p] for p in ps])
    diff = b - a
    candidates = []
    for i in range(len(ps) - 1):
        lo, hi = diff[i], diff[i + 1]
        if lo == 0 and hi == 0:
            continue
        if lo <= 0 <= hi or hi <= 0 <= lo:
            t = lo / (lo - hi) if lo != hi else 0.0
            pc = ps[i] + t * (ps[i + 1] - ps[i])
            lc = a[i] + t * (a[i + 1] - a[i])
            # below threshold the larger code wins, so rising sign changes are preferred
            candidates.append((0 if lo <= 0 <= hi else 1, i, pc, lc))
    if not candidates:
        raise NoCrossing("curves do not intersect in the scanned window")
    _, _, pc, lc = min(candidates)
    return float(pc), float(lc)


def _design(x: np.ndarray) -> np.ndarray:
    return np.stack([np.ones_like(x), x, x * x], axis=1)


def _profile(theta, p, d, y):
    p_th, nu = theta
    if not (0.0 < p_th < 0.5) or nu <= 0.05 or nu > 20:
        return 1e6, None
    x = (p - p_th) * d ** (1.0 / nu)
    coef, *_ = np.linalg.lstsq(_design(x), y, rcond=None)
    r = y - _design(x) @ coef
    return float(r @ r), coef


def _full(params, p, d, y):
    a, b, c, p_th, nu = params
    if not (0.0 < p_th < 0.5) or nu <= 0.05 or nu > 20:
        return 1e6
    x = (p - p_th) * d ** (1.0 / nu)
    r = y - (a + b * x + c * x * x)
    return float(r @ r)


def _fit_arrays(p, d, y, start):
    prof = minimize(
        lambda th: _profile(th, p, d, y)[0],
        np.array(start, dtype=float),
        method="Nelder-Mead",
        options={"xatol": 1e-8, "fatol": 1e-14, "maxiter": 4000},
    )
    p_th, nu = prof.x
    _, coef = _profile(prof.x, p, d, y)
    if coef is None:
        coef = np.zeros(3)
    full = minimize(
        _full,
        np.array([*coef, p_th, nu]),
        args=(p, d, y),
        method="Nelder-Mead",
        options={"xatol": 1e-9, "fatol": 1e-15, "maxiter": 8000},
    )
    if full.fun <= prof.fun:
        a, b, c, p_th, nu = full.x
        return (float(a), float(b), float(c)), float(p_th), float(nu), float(full.fun)
    return tuple(float(v) for v in coef), float(p_th), float(nu), float(prof.fun)


def select_window(points, p_cross: float, l_cross: float, width: float = 0.3, min_points: int = 6):
    """Points with ``|L - L_cross| <= width * L_cross``; all points if too few survive."""
    keep = [pt for pt in points if abs(pt.rate - l_cross) <= width * l_cross]
    if len(keep) < min_points or len({pt.d for pt in keep}) < 2:
        return list(points)
    return keep


def fit_threshold(
    points,
    bootstrap: int = 200,
    seed: int = 0,
    window: float | None = 0.3,
) -> ThresholdFit:
    """Least-squares fit of ``L = A + B x + C x^2`` with ``x = (p - p_th) d^(1/nu)``.

    The search starts at the crossing of the two largest distances with
    ``nu = 1``; ``(p_th, nu)`` are found with the linear coefficients profiled
    out, then all five are polished together.  Bootstrap resamples redraw each
    point's failures from a binomial at the observed rate.
    """
    pts = sorted(points, key=lambda pt: (pt.d, pt.p))
    if len({pt.d for pt in pts}) < 2:
        raise NoCrossing("need at least two distances")
    p_cross, l_cross = empirical_crossing(pts)
    if window is not None:
        pts = select_window(pts, p_cross, l_cross, window)
    p = np.array([pt.p for pt in pts])
    d = np.array([pt.d for pt in pts], dtype=float)
    y = np.array([pt.rate for pt in pts])
    coef, p_th, nu, res = _fit_arrays(p, d, y, (p_cross, 1.0))

    p_std = nu_std = float("nan")
    p_ci = nu_ci = (float("nan"), float("nan"))
    if bootstrap > 0:
        rng = np.random.default_rng(seed)
        shots = np.array([pt.shots for pt in pts])
        samples = []
        for _ in range(bootstrap):
            yb = rng.binomial(shots, y) / shots
            _, pb, nb, _ = _fit_arrays(p, d, yb, (p_th, nu))
            samples.append((pb, nb))
        s = np.array(samples)
        p_std, nu_std = (float(v) for v in s.std(axis=0, ddof=1))
        p_ci = tuple(float(v) for v in np.percentile(s[:, 0], [2.5, 97.5]))
        nu_ci = tuple(float(v) for v in np.percentile(s[:, 1], [2.5, 97.5]))
    return ThresholdFit(p_th, nu, coef, res, p_std, nu_std, p_ci, nu_ci, len(pts), p_cross)


@dataclass(frozen=True)
class GainRecord:
    delta: float
    relative: float
    delta_err: float
    relative_err: float


def decoder_gain(fit_corr: ThresholdFit, fit_mwpm: ThresholdFit) -> GainRecord:
    """``Delta = p_corr - p_mwpm`` and ``Delta / p_mwpm``; errors add the two fits' spreads."""
    delta = fit_corr.p_th - fit_mwpm.p_th
    err = _finite(fit_corr.p_th_std) + _finite(fit_mwpm.p_th_std)
    if fit_mwpm.p_th > 0:
        rel = delta / fit_mwpm.p_th
        rel_err = abs(rel) * math.hypot(
            err / abs(delta) if delta else 0.0, _finite(fit_mwpm.p_th_std) / fit_mwpm.p_th
        ) if delta else err / fit_mwpm.p_th
    else:
        rel = rel_err = float("nan")
    return GainRecord(delta, rel, err, rel_err)


def _finite(x: float) -> float:
    return x if math.isfinite(x) else 0.0
