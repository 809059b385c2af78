"""Detector-decoy estimation of photon-number statistics.

A threshold detector behind a variable attenuator reports only whether it
clicked. The no-click probability ``p_vac(eta) = sum_n (1 - eta)^n p_n`` is a
power series in the survival factor ``c = 1 - eta`` whose coefficients are
the photon-number probabilities, so sampling it at a handful of settings
bounds the low-order ``p_n`` without any assumption on the incoming state.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .fock import JointPhotonDist, PhotonDist

CONSISTENCY_SLACK = 1e-9
ILL_CONDITIONED = 1e10
# absolute rounding budget per no-click sample in the joint bounds
SAMPLE_ERROR = 1e-14


class EstimationError(ValueError):
    """Raised when decoy samples cannot be turned into bounds."""


class IllConditionedWarning(UserWarning):
    pass


@dataclass(frozen=True)
class DecoySetting:
    eta: float

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"transmittance must lie in [0, 1], got {self.eta!r}")

    @property
    def c(self) -> float:
        return 1.0 - self.eta

    @classmethod
    def from_c(cls, c: float) -> "DecoySetting":
        return cls(1.0 - c)


@dataclass(frozen=True)
class DetectorModel:
    eta_det: float = 1.0
    epsilon: float = 0.0

    def __post_init__(self):
        for name in ("eta_det", "epsilon"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


@dataclass(frozen=True)
class Prop1Bounds:
    """Bounds on the first three coefficients of ``f(c) = sum_n c^n x_n``.

    ``x1_lo`` .. ``x2_hi`` are clamped to ``[0, C]``; the ``raw_*`` fields
    keep the unclamped values so convergence can be studied directly.
    """

    x0: float
    x1_lo: float
    x1_hi: float
    x2_lo: float
    x2_hi: float
    c1: float
    c2: float
    C: float = 1.0
    raw_x1_lo: float = math.nan
    raw_x1_hi: float = math.nan
    raw_x2_lo: float = math.nan
    raw_x2_hi: float = math.nan

    @property
    def x1_width(self) -> float:
        return self.x1_hi - self.x1_lo

    @property
    def x2_width(self) -> float:
        return self.x2_hi - self.x2_lo

    def contains(self, x1: float, x2: float, slack: float = 1e-10) -> bool:
        return (self.x1_lo - slack <= x1 <= self.x1_hi + slack
                and self.x2_lo - slack <= x2 <= self.x2_hi + slack)


def pvac_ideal(dist: PhotonDist, eta: float) -> float:
    """No-click probability of an ideal threshold detector behind transmittance ``eta``."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"transmittance must lie in [0, 1], got {eta!r}")
    n = np.arange(dist.n_max + 1)
    return float((1.0 - eta) ** n @ dist.probs)


def pvac_noisy(dist: PhotonDist, eta: float, det: DetectorModel) -> float:
    """No-click probability with finite detection efficiency and dark counts."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"transmittance must lie in [0, 1], got {eta!r}")
    n = np.arange(dist.n_max + 1)
    return float((1.0 - det.epsilon) * ((1.0 - eta * det.eta_det) ** n @ dist.probs))


def prop1_bounds(f0: float, f_c1: float, f_c2: float, c1: float, c2: float,
                 C: float = 1.0) -> Prop1Bounds:
    """Worst-case bounds on ``x0, x1, x2`` from three samples of ``f``.

    ``f(c) = sum_n c^n x_n`` with ``x_n >= 0`` and ``sum_n x_n <= C``,
    sampled at ``c = 0, c1, c2``. The upper bound on ``x1`` drops all
    higher terms; the lower bound puts the whole remaining mass at ``n = 2``.
    The ``x2`` bounds reuse the ``x1`` interval in the same way at ``c2``.
    Choosing ``c1 = delta`` and ``c2 = sqrt(delta)`` makes both intervals
    collapse onto the true values as ``delta -> 0``.

    Examples
    --------
    >>> b = prop1_bounds(0.5, 0.532, 0.608, 0.1, 0.3)
    >>> round(b.x1_lo, 6), round(b.x1_hi, 6)
    (0.3, 0.32)
    """
    for c in (c1, c2):
        if not 0.0 < c < 1.0:
            raise EstimationError(f"settings must lie strictly inside (0, 1), got {c!r}")
    if C <= 0:
        raise EstimationError("mass bound C must be positive")

    u1 = (f_c1 - f0) / c1
    l1 = (f_c1 - f0 * (1 - c1**2) - c1**2 * C) / (c1 - c1**2)
    u2 = (f_c2 - f0 - c2 * l1) / c2**2
    l2 = (f_c2 - f0 * (1 - c2**3) - u1 * (c2 - c2**3) - c2**3 * C) / (c2**2 - c2**3)

    def clamp(v):
        return min(max(v, 0.0), C)

    return Prop1Bounds(
        x0=clamp(f0), x1_lo=clamp(l1), x1_hi=clamp(u1), x2_lo=clamp(l2), x2_hi=clamp(u2),
        c1=c1, c2=c2, C=C, raw_x1_lo=l1, raw_x1_hi=u1, raw_x2_lo=l2, raw_x2_hi=u2,
    )


def convergence_sweep(dist: PhotonDist, deltas, C: float = 1.0) -> list[Prop1Bounds]:
    """Evaluate the three-setting bounds at ``c1 = delta, c2 = sqrt(delta)`` for each delta."""
    out = []
    f0 = pvac_ideal(dist, 1.0)
    for delta in deltas:
        if not 0.0 < delta < 1.0:
            raise EstimationError(f"delta must lie in (0, 1), got {delta!r}")
        c1, c2 = delta, math.sqrt(delta)
        out.append(prop1_bounds(f0, pvac_ideal(dist, 1 - c1), pvac_ideal(dist, 1 - c2),
                                c1, c2, C))
    return out


def pvac_joint(joint: JointPhotonDist, eta_a: float, eta_b: float,
               epsilon: float = 0.0) -> float:
    """Joint no-click probability of both active receivers (four detectors)."""
    for eta in (eta_a, eta_b):
        if not 0.0 <= eta <= 1.0:
            raise ValueError(f"transmittance must lie in [0, 1], got {eta!r}")
    n = np.arange(joint.n_max + 1)
    ca = (1.0 - eta_a) ** n
    cb = (1.0 - eta_b) ** n
    return float((1.0 - epsilon) ** 4 * (ca @ joint.probs @ cb))


def joint_settings(delta: float) -> list[tuple[float, float]]:
    """The nine ``(eta_a, eta_b)`` pairs used by :func:`joint_p11_bounds`."""
    etas = (1.0, 1.0 - delta, 1.0 - math.sqrt(delta))
    return [(a, b) for a in etas for b in etas]


def _lookup(samples: Mapping[tuple[float, float], float], eta_a: float, eta_b: float) -> float:
    if (eta_a, eta_b) in samples:
        return samples[(eta_a, eta_b)]
    for (a, b), value in samples.items():
        if math.isclose(a, eta_a, rel_tol=0, abs_tol=1e-12) and \
                math.isclose(b, eta_b, rel_tol=0, abs_tol=1e-12):
            return value
    raise EstimationError(f"missing decoy setting (eta_a={eta_a!r}, eta_b={eta_b!r})")


def joint_p11_bounds(pvac_samples: Mapping[tuple[float, float], float], epsilon: float,
                     delta: float, C: float = 1.0, *,
                     sample_error: float = SAMPLE_ERROR) -> tuple[float, float]:
    """Interval for ``p_11`` from the nine joint no-click samples.

    With ``g(cA, cB) = sum_{n,m} cA^n cB^m p_nm`` (dark counts divided out),
    the first stage works in Alice's index on the Bob-differenced function
    ``F(cA) = g(cA, cB) - g(cA, 0)``. Its coefficients
    ``k_n = sum_{m>=1} cB^m p_nm`` are non-negative with total at most
    ``cB * C``, so the three-setting bounds apply and bound ``k_1(cB)``.
    The second stage treats ``h(c) = sum_m c^m p_1m`` in Bob's index:
    ``k_1(cB) = h(cB) - h(0)`` is exactly the numerator of the same bounds,
    which yields ``p_11``. Both Bob settings ``delta`` and ``sqrt(delta)`` are
    used and the tightest lower and upper values are kept.

    The mixed differences divide by ``cA * cB``, which for small ``delta``
    amplifies rounding in the samples by ``1 / delta**2``. Every candidate
    bound is therefore widened by the worst case of an absolute error
    ``sample_error`` on each sample, so the interval stays valid for
    floating-point (or noisy) input.

    Returns
    -------
    (lo, hi) clamped to ``[0, C]``.
    """
    if not 0.0 < delta < 1.0:
        raise EstimationError(f"delta must lie in (0, 1), got {delta!r}")
    if not 0.0 <= epsilon < 1.0:
        raise EstimationError(f"dark-count probability must lie in [0, 1), got {epsilon!r}")
    if sample_error < 0:
        raise EstimationError("sample_error must be >= 0")
    cs = (0.0, delta, math.sqrt(delta))
    scale = (1.0 - epsilon) ** 4
    g = np.empty((3, 3))
    for i, ca in enumerate(cs):
        for j, cb in enumerate(cs):
            value = _lookup(pvac_samples, 1.0 - ca, 1.0 - cb) / scale
            if not -CONSISTENCY_SLACK <= value <= C + CONSISTENCY_SLACK:
                raise EstimationError(
                    f"recovered no-click value {value!r} at (eta_a={1 - ca!r}, eta_b={1 - cb!r}) "
                    f"lies outside [0, C]; check epsilon and the samples"
                )
            g[i, j] = value

    c1, c2 = cs[1], cs[2]
    # h(0) = p_10 bounded from the cB = 0 column
    p10_lo = prop1_bounds(g[0, 0], g[1, 0], g[2, 0], c1, c2, C).x1_lo

    lowers, uppers = [0.0], [C]
    for j in (1, 2):
        cb = cs[j]
        diff = g[:, j] - g[:, 0]
        k1 = prop1_bounds(diff[0], diff[1], diff[2], c1, c2, cb * C)
        up_margin = 4.0 * sample_error / (c1 * cb)
        lo_margin = sample_error * (4.0 + 2.0 * cb**2) / (c1 * (1 - c1) * cb * (1 - cb))
        uppers.append(k1.x1_hi / cb + up_margin)
        lowers.append((k1.x1_lo + cb**2 * p10_lo - cb**2 * C) / (cb - cb**2) - lo_margin)
    lo = min(max(max(lowers), 0.0), C)
    hi = min(max(min(uppers), 0.0), C)
    return lo, hi


def truncated_solve(pvac_samples: Mapping[float, float], K: int) -> PhotonDist:
    """Least-squares reconstruction of ``p_0..p_K`` from many decoy settings.

    Solves ``p_vac(eta_i) = sum_{n<=K} (1 - eta_i)^n p_n`` and clamps the
    result to ``[0, 1]``. Only sensible when the settings are spread over
    ``[0, 1]`` and ``K`` is small (roughly ``K <= 8``); a warning is issued
    when the system is ill-conditioned.
    """
    etas = np.array(sorted(pvac_samples), dtype=float)
    if K < 0:
        raise EstimationError("truncation order must be >= 0")
    if np.unique(etas).size != etas.size:
        raise EstimationError("decoy settings must be distinct")
    if etas.size < K + 1:
        raise EstimationError(f"need at least {K + 1} settings for order {K}, got {etas.size}")
    if np.any((etas < 0) | (etas > 1)):
        raise EstimationError("transmittances must lie in [0, 1]")
    y = np.array([pvac_samples[eta] for eta in sorted(pvac_samples)], dtype=float)
    A = np.vander(1.0 - etas, K + 1, increasing=True)
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > ILL_CONDITIONED:
        warnings.warn(f"decoy system is ill-conditioned (cond ~ {cond:.3g})",
                      IllConditionedWarning, stacklevel=2)
    sol, *_ = np.linalg.lstsq(A, y, rcond=None)
    sol = np.clip(sol, 0.0, 1.0)
    if sol.sum() > 1.0:
        sol = sol / sol.sum()
    return PhotonDist(sol)
