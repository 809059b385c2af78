"""Plug & Play source monitoring with a Mach-Zehnder phase decoy.

A balanced interferometer with phase ``phi`` sends each photon to the
monitoring threshold detector with probability ``(1 + cos phi) / 2`` and on
to the channel with probability ``t = (1 - cos phi) / 2``. The monitor's
no-click rate is the same power series as a variable attenuator with
survival factor ``t``, so the detector-decoy estimators apply unchanged, and
the emitted statistics follow from binomial thinning with survival ``t``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .estimation import EstimationError, Prop1Bounds, prop1_bounds, truncated_solve
from .fock import PhotonDist, binomial_loss


def tap_fraction(phi: float) -> float:
    return (1.0 - math.cos(phi)) / 2.0


@dataclass(frozen=True)
class PhaseSetting:
    phi: float

    @property
    def t(self) -> float:
        return tap_fraction(self.phi)

    @classmethod
    def for_survival(cls, c: float) -> "PhaseSetting":
        """Phase whose monitor no-click factor per photon is ``c``."""
        if not 0.0 <= c <= 1.0:
            raise ValueError(f"survival factor must lie in [0, 1], got {c!r}")
        return cls(math.acos(1.0 - 2.0 * c))


def pvac_phase(dist: PhotonDist, phi: float) -> float:
    n = np.arange(dist.n_max + 1)
    return float(tap_fraction(phi) ** n @ dist.probs)


def output_stats(dist: PhotonDist, phi: float) -> PhotonDist:
    """Photon-number statistics of the pulses leaving toward the channel."""
    return binomial_loss(dist, tap_fraction(phi))


def estimate_input_stats(samples: Mapping[float, float], method: str = "prop1", *,
                         K: int = 2, C: float = 1.0) -> Prop1Bounds | PhotonDist:
    """Recover the input photon statistics from monitor no-click rates keyed by phase.

    ``method="prop1"`` needs the phase with ``t = 0`` plus at least two more
    and uses the two smallest non-zero survival factors; ``"truncated"``
    solves for ``p_0..p_K`` by least squares.
    """
    by_c = {}
    for phi, p in samples.items():
        by_c[tap_fraction(phi)] = p
    if method == "prop1":
        zero = [c for c in by_c if abs(c) < 1e-12]
        positive = sorted(c for c in by_c if 1e-12 <= c < 1.0)
        if not zero:
            raise EstimationError("prop1 needs the phi = 0 sample")
        if len(positive) < 2:
            raise EstimationError("prop1 needs two phases with 0 < t < 1")
        c1, c2 = positive[:2]
        return prop1_bounds(by_c[zero[0]], by_c[c1], by_c[c2], c1, c2, C)
    if method == "truncated":
        return truncated_solve({1.0 - c: p for c, p in by_c.items()}, K)
    raise ValueError(f"unknown method {method!r}; use 'prop1' or 'truncated'")
