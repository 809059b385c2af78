"""Type-II parametric down-conversion pair source."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .fock import NMAX_CAP, TAIL_TOLERANCE, PhotonDist


class TruncationError(ValueError):
    """Raised when the requested truncation leaves too much tail mass."""


def pdc_tail_mass(lam: float, n_max: int) -> float:
    """Exact mass of ``p_n`` beyond ``n_max`` (closed form, no cancellation)."""
    if lam == 0:
        return 0.0
    r = lam / (1.0 + lam)
    m = n_max + 1
    return r**m * (1.0 + m * (1.0 - r))


def pdc_nmax(lam: float, tol: float = TAIL_TOLERANCE, cap: int = NMAX_CAP) -> int:
    """Smallest truncation with tail mass below ``tol``, limited to ``cap``."""
    for n_max in range(cap + 1):
        if pdc_tail_mass(lam, n_max) < tol:
            return n_max
    return cap


@dataclass(frozen=True)
class PdcSource:
    """Pair source with pump parameter ``lam``; mean pair number is ``2 * lam``.

    ``n_max`` defaults to the tail policy; pass it explicitly to force a
    common truncation across pump values.
    """

    lam: float
    n_max: int | None = field(default=None)
    strict: bool = True

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError(f"pump parameter must be >= 0, got {self.lam!r}")
        if self.n_max is None:
            object.__setattr__(self, "n_max", pdc_nmax(self.lam))
        if self.n_max < 0:
            raise ValueError("n_max must be >= 0")
        if self.strict and self.tail_mass > TAIL_TOLERANCE:
            raise TruncationError(
                f"tail mass {self.tail_mass:.3g} beyond n_max={self.n_max} exceeds "
                f"{TAIL_TOLERANCE:g} at lambda={self.lam!r}"
            )

    @property
    def mu(self) -> float:
        return 2.0 * self.lam

    @property
    def tail_mass(self) -> float:
        return pdc_tail_mass(self.lam, self.n_max)


def pair_probs(lam: float, n_max: int) -> np.ndarray:
    """``p_n = (n + 1) lam^n / (1 + lam)^(n + 2)`` for ``n = 0..n_max``."""
    n = np.arange(n_max + 1)
    r = lam / (1.0 + lam)
    return (n + 1) * r**n / (1.0 + lam) ** 2


def pair_dist(src: PdcSource) -> PhotonDist:
    return PhotonDist(pair_probs(src.lam, src.n_max))


def pair_state_weights(n: int) -> dict[tuple[int, int, int, int], Fraction]:
    """Configurations of the ``n``-pair state in the emission basis.

    Keys are ``(alice_H, alice_V, bob_H, bob_V)`` photon counts; each of the
    ``n + 1`` anticorrelated configurations carries weight ``1/(n + 1)``.
    Relative phases are dropped: every observable computed downstream is
    diagonal in this basis.
    """
    if n < 0:
        raise ValueError("pair number must be >= 0")
    w = Fraction(1, n + 1)
    return {(n - m, m, m, n - m): w for m in range(n + 1)}
