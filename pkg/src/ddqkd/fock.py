"""Photon-number combinatorics.

Single- and two-party photon-number distributions, the binomial loss
transform of a beam splitter, per-photon label flips and the binary entropy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

MASS_SLACK = 1e-12

# Tail-mass policy for truncated photon-number distributions.
TAIL_TOLERANCE = 1e-10
NMAX_CAP = 25

_EXACT_COMB_LIMIT = 30


def _frozen(values, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def _check_mass(probs: np.ndarray) -> None:
    if not np.all(np.isfinite(probs)):
        raise ValueError("probabilities must be finite")
    if np.any(probs < 0):
        raise ValueError("probabilities must be non-negative")
    if probs.sum() > 1 + MASS_SLACK:
        raise ValueError(f"total probability {probs.sum()!r} exceeds 1")


@dataclass(frozen=True)
class PhotonDist:
    """Photon-number distribution ``p_n`` for ``n = 0..n_max``.

    The distribution may be sub-normalized; the missing mass is the tail
    beyond ``n_max`` that was cut off.
    """

    probs: np.ndarray

    def __post_init__(self):
        probs = _frozen(self.probs, 1)
        if probs.size == 0:
            raise ValueError("distribution needs at least the n=0 entry")
        _check_mass(probs)
        object.__setattr__(self, "probs", probs)

    @property
    def n_max(self) -> int:
        return self.probs.size - 1

    @property
    def mass(self) -> float:
        return float(self.probs.sum())

    def __len__(self) -> int:
        return self.probs.size

    def __getitem__(self, n):
        return self.probs[n]

    def mean(self) -> float:
        return float(np.arange(self.probs.size) @ self.probs)

    def padded(self, n_max: int) -> "PhotonDist":
        """Zero-pad (or trim, if the dropped entries are zero) to ``n_max``."""
        if n_max >= self.n_max:
            return PhotonDist(np.pad(self.probs, (0, n_max - self.n_max)))
        if np.any(self.probs[n_max + 1:] != 0):
            raise ValueError("cannot trim non-zero entries")
        return PhotonDist(self.probs[: n_max + 1])

    @classmethod
    def delta(cls, n: int, n_max: int | None = None) -> "PhotonDist":
        n_max = n if n_max is None else n_max
        if not 0 <= n <= n_max:
            raise ValueError("need 0 <= n <= n_max")
        probs = np.zeros(n_max + 1)
        probs[n] = 1.0
        return cls(probs)

    @classmethod
    def poisson(cls, mu: float, n_max: int) -> "PhotonDist":
        if mu < 0:
            raise ValueError("mean photon number must be >= 0")
        n = np.arange(n_max + 1)
        if mu == 0:
            return cls.delta(0, n_max)
        return cls(np.exp(-mu + n * math.log(mu) - gammaln(n + 1)))


@dataclass(frozen=True)
class JointPhotonDist:
    """Two-party distribution ``p[n, m]``: ``n`` photons at Alice, ``m`` at Bob."""

    probs: np.ndarray

    def __post_init__(self):
        probs = _frozen(self.probs, 2)
        if probs.shape[0] != probs.shape[1]:
            probs = np.pad(probs, ((0, max(probs.shape) - probs.shape[0]),
                                   (0, max(probs.shape) - probs.shape[1])))
            probs.setflags(write=False)
        _check_mass(probs)
        object.__setattr__(self, "probs", probs)

    @property
    def n_max(self) -> int:
        return self.probs.shape[0] - 1

    @property
    def mass(self) -> float:
        return float(self.probs.sum())

    @classmethod
    def product(cls, alice: PhotonDist, bob: PhotonDist) -> "JointPhotonDist":
        n_max = max(alice.n_max, bob.n_max)
        return cls(np.outer(alice.padded(n_max).probs, bob.padded(n_max).probs))

    def alice_marginal(self) -> PhotonDist:
        return PhotonDist(self.probs.sum(axis=1))

    def bob_marginal(self) -> PhotonDist:
        return PhotonDist(self.probs.sum(axis=0))


def binomial_coefficient(n: int, k: int) -> float:
    """``C(n, k)`` as a float; exact below ``n = 30``, log-gamma above."""
    if k < 0 or k > n:
        return 0.0
    if n <= _EXACT_COMB_LIMIT:
        return float(math.comb(n, k))
    return float(np.exp(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)))


@lru_cache(maxsize=64)
def _comb_table(n_max: int) -> np.ndarray:
    table = np.zeros((n_max + 1, n_max + 1))
    for n in range(n_max + 1):
        for k in range(n + 1):
            table[n, k] = binomial_coefficient(n, k)
    table.setflags(write=False)
    return table


def binomial_matrix(eta: float, n_max: int) -> np.ndarray:
    """Transition matrix ``B[k, n] = C(n, k) eta^k (1 - eta)^(n - k)``.

    Column ``n`` is the distribution of survivors when ``n`` photons each
    pass independently with probability ``eta``.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"transmittance must lie in [0, 1], got {eta!r}")
    n = np.arange(n_max + 1)
    diff = n[None, :] - n[:, None]  # n - k
    # numpy defines 0.0 ** 0 == 1.0, which covers eta in {0, 1}
    surv = eta ** n[:, None]
    lost = (1.0 - eta) ** np.clip(diff, 0, None)
    return np.where(diff >= 0, _comb_table(n_max).T * surv * lost, 0.0)


def binomial_loss(dist: PhotonDist, eta: float) -> PhotonDist:
    """Photon-number distribution after a beam splitter of transmittance ``eta``.

    >>> binomial_loss(PhotonDist.delta(2), 0.5).probs
    array([0.25, 0.5 , 0.25])
    """
    out = binomial_matrix(eta, dist.n_max) @ dist.probs
    # keep float rounding from pushing the total above the input mass
    return PhotonDist(np.clip(out, 0.0, None))


def flip_split(k: int, e: float) -> np.ndarray:
    """Distribution of how many of ``k`` photons flip label, each with probability ``e``."""
    if k < 0:
        raise ValueError("photon count must be >= 0")
    if not 0.0 <= e <= 1.0:
        raise ValueError(f"flip probability must lie in [0, 1], got {e!r}")
    return binomial_matrix(e, k)[:, k].copy()


def binary_entropy(x):
    """Binary entropy in bits, with ``0 log 0 = 0``.

    Accepts scalars or arrays. Values within 1e-12 outside ``[0, 1]`` are
    clipped; anything further out raises ``ValueError``.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(arr < -MASS_SLACK) or np.any(arr > 1 + MASS_SLACK):
        raise ValueError(f"binary entropy argument outside [0, 1]: {x!r}")
    arr = np.clip(arr, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -np.where(arr > 0, arr * np.log2(arr), 0.0) - np.where(
            arr < 1, (1 - arr) * np.log2(1 - arr), 0.0
        )
    return float(out) if out.ndim == 0 else out
