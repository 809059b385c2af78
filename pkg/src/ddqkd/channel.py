"""Observed statistics of the pair source behind lossy, misaligned channels.

Every operation applied between the source and the detectors is diagonal in
the photon-number basis of the emission modes: per-mode loss, per-photon
polarization flips and threshold detection. Interference between the
configurations of an ``n``-pair state therefore never reaches a probability,
and the whole simulation reduces to multinomial bookkeeping over classical
configuration weights.

Outcome labels on each side are ``vac`` (no click), ``0`` (only the H
detector clicked), ``1`` (only V clicked) and ``D`` (double click).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .fock import binomial_matrix, flip_split
from .source import PdcSource, pair_probs, pair_state_weights

OUTCOMES = ("vac", "0", "1", "D")
VAC, ZERO, ONE, DOUBLE = range(4)

# swaps the 0 and 1 labels; used to turn the source's anticorrelations into correlations
_RELABEL = [VAC, ONE, ZERO, DOUBLE]


def transmittance_from_db(db: float) -> float:
    if db < 0:
        raise ValueError(f"loss must be >= 0 dB, got {db!r}")
    return 10.0 ** (-db / 10.0)


@dataclass(frozen=True)
class ChannelParams:
    """Losses toward Alice and Bob (dB, detector efficiency folded in),
    misalignment flip probability ``e`` and per-detector dark-count
    probability ``epsilon``."""

    db_a: float
    db_b: float
    e: float = 0.0
    epsilon: float = 0.0

    def __post_init__(self):
        for name in ("db_a", "db_b"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)!r}")
        for name in ("e", "epsilon"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {getattr(self, name)!r}")

    @property
    def eta_a(self) -> float:
        return transmittance_from_db(self.db_a)

    @property
    def eta_b(self) -> float:
        return transmittance_from_db(self.db_b)

    @property
    def db_tot(self) -> float:
        return self.db_a + self.db_b


@dataclass(frozen=True)
class OutcomeDist:
    """4x4 joint probabilities, rows Alice and columns Bob, in ``OUTCOMES`` order."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        if probs.shape != (4, 4):
            raise ValueError(f"outcome table must be 4x4, got {probs.shape}")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    def relabeled(self) -> "OutcomeDist":
        """Swap Bob's 0 and 1 labels."""
        return OutcomeDist(self.probs[:, _RELABEL])

    def __getitem__(self, key: tuple[str, str]) -> float:
        a, b = key
        return float(self.probs[OUTCOMES.index(a), OUTCOMES.index(b)])


@dataclass(frozen=True)
class ResolvedStats:
    """Photon-number-resolved arrivals ``q[k, l, r, s]``.

    ``k, l`` count photons reaching Alice's H and V detectors and ``r, s``
    Bob's, after loss and misalignment, in the physical (unrelabeled) basis.
    """

    q: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=float)
        if q.ndim != 4 or len(set(q.shape)) != 1:
            raise ValueError("resolved statistics need a cubic 4-index tensor")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)

    @property
    def n_max(self) -> int:
        return self.q.shape[0] - 1

    @property
    def total(self) -> float:
        return float(self.q.sum())

    def pair_marginal(self) -> np.ndarray:
        """``p[n, m]`` with ``n = k + l`` photons at Alice and ``m = r + s`` at Bob."""
        dim = self.q.shape[0]
        tot = np.add.outer(np.arange(dim), np.arange(dim))
        out = np.zeros((2 * dim - 1, 2 * dim - 1))
        np.add.at(out, (tot[:, :, None, None], tot[None, None, :, :]), self.q)
        return out[:dim, :dim]

    def relabeled(self) -> "ResolvedStats":
        """Swap Bob's H and V counts."""
        return ResolvedStats(self.q.transpose(0, 1, 3, 2))


class SingleQber(NamedTuple):
    p11: float
    q11: float
    defined: bool


@dataclass(frozen=True)
class SimulationResult:
    """Everything the key-rate scenarios need at one operating point.

    ``outcome`` is already relabeled so equal labels mean agreeing bits.
    ``alice_vac_bob[o]`` is the probability that no photon reaches Alice
    while Bob's (relabeled) outcome is ``o``. ``resolved`` is only filled by
    the full-tensor path.
    """

    lam: float
    channel: ChannelParams
    outcome: OutcomeDist
    p11: float
    q11: float
    alice_vac_bob: np.ndarray
    resolved: ResolvedStats | None = None


@lru_cache(maxsize=4096)
def _group_arrivals(count: int, eta: float, e: float) -> np.ndarray:
    """``G[x, y]``: ``count`` photons of one label end as ``x`` correct, ``y`` flipped."""
    surv = binomial_matrix(eta, count)[:, count]
    out = np.zeros((count + 1, count + 1))
    for s in range(count + 1):
        if surv[s] == 0:
            continue
        flips = flip_split(s, e)
        for j in range(s + 1):
            out[s - j, j] += surv[s] * flips[j]
    out.setflags(write=False)
    return out


def side_arrivals(h: int, v: int, eta: float, e: float) -> np.ndarray:
    """Joint distribution of photons reaching the (H, V) detectors of one side."""
    gh = _group_arrivals(h, eta, e)
    gv = _group_arrivals(v, eta, e).T
    out = np.zeros((h + v + 1, h + v + 1))
    for x in range(v + 1):
        for y in range(v + 1):
            if gv[x, y]:
                out[x:x + h + 1, y:y + h + 1] += gv[x, y] * gh
    return out


def _arrivals_from_pairs(pairs: np.ndarray, eta_a: float, eta_b: float, e: float) -> ResolvedStats:
    n_max = pairs.size - 1
    dim = n_max + 1
    q = np.zeros((dim, dim, dim, dim))
    for n, pn in enumerate(pairs):
        if pn == 0:
            continue
        for (ah, av, bh, bv), w in pair_state_weights(n).items():
            a = side_arrivals(ah, av, eta_a, e)
            b = side_arrivals(bh, bv, eta_b, e)
            q[:n + 1, :n + 1, :n + 1, :n + 1] += (pn * float(w)) * np.multiply.outer(a, b)
    return ResolvedStats(q)


def arrival_stats(src: PdcSource, ch: ChannelParams) -> ResolvedStats:
    """Resolved arrival statistics: loss on each side, then independent per-photon flips."""
    return _arrivals_from_pairs(pair_probs(src.lam, src.n_max), ch.eta_a, ch.eta_b, ch.e)


def side_click_matrix(n_max: int, epsilon: float) -> np.ndarray:
    """``S[k, l, o]``: probability of outcome ``o`` given ``k`` H and ``l`` V photons."""
    dim = n_max + 1
    hit_h = np.arange(dim)[:, None] >= 1
    hit_v = np.arange(dim)[None, :] >= 1
    click_h = np.where(hit_h, 1.0, epsilon) * np.ones((dim, dim))
    click_v = np.where(hit_v, 1.0, epsilon) * np.ones((dim, dim))
    s = np.empty((dim, dim, 4))
    s[..., VAC] = (1 - click_h) * (1 - click_v)
    s[..., ZERO] = click_h * (1 - click_v)
    s[..., ONE] = (1 - click_h) * click_v
    s[..., DOUBLE] = click_h * click_v
    return s


def click_pattern(resolved: ResolvedStats, epsilon: float) -> OutcomeDist:
    """Threshold detection with independent dark counts on all four detectors (raw labels)."""
    s = side_click_matrix(resolved.n_max, epsilon)
    return OutcomeDist(np.einsum("klrs,klo,rsp->op", resolved.q, s, s, optimize=True))


def single_photon_qber(resolved: ResolvedStats) -> SingleQber:
    """Probability of one photon at each side and the error rate on those events.

    The source is anticorrelated, so an error is two equal raw labels.
    """
    q = resolved.q
    if resolved.n_max < 1:
        return SingleQber(0.0, 0.0, False)
    agree = q[1, 0, 0, 1] + q[0, 1, 1, 0]
    err = q[1, 0, 1, 0] + q[0, 1, 0, 1]
    p11 = float(agree + err)
    if p11 <= 0:
        return SingleQber(0.0, 0.0, False)
    return SingleQber(p11, float(err / p11), True)


def sector_qber(resolved: ResolvedStats, n_a: int, n_b: int) -> float:
    """QBER of the events with exactly ``n_a`` photons at Alice and ``n_b`` at Bob.

    Uses perfect detectors; double clicks are assigned a random bit.
    """
    dim = resolved.n_max + 1
    tot = np.add.outer(np.arange(dim), np.arange(dim))
    mask = np.multiply.outer(tot == n_a, tot == n_b)
    sector = ResolvedStats(np.where(mask, resolved.q, 0.0))
    if sector.total == 0:
        raise ValueError(f"no probability in the ({n_a}, {n_b}) sector")
    out = click_pattern(sector, 0.0).relabeled().probs
    gain, errors = _double_click_gain(out)
    return errors / gain


def wstate_loss_qber() -> float:
    """Error rate of the two-pair state after a single photon is lost on one side."""
    pairs = np.array([0.0, 0.0, 1.0])
    resolved = _arrivals_from_pairs(pairs, 0.5, 1.0, 0.0)
    return sector_qber(resolved, 1, 2)


def _double_click_gain(out: np.ndarray) -> tuple[float, float]:
    """Conclusive probability and error probability with double clicks kept as random bits."""
    conclusive = out[1:, 1:]
    errors = out[ZERO, ONE] + out[ONE, ZERO] + 0.5 * (out[DOUBLE, 1:].sum() + out[1:3, DOUBLE].sum())
    return float(conclusive.sum()), float(errors)


def simulate(src: PdcSource, ch: ChannelParams) -> SimulationResult:
    """Exact observed statistics via the full resolved-arrival tensor."""
    resolved = arrival_stats(src, ch)
    outcome = click_pattern(resolved, ch.epsilon).relabeled()
    p11, q11, _ = single_photon_qber(resolved)
    s = side_click_matrix(resolved.n_max, ch.epsilon)
    vac_bob = np.einsum("rs,rsp->p", resolved.q[0, 0], s)[_RELABEL]
    return SimulationResult(src.lam, ch, outcome, p11, q11, vac_bob, resolved)


class SectorTable:
    """Per-pair-number contributions to the observed statistics at a fixed channel.

    All observables are linear in ``p_n``, so once the ``n``-pair sectors are
    tabulated the statistics for any pump value are a weighted sum. This is
    what makes the pump optimization cheap. Side probabilities use closed
    forms for the four arrival classes (nothing, H only, V only, both).
    """

    def __init__(self, ch: ChannelParams, n_max: int):
        self.channel = ch
        self.n_max = n_max
        dim = n_max + 1
        self.outcome = np.zeros((dim, 4, 4))
        self.p11 = np.zeros(dim)
        self.err11 = np.zeros(dim)
        self.vac_bob = np.zeros((dim, 4))
        for n in range(dim):
            for (ah, av, bh, bv), w in pair_state_weights(n).items():
                w = float(w)
                a_out, a_vac, a_one = self._side(ah, av, ch.eta_a, ch.e, ch.epsilon)
                b_out, _, b_one = self._side(bh, bv, ch.eta_b, ch.e, ch.epsilon)
                self.outcome[n] += w * np.outer(a_out, b_out)
                self.p11[n] += w * a_one.sum() * b_one.sum()
                self.err11[n] += w * (a_one[0] * b_one[0] + a_one[1] * b_one[1])
                self.vac_bob[n] += w * a_vac * b_out

    @staticmethod
    def _side(h, v, eta, e, eps):
        a = eta * (1 - e)  # lands on its own label
        b = eta * e        # lands on the other label
        log_e = _nlog1m(h + v, eta)
        log_no_v = _nlog1m(h, b) + _nlog1m(v, a)
        log_no_h = _nlog1m(h, a) + _nlog1m(v, b)
        empty = math.exp(log_e)
        h_only = math.exp(log_no_v) - empty
        v_only = math.exp(log_no_h) - empty
        both = -math.expm1(log_no_h) - h_only
        out = np.array([
            empty * (1 - eps) ** 2,
            empty * eps * (1 - eps) + h_only * (1 - eps),
            empty * eps * (1 - eps) + v_only * (1 - eps),
            empty * eps**2 + (h_only + v_only) * eps + both,
        ])
        if h + v >= 1:
            rest = (1 - eta) ** (h + v - 1)
            one = np.array([(h * a + v * b) * rest, (h * b + v * a) * rest])
        else:
            one = np.zeros(2)
        return np.clip(out, 0.0, None), empty, one

    def result(self, lam: float) -> SimulationResult:
        p = pair_probs(lam, self.n_max)
        outcome = OutcomeDist(np.tensordot(p, self.outcome, axes=1)).relabeled()
        p11 = float(p @ self.p11)
        q11 = float(p @ self.err11) / p11 if p11 > 0 else 0.0
        vac_bob = (p @ self.vac_bob)[_RELABEL]
        return SimulationResult(lam, self.channel, outcome, p11, q11, vac_bob)


def _nlog1m(count: int, x: float) -> float:
    """``count * log(1 - x)`` with ``0 * log(0) = 0``."""
    if count == 0:
        return 0.0
    return count * math.log1p(-x) if x < 1 else -math.inf


def sample_arrivals(pairs: np.ndarray, ch: ChannelParams, n_samples: int,
                    rng: np.random.Generator) -> np.ndarray:
    """Event-by-event sampler of arrivals; returns an ``(n_samples, 4)`` array of ``k, l, r, s``.

    Independent of the enumerators above: pair number, configuration,
    per-photon survival and per-photon flips are all drawn explicitly.
    """
    pairs = np.asarray(pairs, dtype=float)
    n = rng.choice(pairs.size, size=n_samples, p=pairs / pairs.sum())
    m = rng.integers(0, n + 1)

    def one_side(h, v, eta):
        sh = rng.binomial(h, eta)
        sv = rng.binomial(v, eta)
        fh = rng.binomial(sh, ch.e)
        fv = rng.binomial(sv, ch.e)
        return sh - fh + fv, sv - fv + fh

    k, l = one_side(n - m, m, ch.eta_a)
    r, s = one_side(m, n - m, ch.eta_b)
    return np.stack([k, l, r, s], axis=1)


def sample_outcome_counts(src: PdcSource, ch: ChannelParams, n_samples: int, seed: int,
                          chunk: int = 1_000_000) -> np.ndarray:
    """Monte Carlo 4x4 outcome counts (raw labels) with explicit dark counts."""
    rng = np.random.default_rng(seed)
    pairs = pair_probs(src.lam, src.n_max)
    counts = np.zeros((4, 4), dtype=np.int64)
    done = 0
    while done < n_samples:
        size = min(chunk, n_samples - done)
        arr = sample_arrivals(pairs, ch, size, rng)
        dark = rng.random((size, 4)) < ch.epsilon
        clicks = (arr >= 1) | dark
        alice = clicks[:, 0] * 1 + clicks[:, 1] * 2
        bob = clicks[:, 2] * 1 + clicks[:, 3] * 2
        # (no click, H only, V only, both) -> (vac, 0, 1, D) is the identity on 0..3
        np.add.at(counts, (alice, bob), 1)
        done += size
    return counts
