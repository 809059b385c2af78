import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ddqkd.channel import (ChannelParams, OutcomeDist, ResolvedStats, SectorTable,
                           arrival_stats, click_pattern, sample_outcome_counts, simulate,
                           single_photon_qber, transmittance_from_db, wstate_loss_qber)
from ddqkd.source import PdcSource, pair_probs


def brute_force(lam, n_max, ch):
    """Enumerate every photon's fate (lost, kept, flipped) and every dark count.

    Returns the relabeled 4x4 outcome table, p11 and the (1, 1)-sector error
    probability. Exponential in the photon number, so only for tiny n_max.
    """
    out = np.zeros((4, 4))
    p11 = err11 = 0.0
    fates = {0: "lost", 1: "keep", 2: "flip"}

    def fate_prob(f, eta):
        return {"lost": 1 - eta, "keep": eta * (1 - ch.e), "flip": eta * ch.e}[f]

    for n, pn in enumerate(pair_probs(lam, n_max)):
        for m in range(n + 1):
            w = pn / (n + 1)
            # photon polarizations: Alice has n-m H and m V, Bob the opposite
            alice = ["H"] * (n - m) + ["V"] * m
            bob = ["H"] * m + ["V"] * (n - m)
            for fa in itertools.product(fates.values(), repeat=n):
                for fb in itertools.product(fates.values(), repeat=n):
                    prob = w
                    counts = []
                    for pols, fs, eta in ((alice, fa, ch.eta_a), (bob, fb, ch.eta_b)):
                        h = v = 0
                        for pol, f in zip(pols, fs):
                            prob *= fate_prob(f, eta)
                            if f == "lost":
                                continue
                            lands_h = (pol == "H") == (f == "keep")
                            h += lands_h
                            v += not lands_h
                        counts.append((h, v))
                    if prob == 0:
                        continue
                    (k, l), (r, s) = counts
                    if k + l == 1 and r + s == 1:
                        p11 += prob
                        err11 += prob * (k == r)
                    for darks in itertools.product((0, 1), repeat=4):
                        pd = prob
                        for d in darks:
                            pd *= ch.epsilon if d else 1 - ch.epsilon
                        ca = (k > 0 or darks[0]) + 2 * (l > 0 or darks[1])
                        cb = (r > 0 or darks[2]) + 2 * (s > 0 or darks[3])
                        out[ca, [0, 2, 1, 3][cb]] += pd
    return out, p11, err11


POINTS = [
    (0.2, 3, ChannelParams(1.0, 2.0, 0.05, 0.01)),
    (0.4, 2, ChannelParams(0.0, 0.0, 0.1, 0.0)),
    (0.1, 3, ChannelParams(3.0, 0.5, 0.0, 0.2)),
]


@pytest.mark.parametrize("lam,n_max,ch", POINTS)
def test_simulate_matches_brute_force(lam, n_max, ch):
    src = PdcSource(lam, n_max, strict=False)
    want, p11, err11 = brute_force(lam, n_max, ch)
    sim = simulate(src, ch)
    np.testing.assert_allclose(sim.outcome.probs, want, atol=1e-14)
    assert sim.p11 == pytest.approx(p11, abs=1e-14)
    assert sim.q11 * sim.p11 == pytest.approx(err11, abs=1e-14)


@pytest.mark.parametrize("lam,n_max,ch", POINTS)
def test_sector_table_matches_full_tensor(lam, n_max, ch):
    src = PdcSource(lam, n_max, strict=False)
    full = simulate(src, ch)
    fast = SectorTable(ch, n_max).result(lam)
    np.testing.assert_allclose(fast.outcome.probs, full.outcome.probs, atol=1e-15)
    np.testing.assert_allclose(fast.alice_vac_bob, full.alice_vac_bob, atol=1e-15)
    assert fast.p11 == pytest.approx(full.p11, abs=1e-15)
    assert fast.q11 == pytest.approx(full.q11, abs=1e-13)


@given(st.floats(1e-4, 0.5), st.floats(0, 30), st.floats(0, 30), st.floats(0, 0.5),
       st.floats(0, 0.1))
@settings(max_examples=40, deadline=None)
def test_sector_table_agrees_everywhere(lam, db_a, db_b, e, eps):
    ch = ChannelParams(db_a, db_b, e, eps)
    src = PdcSource(lam)
    full = simulate(src, ch)
    fast = SectorTable(ch, src.n_max).result(lam)
    np.testing.assert_allclose(fast.outcome.probs, full.outcome.probs, atol=1e-14)
    assert full.outcome.probs.sum() == pytest.approx(1.0, abs=2e-10)


def test_wstate_loss_qber_is_one_sixth():
    assert wstate_loss_qber() == pytest.approx(1 / 6, abs=1e-12)


@pytest.mark.parametrize("e", [0.0, 0.03, 0.2])
def test_single_pair_error_lossless(e):
    sim = simulate(PdcSource(0.3), ChannelParams(0.0, 0.0, e, 0.0))
    assert sim.q11 == pytest.approx(2 * e * (1 - e), abs=1e-12)


@pytest.mark.parametrize("e", [0.0, 0.03])
def test_single_pair_error_low_pump(e):
    sim = simulate(PdcSource(1e-6), ChannelParams(10.0, 3.0, e, 0.0))
    assert sim.q11 == pytest.approx(2 * e * (1 - e), abs=1e-5)


@given(st.floats(1e-3, 0.5), st.floats(0, 20), st.floats(0, 20), st.floats(0, 0.5))
@settings(max_examples=40, deadline=None)
def test_multi_pair_loss_only_adds_errors(lam, db_a, db_b, e):
    # lost partners of multi-pair emissions land in the one-photon sector with random bits
    sim = SectorTable(ChannelParams(db_a, db_b, e, 0.0), PdcSource(lam).n_max).result(lam)
    assert sim.q11 >= 2 * e * (1 - e) - 1e-12


def test_zero_pump_gives_dark_counts_only():
    eps = 0.1
    sim = simulate(PdcSource(0.0), ChannelParams(2.0, 3.0, 0.1, eps))
    side = np.array([(1 - eps) ** 2, eps * (1 - eps), eps * (1 - eps), eps**2])
    np.testing.assert_allclose(sim.outcome.probs, np.outer(side, side[[0, 2, 1, 3]]), atol=1e-15)
    assert sim.p11 == 0.0


def test_relabel_is_an_involution_and_correlates():
    sim = simulate(PdcSource(0.05), ChannelParams(0.0, 0.0, 0.0, 0.0))
    out = sim.outcome
    np.testing.assert_array_equal(out.relabeled().relabeled().probs, out.probs)
    assert out["0", "1"] == out["1", "0"] == 0.0
    assert out["0", "0"] == pytest.approx(out["1", "1"])
    r = sim.resolved
    np.testing.assert_array_equal(r.relabeled().relabeled().q, r.q)


def test_pair_marginal_keeps_mass():
    r = arrival_stats(PdcSource(0.2), ChannelParams(1.0, 2.0, 0.1))
    m = r.pair_marginal()
    assert m.sum() == pytest.approx(r.total)
    assert m[1, 1] == pytest.approx(single_photon_qber(r).p11)


def test_transmittance_and_validation():
    assert transmittance_from_db(10) == pytest.approx(0.1)
    assert ChannelParams(3.0, 4.0).db_tot == 7.0
    with pytest.raises(ValueError):
        ChannelParams(-1.0, 0.0)
    with pytest.raises(ValueError):
        ChannelParams(0.0, 0.0, e=1.5)
    with pytest.raises(ValueError):
        OutcomeDist(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        ResolvedStats(np.zeros((2, 2, 2)))


def test_sampler_agrees_with_exact_table():
    n = 400_000
    ch = ChannelParams(1.0, 2.0, 0.05, 0.02)
    src = PdcSource(0.25)
    exact = simulate(src, ch).outcome.relabeled().probs
    counts = sample_outcome_counts(src, ch, n, seed=3)
    freq = counts / n
    sigma = np.sqrt(exact * (1 - exact) / n) + 1e-12
    assert np.max(np.abs(freq - exact) / sigma) < 4.5
    again = sample_outcome_counts(src, ch, n, seed=3)
    np.testing.assert_array_equal(again, counts)
