"""Acceptance suite: one PASS/FAIL line per criterion.

Run ``pytest tests/test_acceptance.py -v`` or ``python tests/test_acceptance.py``
for a bare summary. Tolerances are fixed here and never relaxed to make a
check pass; a failing line means the implemented model disagrees with the
target, not that the check is wrong.
"""
from __future__ import annotations

import math
import sys
import time

import numpy as np
import pytest
from scipy.optimize import brentq

from ddqkd import (ChannelParams, JointPhotonDist, PdcSource, PhotonDist, binomial_loss,
                   convergence_sweep, joint_p11_bounds, prop1_bounds, pvac_joint, simulate,
                   wstate_loss_qber, arrival_stats)
from ddqkd.channel import SectorTable, sample_outcome_counts
from ddqkd.estimation import joint_settings, truncated_solve
from ddqkd.keyrate import (Protocol, Scenario, ScenarioInputs, max_distance,
                           distance_sweep, rate_lower_bound)
from ddqkd.plugplay import PhaseSetting, output_stats, pvac_phase, tap_fraction

DB_A_GRID = [float(d) for d in range(0, 81)]


def verdict(n: int, ok: bool, detail: str) -> str:
    return f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})"


def check_1():
    t0 = time.perf_counter()
    q = wstate_loss_qber()
    dt = time.perf_counter() - t0
    ok = abs(q - 1 / 6) <= 1e-9 and dt < 1.0
    return ok, f"qber={q:.12f} target 1/6 +- 1e-9, {dt:.3f}s < 1s"


def check_2():
    x = [0.5, 0.3, 0.2]
    f = lambda c: x[0] + x[1] * c + x[2] * c**2
    b = prop1_bounds(f(0), f(0.1), f(0.3), 0.1, 0.3, 1.0)
    want = (0.3, 0.32, 0.11333, 0.2)
    got = (b.x1_lo, b.x1_hi, b.x2_lo, b.x2_hi)
    ok = all(abs(g - w) <= 1e-5 for g, w in zip(got, want))
    return ok, "x1=[{:.6f},{:.6f}] x2=[{:.6f},{:.6f}] tol 1e-5".format(*got)


def check_3():
    rng = np.random.default_rng(20240603)
    t0 = time.perf_counter()
    contained, worst = True, 0.0
    for _ in range(100):
        support = int(rng.integers(1, 11))
        dist = PhotonDist(rng.dirichlet(np.ones(support)))
        p = dist.padded(max(dist.n_max, 2)).probs
        for delta, b in zip((1e-2, 1e-3, 1e-4), convergence_sweep(dist, (1e-2, 1e-3, 1e-4))):
            contained &= b.contains(p[1], p[2], slack=1e-9)
            if delta == 1e-4:
                worst = max(worst, b.x1_width)
    dt = time.perf_counter() - t0
    ok = contained and worst < 0.01 and dt < 10.0
    return ok, f"all contained={contained}, max x1 width at 1e-4 = {worst:.2e} < 0.01, {dt:.2f}s"


def _pnr_crossing(protocol):
    def rate(q):
        inputs = ScenarioInputs(g=1.0, q=q, g0=0.0, g11=1.0, q11=q, p11=1.0)
        return rate_lower_bound(inputs, protocol, Scenario.PNR)
    return brentq(rate, 0.01, 0.2, xtol=1e-12)


def check_4():
    bb84, six = _pnr_crossing(Protocol.BB84), _pnr_crossing(Protocol.SIX_STATE)
    ok = abs(bb84 - 0.1100) <= 0.0005 and abs(six - 0.1262) <= 0.0005
    return ok, f"bb84={bb84:.5f} (0.1100), 6state={six:.5f} (0.1262), tol 5e-4"


def check_5():
    t0 = time.perf_counter()
    base = ChannelParams(0.0, 3.0, 0.03, 1e-6)
    with_g0 = max_distance(3.0, DB_A_GRID, base, Protocol.BB84, Scenario.DOUBLE)
    without = max_distance(3.0, DB_A_GRID, base, Protocol.BB84, Scenario.DOUBLE,
                           include_vacuum=False)
    dt = time.perf_counter() - t0
    shift = with_g0 - without
    ok = abs(shift - 10.0) <= 2.0 and dt < 300.0
    return ok, (f"max db_tot {with_g0:g} with vacuum gain, {without:g} without, "
                f"shift {shift:g} dB, target 10 +- 2, {dt:.1f}s")


def check_6():
    base = ChannelParams(0.0, 3.0, 0.03, 1e-6)
    scs = [Scenario.DOUBLE, Scenario.UPDATED_SQUASH, Scenario.SINGLE]
    db_a = [float(d) for d in range(0, 31, 2)]
    rows = distance_sweep(3.0, db_a, base, Protocol.BB84, scs)
    rates = {sc: np.array([r.rate for r in rows if r.scenario is sc]) for sc in scs}
    positive = all((rates[sc] > 0).all() for sc in scs)
    order = bool(np.all(rates[Scenario.SINGLE] >= rates[Scenario.UPDATED_SQUASH])
                 and np.all(rates[Scenario.UPDATED_SQUASH] >= rates[Scenario.DOUBLE]))
    monotone = all(np.all(np.diff(rates[sc]) < 0) for sc in scs)
    ok = positive and order and monotone
    return ok, (f"db_A 0..30: positive={positive}, single>=squash>=double={order}, "
                f"decreasing={monotone}")


def check_7():
    t0 = time.perf_counter()
    src = PdcSource(0.1)
    ch = ChannelParams(10.0, 3.0, 0.0, 0.0)
    exact = simulate(src, ch).p11
    joint = JointPhotonDist(arrival_stats(src, ch).pair_marginal())
    delta = 1e-5
    samples = {s: pvac_joint(joint, *s, 0.0) for s in joint_settings(delta)}
    lo, hi = joint_p11_bounds(samples, 0.0, delta)
    dt = time.perf_counter() - t0
    width = (hi - lo) / exact
    ok = lo <= exact <= hi and width < 0.05 and dt < 30.0
    return ok, f"p11={exact:.6e} in [{lo:.6e},{hi:.6e}], width {width:.2%} < 5%, {dt:.2f}s"


MC_POINTS = [  # (lambda, db_a, db_b, e, epsilon)
    (0.05, 2.0, 1.0, 0.03, 1e-3),
    (0.3, 0.5, 4.0, 0.1, 1e-2),
    (0.15, 6.0, 0.0, 0.0, 0.05),
]


def check_8():
    n = 10_000_000
    worst = 0.0
    for i, (lam, db_a, db_b, e, eps) in enumerate(MC_POINTS):
        ch = ChannelParams(db_a, db_b, e, eps)
        src = PdcSource(lam)
        exact = SectorTable(ch, src.n_max).result(lam).outcome.relabeled().probs
        exact = exact / exact.sum()
        freq = sample_outcome_counts(src, ch, n, seed=1000 + i) / n
        sigma = np.sqrt(exact * (1 - exact) / n)
        z = np.where(sigma > 0, np.abs(freq - exact) / np.where(sigma > 0, sigma, 1.0),
                     np.where(freq == exact, 0.0, np.inf))
        worst = max(worst, float(z.max()))
    return worst <= 4.0, f"max |z| over 3x16 cells = {worst:.2f} <= 4 at 1e7 samples"


def check_9():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        dist = PhotonDist(rng.dirichlet(np.ones(int(rng.integers(1, 16)))))
        phi = float(rng.uniform(0, 2 * math.pi))
        a = output_stats(dist, phi).probs
        b = binomial_loss(dist, (1 - math.cos(phi)) / 2).probs
        worst = max(worst, float(np.abs(a - b).max()))
    truth = np.array([0.45, 0.35, 0.2])
    dist = PhotonDist(truth)
    phases = [PhaseSetting.for_survival(c).phi for c in (0.0, 0.25, 0.5, 0.75, 1.0)]
    samples = {1.0 - tap_fraction(phi): pvac_phase(dist, phi) for phi in phases}
    rec = truncated_solve(samples, 2).probs
    err = float(np.abs(rec - truth).max())
    ok = worst <= 1e-12 and err <= 1e-8
    return ok, f"output_stats max diff {worst:.1e} <= 1e-12, round-trip error {err:.1e} <= 1e-8"


CHECKS = [check_1, check_2, check_3, check_4, check_5, check_6, check_7, check_8, check_9]


@pytest.mark.parametrize("n", range(1, 10))
def test_criterion(n, report):
    ok, detail = CHECKS[n - 1]()
    report(verdict(n, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    failures = 0
    for n, check in enumerate(CHECKS, 1):
        ok, detail = check()
        failures += not ok
        print(verdict(n, ok, detail), flush=True)
    sys.exit(1 if failures else 0)
