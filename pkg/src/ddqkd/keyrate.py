"""Secret-key-rate lower bounds for the active BB84 and 6-state receivers.

Six bounds are supported, differing in how double clicks are treated
(kept as random bits or discarded), whether the single-photon error rate
is known from the refined decoy setup or bounded by blaming every error on
single photons, the squash-model comparison, and ideal photon-number
resolving detectors.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .channel import DOUBLE, ONE, ZERO, ChannelParams, SectorTable, SimulationResult
from .fock import NMAX_CAP, TAIL_TOLERANCE, binary_entropy
from .source import TruncationError, pdc_nmax, pdc_tail_mass

LOG2_3 = math.log2(3.0)
DEFAULT_LAMBDA_RANGE = (1e-4, 0.5)
GRID_POINTS = 40
REFINE_RTOL = 1e-4


class Protocol(enum.Enum):
    BB84 = "bb84"
    SIX_STATE = "6state"


class Scenario(enum.Enum):
    DOUBLE = "double"
    DOUBLE_BOUND = "double-bound"
    SINGLE = "single"
    SINGLE_BOUND = "single-bound"
    UPDATED_SQUASH = "squash"
    PNR = "pnr"

    @property
    def keeps_double_clicks(self) -> bool:
        return self in (Scenario.DOUBLE, Scenario.DOUBLE_BOUND, Scenario.UPDATED_SQUASH)


class InvalidScenarioError(ValueError):
    pass


def check_pairing(protocol: Protocol, scenario: Scenario) -> None:
    # no squash model exists for the active 6-state measurement
    if protocol is Protocol.SIX_STATE and scenario is Scenario.UPDATED_SQUASH:
        raise InvalidScenarioError("the squash-model bound is not available for the 6-state protocol")


def applicable_scenarios(protocol: Protocol) -> list[Scenario]:
    return [sc for sc in Scenario if not (protocol is Protocol.SIX_STATE
                                          and sc is Scenario.UPDATED_SQUASH)]


@dataclass(frozen=True)
class ScenarioInputs:
    """Observed gain ``g`` and QBER ``q``, vacuum gain ``g0``, single-photon
    gain ``g11`` and error rate ``q11`` (exact or upper bound), and the
    single-photon-pair probability ``p11``."""

    g: float
    q: float
    g0: float
    g11: float
    q11: float
    p11: float


def privacy_fn(protocol: Protocol, x: float) -> float:
    """Secret fraction per single-photon pair at error rate ``x``.

    >>> round(privacy_fn(Protocol.BB84, 0.11), 5)
    0.50008
    """
    limit = 0.5 if protocol is Protocol.BB84 else 2.0 / 3.0
    if not -1e-12 <= x <= limit + 1e-12:
        raise ValueError(f"error rate {x!r} outside [0, {limit:.4g}] for {protocol.value}")
    x = min(max(x, 0.0), limit)
    if protocol is Protocol.BB84:
        return 1.0 - binary_entropy(x)
    return 1.0 + binary_entropy(x) - binary_entropy(1.5 * x) - 1.5 * x * LOG2_3


def _clamp_half(x: float) -> float:
    return min(max(x, 0.0), 0.5)


def _gain_and_errors(out: np.ndarray, keep_double: bool) -> tuple[float, float]:
    if keep_double:
        gain = out[1:, 1:].sum()
        errors = out[ZERO, ONE] + out[ONE, ZERO] + 0.5 * (out[DOUBLE, 1:].sum()
                                                          + out[1:DOUBLE, DOUBLE].sum())
    else:
        gain = out[1:DOUBLE, 1:DOUBLE].sum()
        errors = out[ZERO, ONE] + out[ONE, ZERO]
    return float(gain), float(errors)


def scenario_inputs(sim: SimulationResult, ch: ChannelParams, sc: Scenario, *,
                    include_vacuum: bool = True) -> ScenarioInputs:
    """Gains and error rates entering the bound for scenario ``sc``.

    ``include_vacuum=False`` drops the vacuum gain, which is how the
    distance gained from it is measured.
    """
    if sim.channel != ch:
        raise ValueError("simulation was computed for a different channel")
    eps = ch.epsilon
    out = sim.outcome.probs
    keep = sc.keeps_double_clicks
    g, errors = _gain_and_errors(out, keep)
    q = errors / g if g > 0 else 0.0
    p11, q11 = sim.p11, min(sim.q11, 0.5)

    if keep:
        g0 = (1.0 - (1.0 - eps) ** 2) * float(sim.alice_vac_bob[1:].sum())
        g11 = p11
    else:
        g0 = 2.0 * eps * (1.0 - eps) * float(sim.alice_vac_bob[1:DOUBLE].sum())
        g11 = (1.0 - eps) ** 2 * p11
    if not include_vacuum:
        g0 = 0.0

    if sc is Scenario.UPDATED_SQUASH:
        g11 = g - g0
        q11 = _clamp_half((q * g - g0 / 2) / g11) if g11 > 0 else 0.0
    elif sc in (Scenario.DOUBLE_BOUND, Scenario.SINGLE_BOUND):
        q11 = _clamp_half((q * g - g0 / 2) / g11) if g11 > 0 else 0.0
    return ScenarioInputs(g=g, q=q, g0=g0, g11=g11, q11=q11, p11=p11)


def rate_lower_bound(inputs: ScenarioInputs, protocol: Protocol, sc: Scenario,
                     f_ec: float = 1.0) -> float:
    """Secret bits per pulse; negative values are kept (only reports clamp at zero).

    ``f_ec`` scales the error-correction cost; 1 is the Shannon limit.
    """
    check_pairing(protocol, sc)
    if sc is Scenario.PNR:
        if inputs.p11 <= 0:
            return 0.0
        return inputs.p11 * (privacy_fn(protocol, inputs.q11)
                             - f_ec * binary_entropy(inputs.q11))
    if inputs.g11 <= 0 and inputs.g0 <= 0:
        return 0.0
    if sc is Scenario.UPDATED_SQUASH:
        secret = inputs.g11 * (1.0 - binary_entropy(inputs.q11)) if inputs.g11 > 0 else 0.0
    else:
        secret = inputs.g11 * privacy_fn(protocol, inputs.q11) if inputs.g11 > 0 else 0.0
    return inputs.g0 + secret - f_ec * inputs.g * binary_entropy(inputs.q)


def rate_for(sim: SimulationResult, protocol: Protocol, sc: Scenario, *,
             include_vacuum: bool = True, f_ec: float = 1.0) -> float:
    inputs = scenario_inputs(sim, sim.channel, sc, include_vacuum=include_vacuum)
    return rate_lower_bound(inputs, protocol, sc, f_ec)


def sector_table(ch: ChannelParams, lambda_max: float, n_max: int | None = None) -> SectorTable:
    """Tabulate a channel with a truncation valid for every pump value up to ``lambda_max``."""
    if n_max is None:
        n_max = pdc_nmax(lambda_max)
        if pdc_tail_mass(lambda_max, n_max) > TAIL_TOLERANCE:
            raise TruncationError(
                f"lambda up to {lambda_max!r} needs more than n_max={NMAX_CAP} pairs"
            )
    return SectorTable(ch, n_max)


def optimize_lambda(ch: ChannelParams, protocol: Protocol, sc: Scenario,
                    lambda_range: tuple[float, float] = DEFAULT_LAMBDA_RANGE, *,
                    table: SectorTable | None = None, include_vacuum: bool = True,
                    f_ec: float = 1.0, clamp: bool = True) -> tuple[float, float]:
    """Pump value maximizing the rate: 40-point log grid, then bounded Brent refinement.

    With ``clamp`` (the default) a range where the rate never turns positive
    yields ``(lambda_min, 0.0)``; otherwise the best negative value is
    returned, which is useful when locating the zero crossing in distance.
    """
    lo, hi = lambda_range
    if not 0.0 < lo < hi <= 2.0:
        raise ValueError(f"lambda range must satisfy 0 < lo < hi <= 2, got {lambda_range!r}")
    check_pairing(protocol, sc)
    if table is None:
        table = sector_table(ch, hi)

    def rate(lam):
        return rate_for(table.result(lam), protocol, sc, include_vacuum=include_vacuum, f_ec=f_ec)

    grid = np.geomspace(lo, hi, GRID_POINTS)
    values = np.array([rate(lam) for lam in grid])
    i = int(np.argmax(values))
    best_lam, best = float(grid[i]), float(values[i])
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, GRID_POINTS - 1)]
    res = minimize_scalar(lambda x: -rate(x), bounds=(float(a), float(b)), method="bounded",
                          options={"xatol": REFINE_RTOL * float(a)})
    lam, val = float(res.x), -float(res.fun)
    if val > best:
        best_lam, best = lam, val
    if clamp and best <= 0:
        return lo, 0.0
    return best_lam, best


@dataclass(frozen=True)
class SweepRow:
    db_tot: float
    db_a: float
    db_b: float
    protocol: Protocol
    scenario: Scenario
    lambda_opt: float
    rate: float


def distance_sweep(db_b: float, db_a_list: Iterable[float], ch_base: ChannelParams,
                   protocol: Protocol, scenarios: Sequence[Scenario],
                   lambda_range: tuple[float, float] = DEFAULT_LAMBDA_RANGE, *,
                   threads: int | None = 1, include_vacuum: bool = True,
                   clamp: bool = True, n_max: int | None = None) -> list[SweepRow]:
    """Optimized rate per (Alice loss, scenario), ordered by Alice loss then scenario."""
    for sc in scenarios:
        check_pairing(protocol, sc)
    db_a_list = list(db_a_list)

    def point(db_a):
        ch = ChannelParams(db_a, db_b, ch_base.e, ch_base.epsilon)
        table = sector_table(ch, lambda_range[1], n_max)
        rows = []
        for sc in scenarios:
            lam, rate = optimize_lambda(ch, protocol, sc, lambda_range, table=table,
                                        include_vacuum=include_vacuum, clamp=clamp)
            rows.append(SweepRow(ch.db_tot, db_a, db_b, protocol, sc, lam, rate))
        return rows

    if threads == 1 or len(db_a_list) <= 1:
        results = [point(db) for db in db_a_list]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(point, db_a_list))
    return [row for rows in results for row in rows]


def max_distance(db_b: float, db_a_list: Iterable[float], ch_base: ChannelParams,
                 protocol: Protocol, sc: Scenario,
                 lambda_range: tuple[float, float] = DEFAULT_LAMBDA_RANGE, *,
                 include_vacuum: bool = True) -> float:
    """Largest total loss on the grid with a strictly positive optimized rate (``nan`` if none)."""
    rows = distance_sweep(db_b, db_a_list, ch_base, protocol, [sc], lambda_range,
                          include_vacuum=include_vacuum, clamp=False)
    positive = [row.db_tot for row in rows if row.rate > 0]
    return max(positive) if positive else math.nan
