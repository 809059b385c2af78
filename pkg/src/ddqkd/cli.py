"""Command-line front end.

``ddqkd simulate`` writes optimized key rates over a distance sweep as CSV,
``ddqkd estimate`` turns a file of decoy no-click rates into photon-number
bounds and ``ddqkd plugplay`` runs the phase-decoy monitor analysis.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import estimation, plugplay
from .channel import ChannelParams, SectorTable, sample_outcome_counts
from .fock import PhotonDist
from .keyrate import (DEFAULT_LAMBDA_RANGE, Protocol, Scenario, applicable_scenarios,
                      distance_sweep)
from .source import PdcSource, TruncationError, pdc_tail_mass
from .fock import TAIL_TOLERANCE

CSV_HEADER = "db_tot,db_a,db_b,protocol,scenario,lambda_opt,rate"
NMAX_ENV = "DDQKD_NMAX"


class ConfigError(Exception):
    """One or more configuration problems; ``args`` holds one message per violation."""


class SamplesError(ValueError):
    pass


def fmt(x: float) -> str:
    return format(float(x), ".10g")


@dataclass
class RunConfig:
    protocol: Protocol = Protocol.BB84
    scenarios: list[Scenario] = field(default_factory=list)
    db_b: float = 3.0
    db_a_start: float = 0.0
    db_a_end: float = 40.0
    db_a_step: float = 1.0
    e: float = 0.03
    epsilon: float = 1e-6
    n_max: int | None = None
    lambda_min: float = DEFAULT_LAMBDA_RANGE[0]
    lambda_max: float = DEFAULT_LAMBDA_RANGE[1]
    seed: int = 0
    output_path: str | None = None
    threads: int | None = None
    mc_samples: int = 0

    def db_a_values(self) -> list[float]:
        count = int(math.floor((self.db_a_end - self.db_a_start) / self.db_a_step + 1e-9)) + 1
        return [round(self.db_a_start + i * self.db_a_step, 12) for i in range(count)]

    def validate(self) -> None:
        problems = []
        if self.db_a_start > self.db_a_end:
            problems.append("db-a start must not exceed its end")
        if not self.db_a_step > 0:
            problems.append("db-a step must be positive")
        if self.db_a_start < 0:
            problems.append("db-a must be >= 0")
        if not self.db_b >= 0:
            problems.append("db-b must be >= 0")
        for name in ("e", "epsilon"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                problems.append(f"{name} must lie in [0, 1]")
        if not 0.0 < self.lambda_min < self.lambda_max <= 2.0:
            problems.append("lambda-range must satisfy 0 < lo < hi <= 2")
        if self.n_max is not None and self.n_max < 0:
            problems.append("nmax must be >= 0")
        if self.threads is not None and self.threads < 1:
            problems.append("threads must be >= 1")
        if self.mc_samples < 0:
            problems.append("mc-samples must be >= 0")
        for sc in self.scenarios:
            if self.protocol is Protocol.SIX_STATE and sc is Scenario.UPDATED_SQUASH:
                problems.append("scenario squash is not available for the 6-state protocol")
        if not problems and self.lambda_max <= 2.0:
            n_max = self.n_max if self.n_max is not None else 25
            if pdc_tail_mass(self.lambda_max, n_max) > TAIL_TOLERANCE:
                problems.append(
                    f"lambda-range upper end {self.lambda_max:g} leaves tail mass above "
                    f"{TAIL_TOLERANCE:g} at nmax={n_max}"
                )
        if problems:
            raise ConfigError(*problems)


def _parse_range(text: str, parts: int, name: str) -> list[float]:
    pieces = text.split(":")
    if len(pieces) != parts:
        raise ConfigError(f"{name} expects {parts} colon-separated numbers, got {text!r}")
    try:
        return [float(p) for p in pieces]
    except ValueError:
        raise ConfigError(f"{name} expects numbers, got {text!r}") from None


def _parse_scenarios(values: list[str]) -> list[Scenario]:
    out = []
    for value in values:
        for name in value.split(","):
            name = name.strip()
            if not name:
                continue
            try:
                out.append(Scenario(name))
            except ValueError:
                choices = ", ".join(s.value for s in Scenario)
                raise ConfigError(f"unknown scenario {name!r} (choose from {choices})") from None
    return out


def read_config_file(path: str) -> dict[str, str]:
    """``key=value`` lines; ``#`` starts a comment. Keys use the long flag names."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("_", "-")] = value
    return out


_SIMULATE_KEYS = {"protocol", "scenario", "db-b", "db-a", "e", "epsilon", "nmax",
                  "lambda-range", "out", "seed", "threads", "mc-samples"}


def build_run_config(args: argparse.Namespace) -> RunConfig:
    settings: dict[str, str] = {}
    if args.config:
        settings = read_config_file(args.config)
        unknown = sorted(set(settings) - _SIMULATE_KEYS)
        if unknown:
            raise ConfigError(*(f"unknown config key {k!r}" for k in unknown))
    env_nmax = os.environ.get(NMAX_ENV)
    if env_nmax is not None and "nmax" not in settings:
        settings["nmax"] = env_nmax
    for key in _SIMULATE_KEYS:
        value = getattr(args, key.replace("-", "_"), None)
        if value is not None and value != []:
            settings[key] = ",".join(value) if isinstance(value, list) else str(value)

    cfg = RunConfig()
    problems = []

    def convert(key, fn, attr=None):
        if key not in settings:
            return
        try:
            setattr(cfg, attr or key, fn(settings[key]))
        except (ValueError, ConfigError) as exc:
            problems.append(f"{key}: {exc}")

    try:
        if "protocol" in settings:
            cfg.protocol = Protocol(settings["protocol"])
    except ValueError:
        problems.append(f"protocol must be bb84 or 6state, got {settings['protocol']!r}")
    try:
        cfg.scenarios = _parse_scenarios([settings.get("scenario", "")])
    except ConfigError as exc:
        problems.extend(exc.args)
    convert("db-b", float, "db_b")
    convert("e", float)
    convert("epsilon", float)
    convert("nmax", int, "n_max")
    convert("seed", int)
    convert("threads", int)
    convert("mc-samples", int, "mc_samples")
    if "out" in settings:
        cfg.output_path = settings["out"]
    if "db-a" in settings:
        try:
            cfg.db_a_start, cfg.db_a_end, cfg.db_a_step = _parse_range(settings["db-a"], 3, "db-a")
        except ConfigError as exc:
            problems.extend(exc.args)
    if "lambda-range" in settings:
        try:
            cfg.lambda_min, cfg.lambda_max = _parse_range(settings["lambda-range"], 2,
                                                          "lambda-range")
        except ConfigError as exc:
            problems.extend(exc.args)
    if not cfg.scenarios:
        cfg.scenarios = applicable_scenarios(cfg.protocol)
    try:
        cfg.validate()
    except ConfigError as exc:
        problems.extend(exc.args)
    if problems:
        raise ConfigError(*problems)
    return cfg


def simulate_rows(cfg: RunConfig) -> list[str]:
    base = ChannelParams(0.0, cfg.db_b, cfg.e, cfg.epsilon)
    rows = distance_sweep(cfg.db_b, cfg.db_a_values(), base, cfg.protocol, cfg.scenarios,
                          (cfg.lambda_min, cfg.lambda_max),
                          threads=cfg.threads or os.cpu_count() or 1, n_max=cfg.n_max)
    lines = [CSV_HEADER]
    for row in rows:
        lines.append(",".join([fmt(row.db_tot), fmt(row.db_a), fmt(row.db_b),
                               row.protocol.value, row.scenario.value,
                               fmt(row.lambda_opt), fmt(max(row.rate, 0.0))]))
    return lines


def mc_check(cfg: RunConfig, lam: float, db_a: float) -> float:
    """Largest |z|-score between sampled and exact outcome tables at one point."""
    ch = ChannelParams(db_a, cfg.db_b, cfg.e, cfg.epsilon)
    src = PdcSource(lam, cfg.n_max, strict=False)
    exact = SectorTable(ch, src.n_max).result(lam).outcome.relabeled().probs
    counts = sample_outcome_counts(src, ch, cfg.mc_samples, cfg.seed)
    freq = counts / cfg.mc_samples
    sigma = np.sqrt(np.maximum(exact * (1 - exact), 1e-300) / cfg.mc_samples)
    return float(np.max(np.abs(freq - exact / exact.sum()) / sigma))


def write_atomic(path: str | None, lines: list[str]) -> None:
    text = "\n".join(lines) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=target.parent if str(target.parent) else ".",
                               prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def run_simulate(args: argparse.Namespace) -> int:
    cfg = build_run_config(args)
    lines = simulate_rows(cfg)
    if cfg.mc_samples:
        first = lines[1].split(",")
        z = mc_check(cfg, max(float(first[5]), 0.05), float(first[1]))
        print(f"mc-check: max |z| = {z:.3f} over 16 outcome cells "
              f"({cfg.mc_samples} samples, seed {cfg.seed})", file=sys.stderr)
    write_atomic(cfg.output_path, lines)
    return 0


def read_samples(path: str, columns: int) -> list[tuple[float, ...]]:
    """Whitespace-separated numeric rows; the leading columns are transmittances in [0, 1]."""
    rows = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != columns:
            raise SamplesError(f"{path}:{lineno}: expected {columns} columns, got {len(parts)}")
        try:
            values = tuple(float(p) for p in parts)
        except ValueError:
            raise SamplesError(f"{path}:{lineno}: not a number in {line!r}") from None
        for eta in values[:-1]:
            if not 0.0 <= eta <= 1.0:
                raise SamplesError(f"{path}:{lineno}: transmittance {eta!r} outside [0, 1]")
        if not 0.0 <= values[-1] <= 1.0:
            raise SamplesError(f"{path}:{lineno}: probability {values[-1]!r} outside [0, 1]")
        rows.append(values)
    if not rows:
        raise SamplesError(f"{path}: no samples")
    return rows


def run_estimate(args: argparse.Namespace) -> int:
    mode = args.mode
    if mode == "joint":
        rows = read_samples(args.samples, 3)
        samples = {(a, b): p for a, b, p in rows}
        cs = sorted({1.0 - a for a, _, _ in rows} | {1.0 - b for _, b, _ in rows})
        positive = [c for c in cs if c > 1e-12]
        if not positive:
            raise SamplesError("joint mode needs settings with eta < 1")
        delta = positive[0]
        lo, hi = estimation.joint_p11_bounds(samples, args.epsilon, delta, args.mass)
        print(f"delta={fmt(delta)}")
        print(f"p11_in=[{fmt(lo)},{fmt(hi)}]")
        return 0

    rows = read_samples(args.samples, 2)
    scale = 1.0 - args.epsilon
    samples = {eta: p / scale for eta, p in rows}
    if mode == "prop1":
        zero = [eta for eta in samples if eta == 1.0]
        cs = sorted(1.0 - eta for eta in samples if 0.0 < 1.0 - eta < 1.0)
        if not zero:
            raise SamplesError("prop1 mode needs the eta = 1 setting")
        if len(cs) < 2:
            raise SamplesError("prop1 mode needs two settings with 0 < eta < 1")
        c1, c2 = cs[:2]
        b = estimation.prop1_bounds(samples[1.0], samples[1.0 - c1], samples[1.0 - c2],
                                    c1, c2, args.mass)
        print(f"x0={fmt(b.x0)}")
        print(f"x1_in=[{fmt(b.x1_lo)},{fmt(b.x1_hi)}]")
        print(f"x2_in=[{fmt(b.x2_lo)},{fmt(b.x2_hi)}]")
        return 0
    dist = estimation.truncated_solve(samples, args.order)
    for n, p in enumerate(dist.probs):
        print(f"x{n}={fmt(p)}")
    return 0


def read_dist(path: str) -> PhotonDist:
    values = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            values.append(float(line))
        except ValueError:
            raise SamplesError(f"{path}:{lineno}: not a number in {line!r}") from None
    if not values:
        raise SamplesError(f"{path}: empty distribution")
    return PhotonDist(values)


def plugplay_report(dist: PhotonDist, phases: list[float], method: str, *,
                    order: int = 2, delta: float = 1e-4) -> list[str]:
    lines = []
    if method == "prop1":
        est_phases = [plugplay.PhaseSetting.for_survival(c).phi
                      for c in (0.0, delta, math.sqrt(delta))]
    else:
        est_phases = list(phases)
    samples = {phi: plugplay.pvac_phase(dist, phi) for phi in est_phases}

    lines += ["# pvac", "phi,t,p_vac"]
    for phi in est_phases:
        lines.append(f"{fmt(phi)},{fmt(plugplay.tap_fraction(phi))},{fmt(samples[phi])}")

    estimate = plugplay.estimate_input_stats(samples, method, K=order)
    lines += ["", "# input"]
    if method == "prop1":
        lines.append("x0,x1_lo,x1_hi,x2_lo,x2_hi")
        lines.append(",".join(fmt(v) for v in (estimate.x0, estimate.x1_lo, estimate.x1_hi,
                                                estimate.x2_lo, estimate.x2_hi)))
        source, source_name = dist, "input"
    else:
        lines.append("n,p_n")
        lines += [f"{n},{fmt(p)}" for n, p in enumerate(estimate.probs)]
        source, source_name = estimate, "recovered"

    lines += ["", f"# output (from {source_name} distribution)", "phi,n,q_n"]
    for phi in phases:
        q = plugplay.output_stats(source, phi)
        lines += [f"{fmt(phi)},{n},{fmt(p)}" for n, p in enumerate(q.probs)]
    return lines


def run_plugplay(args: argparse.Namespace) -> int:
    if args.dist:
        dist = read_dist(args.dist)
    elif args.poisson is not None:
        nmax = args.nmax if args.nmax is not None else int(os.environ.get(NMAX_ENV, 25))
        dist = PhotonDist.poisson(args.poisson, nmax)
    else:
        raise SamplesError("plugplay needs --dist FILE or --poisson MU")
    try:
        phases = [float(p) for p in args.phases.split(",") if p.strip()]
    except ValueError:
        raise SamplesError(f"--phases expects comma-separated numbers, got {args.phases!r}") \
            from None
    lines = plugplay_report(dist, phases, args.method, order=args.order, delta=args.delta)
    write_atomic(args.out, lines)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ddqkd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="optimized key rates over a distance sweep (CSV)")
    sim.add_argument("--config", help="key=value file; flags override its entries")
    sim.add_argument("--protocol", choices=[p.value for p in Protocol])
    sim.add_argument("--scenario", action="append", default=[],
                     help="scenario name, repeatable or comma-separated "
                          f"({', '.join(s.value for s in Scenario)}); default: all applicable")
    sim.add_argument("--db-b", type=float, help="loss toward Bob in dB (default 3)")
    sim.add_argument("--db-a", help="Alice loss sweep start:end:step in dB (default 0:40:1)")
    sim.add_argument("--e", type=float, help="misalignment flip probability (default 0.03)")
    sim.add_argument("--epsilon", type=float, help="dark-count probability (default 1e-6)")
    sim.add_argument("--nmax", type=int, help=f"pair-number truncation (env {NMAX_ENV})")
    sim.add_argument("--lambda-range", help="optimizer range lo:hi (default 1e-4:0.5)")
    sim.add_argument("--out", help="output CSV path (default stdout)")
    sim.add_argument("--seed", type=int, help="seed for the Monte Carlo cross-check")
    sim.add_argument("--threads", type=int, help="parallel sweep points (default: all cores)")
    sim.add_argument("--mc-samples", type=int,
                     help="cross-check the first point against N sampled events")
    sim.set_defaults(func=run_simulate)

    est = sub.add_parser("estimate", help="bounds from decoy no-click samples")
    est.add_argument("samples", help="file of 'eta p_vac' lines ('eta_a eta_b p_vac' for joint)")
    est.add_argument("--mode", choices=["prop1", "truncated", "joint"], default="prop1")
    est.add_argument("--order", type=int, default=2, help="truncation order for truncated mode")
    est.add_argument("--epsilon", type=float, default=0.0,
                     help="dark-count probability to divide out")
    est.add_argument("--mass", type=float, default=1.0, help="bound on the total mass")
    est.set_defaults(func=run_estimate)

    pp = sub.add_parser("plugplay", help="phase-decoy monitor analysis")
    src = pp.add_mutually_exclusive_group()
    src.add_argument("--dist", help="file with one p_n per line")
    src.add_argument("--poisson", type=float, help="Poisson input with this mean")
    pp.add_argument("--nmax", type=int, help="truncation for --poisson")
    pp.add_argument("--phases", default="0,1.5707963267948966,3.141592653589793",
                    help="comma-separated phases in radians")
    pp.add_argument("--method", choices=["prop1", "truncated"], default="truncated")
    pp.add_argument("--order", type=int, default=2)
    pp.add_argument("--delta", type=float, default=1e-4)
    pp.add_argument("--out", help="output path (default stdout)")
    pp.set_defaults(func=run_plugplay)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for msg in exc.args:
            print(f"ddqkd: error: {msg}", file=sys.stderr)
        return 2
    except (SamplesError, estimation.EstimationError, TruncationError, ValueError,
            OSError) as exc:
        print(f"ddqkd: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
