"""Seeded experiments over random machines.

Trial ``i`` draws its machine from a Philox counter-based generator keyed by
``seed ^ i``, so every trial can be reproduced on its own and trials can run
in any order or in parallel; results are folded in index order.
"""
from __future__ import annotations

import json
import string
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from . import __version__
from .machine import Transition, TuringMachine, execute
from .orbits import (DEFAULT_EPS, DEFAULT_HORIZON, DEFAULT_TAIL, classify,
                     detect_sensitivity, orbit_of)
from .rationalize import BLANK, format_rational, rational_report

OUTCOMES = ("halted", "looped", "cauchy", "non_cauchy", "inconclusive")
_SYMBOLS = string.digits[1:] + string.ascii_letters

DISTRIBUTION_NOTE = (
    "uniform over transition tables: every (state, symbol) entry independently "
    "draws its next state uniformly from the running states plus accept and reject, "
    "its written symbol uniformly from the tape alphabet and its move uniformly from "
    "L/R; observed fractions depend on this choice")

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class EnsembleConfig:
    machine_count: int
    state_count: int = 4
    tape_alphabet_size: int = 2
    fuel: int = 5000
    input: str = ""
    eps: Fraction = DEFAULT_EPS
    tail_fraction: Fraction = DEFAULT_TAIL
    horizon: int = DEFAULT_HORIZON
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "eps", Fraction(self.eps))
        object.__setattr__(self, "tail_fraction", Fraction(self.tail_fraction))
        if self.machine_count < 1:
            raise ValueError("machine_count must be positive")
        if self.state_count < 1:
            raise ValueError("state_count must be positive")
        if not 2 <= self.tape_alphabet_size <= len(_SYMBOLS) + 1:
            raise ValueError(f"tape_alphabet_size must lie in 2..{len(_SYMBOLS) + 1}")
        if self.fuel < 1:
            raise ValueError("fuel must be positive")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if not 0 < self.tail_fraction <= 1:
            raise ValueError("tail_fraction must lie in (0, 1]")
        if self.horizon < 1:
            raise ValueError("horizon must be positive")
        if not 0 <= self.seed <= _MASK64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        sigma = set(_SYMBOLS[: self.tape_alphabet_size - 1])
        bad = [c for c in self.input if c not in sigma]
        if bad:
            raise ValueError(f"input uses symbols {bad} outside the generated input alphabet")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["eps"] = format_rational(self.eps)
        d["tail_fraction"] = format_rational(self.tail_fraction)
        return d


def trial_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=(seed ^ index) & _MASK64))


def random_machine(state_count: int, tape_alphabet_size: int,
                   rng: np.random.Generator) -> TuringMachine:
    """Every transition drawn uniformly; accept and reject are ordinary targets."""
    running = tuple(f"q{i}" for i in range(state_count))
    states = running + ("acc", "rej")
    gamma = (BLANK,) + tuple(_SYMBOLS[: tape_alphabet_size - 1])
    shape = (state_count, tape_alphabet_size)
    nxt = rng.integers(0, len(states), size=shape)
    wrt = rng.integers(0, tape_alphabet_size, size=shape)
    mov = rng.integers(0, 2, size=shape)
    delta = {}
    for a, q in enumerate(running):
        for b, s in enumerate(gamma):
            delta[(q, s)] = Transition(states[nxt[a, b]], gamma[wrt[a, b]], "LR"[mov[a, b]])
    sigma = tuple(s for s in gamma if s != BLANK)
    return TuringMachine(states, sigma, sigma + (BLANK,), delta, running[0], "acc", "rej")


def machine_for_trial(config: EnsembleConfig, index: int) -> TuringMachine:
    return random_machine(config.state_count, config.tape_alphabet_size,
                          trial_rng(config.seed, index))


def run_trial(config: EnsembleConfig, index: int) -> dict:
    """Run, classify and test one machine; returns a JSON-ready record."""
    machine = machine_for_trial(config, index)
    record: dict = {"index": index, "id": f"{(config.seed ^ index) & _MASK64:016x}"}
    outcome = execute(machine, config.input, config.fuel, detect_loops=True).outcome
    record["run"] = outcome.kind
    record["steps"] = outcome.steps
    if outcome.kind != "fuel_exhausted":
        record["outcome"] = outcome.kind
        record["class"] = "finite_halt" if outcome.kind == "halted" else "eventually_periodic"
        record["chaos"] = "not_applicable"
        if outcome.kind == "looped":
            record["preperiod"], record["period"] = outcome.preperiod, outcome.period
        return record
    try:
        orbit = orbit_of(machine, config.input, config.fuel, detect_loops=True)
        cls = classify(orbit, config.eps, config.tail_fraction)
        record["class"] = cls.kind
        record["outcome"] = cls.kind
        if cls.kind == "cauchy":
            record["limit"] = format(float(cls.limit_estimate), ".17g")
        if cls.profile is not None:
            record["profile_size"] = cls.profile.dimension
        if cls.reason:
            record["reason"] = cls.reason
        start = orbit.tail_start(config.tail_fraction)
        verdict = detect_sensitivity(orbit, config.eps, config.horizon, start=start,
                                     profile=cls.profile)
        record["chaos"] = verdict.kind
        if verdict.kind == "chaotic":
            record["witness"] = [*verdict.witness, verdict.divergence_step]
    except ValueError as exc:
        record.setdefault("class", "inconclusive")
        record["outcome"] = "inconclusive"
        record.setdefault("chaos", "inconclusive")
        record["reason"] = str(exc)
    return record


def _trial_args(args):
    return run_trial(*args)


def run_ensemble(config: EnsembleConfig, workers: int = 1) -> dict:
    """Aggregate report; identical configs give identical reports for any ``workers``."""
    jobs = [(config, i) for i in range(config.machine_count)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_trial_args, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        records = [run_trial(c, i) for c, i in jobs]

    counts = {k: 0 for k in OUTCOMES}
    for r in records:
        counts[r["outcome"]] += 1
    n = config.machine_count
    fractions = {k: rational_report(Fraction(v, n)) for k, v in counts.items()}
    exhausted = [r for r in records if r["run"] == "fuel_exhausted"]
    chaotic = sum(1 for r in exhausted if r["chaos"] == "chaotic")
    chaos_counts = {k: sum(1 for r in exhausted if r["chaos"] == k)
                    for k in ("chaotic", "non_sensitive", "inconclusive")}
    return {
        "tool": {"name": "tmchaos", "version": __version__},
        "config": config.to_dict(),
        "distribution": DISTRIBUTION_NOTE,
        "counts": counts,
        "fractions": fractions,
        "fuel_exhausted": len(exhausted),
        "chaos_counts": chaos_counts,
        "chaotic_fraction": rational_report(Fraction(chaotic, len(exhausted))) if exhausted else None,
        "records": records,
    }


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def report_csv(report: dict) -> str:
    lines = ["id,outcome,class,chaos,steps"]
    for r in report["records"]:
        lines.append(f"{r['id']},{r['outcome']},{r['class']},{r['chaos']},{r['steps']}")
    return "\n".join(lines) + "\n"
