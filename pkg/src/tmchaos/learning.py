"""Learning iterations ``c_{n+1} = L(c_n)`` over rationalized code words.

A code is a pair ``(value, length)``: the rational alone does not fix the
word, since trailing zero digits change the length but not the value.
Functionals are compositions of a few word primitives.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .machine import UNIVERSAL_MAP, UNIVERSAL_SYMBOLS
from .orbits import (DEFAULT_EPS, DEFAULT_HORIZON, DEFAULT_TAIL, MIN_CLASSIFY_LENGTH,
                     Orbit, RationalSequence, classify, detect_sensitivity)
from .rationalize import (RationalizationError, derationalize, format_rational,
                          rationalize)

SOURCE = "learning iteration"
NOT_REPRESENTABLE = "limit not representable at any finite code length"


class FunctionalError(ValueError):
    pass


@dataclass(frozen=True)
class Code:
    value: Fraction
    length: int

    @classmethod
    def of(cls, word: str) -> "Code":
        check_code_word(word)
        return cls(rationalize(word, UNIVERSAL_MAP), len(word))

    def word(self) -> str:
        return derationalize(self.value, self.length, UNIVERSAL_MAP)


def check_code_word(word: str) -> None:
    if not word:
        raise FunctionalError("code words are non-empty")
    bad = sorted({c for c in word if c not in UNIVERSAL_SYMBOLS})
    if bad:
        raise FunctionalError(f"symbols {bad} are outside the code alphabet {UNIVERSAL_SYMBOLS}")


@dataclass(frozen=True)
class Op:
    kind: str  # append | reverse | append_parity
    digit: str | None = None
    of: str | None = None  # for append_parity: length | digit_sum

    def __post_init__(self) -> None:
        if self.kind == "append":
            if self.digit is None or self.digit not in UNIVERSAL_SYMBOLS:
                raise FunctionalError(f"append needs a digit from {UNIVERSAL_SYMBOLS}")
        elif self.kind == "append_parity":
            if self.of not in ("length", "digit_sum"):
                raise FunctionalError("append_parity needs of = 'length' or 'digit_sum'")
        elif self.kind != "reverse":
            raise FunctionalError(f"unknown op kind {self.kind!r}")

    def __call__(self, word: str) -> str:
        if self.kind == "append":
            return word + self.digit
        if self.kind == "reverse":
            return word[::-1]
        if self.of == "length":
            p = len(word) % 2
        else:
            p = sum(UNIVERSAL_MAP.digit_of[c] for c in word) % 2
        return word + str(p)

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.digit is not None:
            d["digit"] = self.digit
        if self.of is not None:
            d["of"] = self.of
        return d


@dataclass(frozen=True)
class Functional:
    name: str
    ops: tuple[Op, ...]

    def apply_word(self, word: str) -> str:
        for op in self.ops:
            word = op(word)
        return word

    def apply(self, code: Code) -> Code:
        word = self.apply_word(code.word())
        check_code_word(word)
        return Code.of(word)

    def to_dict(self) -> dict:
        return {"name": self.name, "ops": [op.to_dict() for op in self.ops]}

    @classmethod
    def from_dict(cls, doc: dict) -> "Functional":
        if not isinstance(doc, dict) or "ops" not in doc:
            raise FunctionalError("functional description needs an 'ops' list")
        unknown = set(doc) - {"name", "ops"}
        if unknown:
            raise FunctionalError(f"unknown keys {sorted(unknown)}")
        ops = []
        for k, raw in enumerate(doc["ops"]):
            extra = set(raw) - {"kind", "digit", "of"}
            if extra:
                raise FunctionalError(f"op {k}: unknown keys {sorted(extra)}")
            try:
                ops.append(Op(raw.get("kind"), raw.get("digit"), raw.get("of")))
            except FunctionalError as exc:
                raise FunctionalError(f"op {k}: {exc}") from None
        return cls(str(doc.get("name", "functional")), tuple(ops))


IDENTITY = Functional("identity", ())
APPEND = Functional("append", (Op("append", digit="1"),))
SCRAMBLE = Functional("scramble", (Op("reverse"), Op("append_parity", of="length")))
BUILTINS = {f.name: f for f in (IDENTITY, APPEND, SCRAMBLE)}


def append_functional(digit: str = "1") -> Functional:
    return Functional("append", (Op("append", digit=digit),))


def load_functional(path) -> Functional:
    return Functional.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class CodeOrbit:
    orbit: Orbit
    decoded_lengths: tuple[int, ...]
    functional: str

    def __len__(self) -> int:
        return len(self.orbit)

    def codes(self) -> list[Code]:
        return [Code(v, n) for v, n in zip(self.orbit.values, self.decoded_lengths)]


def iterate(functional: Functional, seed_code: str, steps: int) -> CodeOrbit:
    if steps < 1:
        raise ValueError("steps must be positive")
    code = Code.of(seed_code)
    values, lengths = [code.value], [code.length]
    for k in range(1, steps + 1):
        try:
            code = functional.apply(code)
        except (FunctionalError, RationalizationError) as exc:
            raise FunctionalError(f"step {k}: output does not decode as a code word: {exc}") from exc
        values.append(code.value)
        lengths.append(code.length)
    orbit = Orbit(RationalSequence.from_values(values), SOURCE, truncated=True)
    return CodeOrbit(orbit, tuple(lengths), functional.name)


def _chaos(orbit: Orbit, eps, horizon: int, start: int, profile) -> dict:
    try:
        verdict = detect_sensitivity(orbit, eps, horizon, start=start, profile=profile)
    except ValueError as exc:
        return {"kind": "inconclusive", "reason": str(exc)}
    out = {"kind": verdict.kind, "start": start}
    if verdict.witness is not None:
        out["witness"] = list(verdict.witness)
        out["divergence_step"] = verdict.divergence_step
    if verdict.reason:
        out["reason"] = verdict.reason
    return out


def limit_report(code_orbit: CodeOrbit, eps=DEFAULT_EPS, tail_fraction=DEFAULT_TAIL,
                 horizon: int = DEFAULT_HORIZON) -> dict:
    orbit = code_orbit.orbit
    if len(orbit) < MIN_CLASSIFY_LENGTH:
        raise ValueError(f"need at least {MIN_CLASSIFY_LENGTH} values")
    cls = classify(orbit, eps, tail_fraction)
    start = orbit.tail_start(tail_fraction)
    # the whole orbit is scanned; the tail verdict is reported alongside
    chaos = _chaos(orbit, eps, horizon, 0, cls.profile)
    tail_chaos = _chaos(orbit, eps, horizon, start, cls.profile)
    lengths = code_orbit.decoded_lengths
    growing = all(b > a for a, b in zip(lengths, lengths[1:]))
    report = {
        "functional": code_orbit.functional,
        "class": cls.kind,
        "converged": cls.kind == "cauchy",
        "chaos": chaos,
        "tail_chaos": tail_chaos,
        "lengths": {"first": lengths[0], "last": lengths[-1],
                    "strictly_increasing": growing,
                    "constant": len(set(lengths)) == 1},
        "tags": [],
    }
    if cls.reason:
        report["reason"] = cls.reason
    if cls.kind == "cauchy":
        report["limit"] = {"exact": format_rational(cls.limit_estimate),
                           "float": format(float(cls.limit_estimate), ".17g")}
        report["representable"] = not growing
        if growing:
            report["tags"].append(NOT_REPRESENTABLE)
    if cls.profile is not None:
        report["accumulation_points"] = [format(float(a), ".17g")
                                         for a in cls.profile.accumulation_points]
    return report


def words(code_orbit: CodeOrbit) -> Sequence[str]:
    return [c.word() for c in code_orbit.codes()]
