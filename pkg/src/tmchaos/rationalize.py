"""Gödel numbering of words and their rationalization into [0, 1).

A word ``w = w_{n-1} ... w_0`` over an alphabet of size ``b`` is read as the
base-``b`` integer ``sum g(w_k) b^k`` (leftmost symbol most significant) and
rationalized as that integer over ``b^n``, i.e. the fraction ``0.w_{n-1}...w_0``.
All arithmetic is exact (:class:`fractions.Fraction`).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

BLANK = "_"


class RationalizationError(ValueError):
    pass


@dataclass(frozen=True)
class AlphabetMap:
    """Bijection between symbols and base-``b`` digits."""

    symbols: tuple[str, ...]
    digit_of: Mapping[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(self.symbols) < 2:
            raise ValueError("an alphabet map needs at least two symbols (base >= 2)")
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError(f"duplicate symbols in alphabet map: {self.symbols}")
        object.__setattr__(self, "digit_of", {s: d for d, s in enumerate(self.symbols)})

    @property
    def base(self) -> int:
        return len(self.symbols)

    def symbol_of(self, digit: int) -> str:
        return self.symbols[digit]

    @classmethod
    def from_digits(cls, digit_of: Mapping[str, int]) -> "AlphabetMap":
        """Build from an explicit ``symbol -> digit`` bijection onto ``0..b-1``."""
        b = len(digit_of)
        if sorted(digit_of.values()) != list(range(b)):
            raise ValueError("digits must be exactly 0..b-1")
        ordered = sorted(digit_of, key=digit_of.__getitem__)
        return cls(tuple(ordered))

    @classmethod
    def for_tape(cls, input_alphabet: Sequence[str], tape_alphabet: Sequence[str],
                 blank: str = BLANK) -> "AlphabetMap":
        """Default map for a machine: input symbols first (in order), then the
        remaining non-blank tape symbols, and the blank on the highest digit."""
        order = [s for s in input_alphabet if s != blank]
        order += [s for s in tape_alphabet if s != blank and s not in order]
        order.append(blank)
        return cls(tuple(order))


def _digits(w: Iterable[str], amap: AlphabetMap) -> list[int]:
    digits = []
    for pos, sym in enumerate(w):
        d = amap.digit_of.get(sym)
        if d is None:
            raise RationalizationError(f"symbol {sym!r} at position {pos} is not in the alphabet map")
        digits.append(d)
    return digits


def godel_of_digits(digits: Sequence[int], base: int) -> int:
    value = 0
    for d in digits:
        value = value * base + d
    return value


def godelize(w: Sequence[str], amap: AlphabetMap) -> int:
    """Gödel number of a non-empty word."""
    if len(w) == 0:
        raise RationalizationError("Gödelization is defined for non-empty words only")
    return godel_of_digits(_digits(w, amap), amap.base)


def rationalize(w: Sequence[str], amap: AlphabetMap) -> Fraction:
    """``godelize(w) / b**len(w)``; the empty word maps to 0."""
    if len(w) == 0:
        return Fraction(0)
    return Fraction(godelize(w, amap), amap.base ** len(w))


def derationalize(x: Fraction, n: int, amap: AlphabetMap) -> str:
    """The unique word of length ``n`` whose rationalization is ``x``."""
    x = Fraction(x)
    if n < 0:
        raise ValueError("length must be non-negative")
    b = amap.base
    scaled = x * b ** n
    if scaled.denominator != 1:
        raise RationalizationError(
            f"{x} is not of the form k/{b}^{n}: residue {scaled - (scaled.numerator // scaled.denominator)}"
            f" remains after scaling by {b}^{n}")
    k = scaled.numerator
    if not 0 <= k < b ** n:
        raise RationalizationError(f"{x} lies outside [0, 1) and has no length-{n} word")
    out = []
    for _ in range(n):
        k, d = divmod(k, b)
        out.append(amap.symbols[d])
    return "".join(reversed(out))


def tape_extent(tape: Sequence[str], head: int, blank: str = BLANK) -> int:
    """Number of leading cells that take part in rationalization.

    The extent covers every non-blank cell and every cell strictly left of the
    head; an all-blank tape with the head on cell 0 has extent 0.
    """
    rightmost = len(tape) - 1
    while rightmost >= 0 and tape[rightmost] == blank:
        rightmost -= 1
    return max(rightmost + 1, head)


def rationalize_config(config, amap: AlphabetMap, blank: str = BLANK) -> Fraction:
    """Rationalize the tape of a machine configuration (see :func:`tape_extent`)."""
    n = tape_extent(config.tape, config.head, blank)
    cells = list(config.tape[:n]) + [blank] * (n - len(config.tape))
    return rationalize(cells, amap)


def format_rational(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def parse_rational(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational number: {text!r}") from exc


def rational_report(x: Fraction) -> dict[str, str]:
    """Exact ``num/den`` string plus a 17-significant-digit float."""
    return {"exact": format_rational(x), "float": format(float(x), ".17g")}
