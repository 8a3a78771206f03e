"""Single-tape deterministic Turing machines on a one-sided tape.

Machines use a line-oriented text format::

    # comments start with '#'
    states: q0 acc rej
    alphabet: 1
    tape_alphabet: 1 _
    start: q0
    accept: acc
    reject: rej
    delta: q0 _ -> acc 1 R
    delta: q0 1 -> acc 1 R

The blank is always ``_``.  Moving left on cell 0 leaves the head on cell 0.
Accept and reject may name the same state.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from . import kernels
from .rationalize import BLANK, AlphabetMap

MOVES = ("L", "R")


class MachineError(ValueError):
    """Semantic problem with a machine definition or its input."""


class MachineSyntaxError(MachineError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class HaltedError(RuntimeError):
    """``step`` was called on a configuration in a halting state."""


class Transition(NamedTuple):
    state: str
    symbol: str
    move: str


@dataclass(frozen=True)
class TuringMachine:
    states: tuple[str, ...]
    input_alphabet: tuple[str, ...]
    tape_alphabet: tuple[str, ...]
    delta: Mapping[tuple[str, str], Transition]
    start: str
    accept: str
    reject: str
    blank: str = BLANK

    def __post_init__(self) -> None:
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "input_alphabet", tuple(self.input_alphabet))
        object.__setattr__(self, "tape_alphabet", tuple(self.tape_alphabet))
        object.__setattr__(self, "delta", dict(self.delta))
        self._validate()

    def _validate(self) -> None:
        states = set(self.states)
        gamma = set(self.tape_alphabet)
        if len(states) != len(self.states):
            raise MachineError("duplicate state identifiers")
        if len(gamma) != len(self.tape_alphabet):
            raise MachineError("duplicate tape symbols")
        if len(set(self.input_alphabet)) != len(self.input_alphabet):
            raise MachineError("duplicate input symbols")
        for sym in self.tape_alphabet:
            if len(sym) != 1 or sym.isspace():
                raise MachineError(f"symbol {sym!r} must be a single non-whitespace character")
        if self.blank not in gamma:
            raise MachineError(f"blank {self.blank!r} missing from the tape alphabet")
        if self.blank in self.input_alphabet:
            raise MachineError(f"blank {self.blank!r} must not be an input symbol")
        for sym in self.input_alphabet:
            if sym not in gamma:
                raise MachineError(f"input symbol {sym!r} is not in the tape alphabet")
        if len(gamma) > 255:
            raise MachineError("at most 255 tape symbols are supported")
        for role in ("start", "accept", "reject"):
            q = getattr(self, role)
            if q not in states:
                raise MachineError(f"{role} state {q!r} is not declared in states")
        halting = {self.accept, self.reject}
        for (q, sym), (q2, sym2, mv) in self.delta.items():
            if q not in states:
                raise MachineError(f"transition ({q},{sym!r}) uses unknown state {q!r}")
            if q in halting:
                raise MachineError(f"halting state {q!r} must not have transitions, found ({q},{sym!r})")
            if sym not in gamma:
                raise MachineError(f"transition ({q},{sym!r}) reads unknown symbol {sym!r}")
            if q2 not in states:
                raise MachineError(f"transition ({q},{sym!r}) targets unknown state {q2!r}")
            if sym2 not in gamma:
                raise MachineError(f"transition ({q},{sym!r}) writes unknown symbol {sym2!r}")
            if mv not in MOVES:
                raise MachineError(f"transition ({q},{sym!r}) has move {mv!r}, expected L or R")
        for q in self.states:
            if q in halting:
                continue
            for sym in self.tape_alphabet:
                if (q, sym) not in self.delta:
                    raise MachineError(f"missing transition for ({q},{sym!r})")

    @property
    def halting_states(self) -> frozenset[str]:
        return frozenset((self.accept, self.reject))

    def alphabet_map(self) -> AlphabetMap:
        """Default Gödel map: input symbols first, blank on the top digit."""
        return AlphabetMap.for_tape(self.input_alphabet, self.tape_alphabet, self.blank)

    @cached_property
    def kernel_symbols(self) -> tuple[str, ...]:
        # kernel symbol 0 is always the blank
        return (self.blank,) + tuple(s for s in self.tape_alphabet if s != self.blank)

    @cached_property
    def compiled(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        sidx = {q: i for i, q in enumerate(self.states)}
        gidx = {s: i for i, s in enumerate(self.kernel_symbols)}
        shape = (len(self.states), len(self.kernel_symbols))
        nxt = np.zeros(shape, np.int64)
        wrt = np.zeros(shape, np.int64)
        mov = np.zeros(shape, np.int64)
        for (q, sym), (q2, sym2, mv) in self.delta.items():
            nxt[sidx[q], gidx[sym]] = sidx[q2]
            wrt[sidx[q], gidx[sym]] = gidx[sym2]
            mov[sidx[q], gidx[sym]] = MOVES.index(mv)
        halt = np.zeros(len(self.states), np.int64)
        halt[sidx[self.reject]] = 2
        halt[sidx[self.accept]] = 1
        for a in (nxt, wrt, mov, halt):
            a.setflags(write=False)
        return nxt, wrt, mov, halt

    def check_input(self, word: str) -> None:
        allowed = set(self.input_alphabet)
        for pos, sym in enumerate(word):
            if sym not in allowed:
                raise MachineError(f"input symbol {sym!r} at position {pos} is not in the input alphabet")


@dataclass(frozen=True)
class Configuration:
    tape: tuple[str, ...]
    head: int
    state: str
    steps: int = 0

    def __post_init__(self) -> None:
        if self.head < 0:
            raise ValueError("head position must be non-negative")
        tape = tuple(self.tape)
        if len(tape) < self.head + 1:
            tape = tape + (BLANK,) * (self.head + 1 - len(tape))
        object.__setattr__(self, "tape", tape)

    def content(self, blank: str = BLANK) -> tuple[str, ...]:
        """Tape with trailing blanks removed."""
        tape = list(self.tape)
        while tape and tape[-1] == blank:
            tape.pop()
        return tuple(tape)

    def key(self, blank: str = BLANK) -> tuple[str, int, tuple[str, ...]]:
        """Canonical identity: state, head and non-blank tape content."""
        return (self.state, self.head, self.content(blank))

    def same_as(self, other: "Configuration") -> bool:
        return self.key() == other.key()


def initial_configuration(machine: TuringMachine, word: str = "") -> Configuration:
    machine.check_input(word)
    return Configuration(tuple(word) or (machine.blank,), 0, machine.start, 0)


def step(config: Configuration, machine: TuringMachine) -> Configuration:
    """Apply one transition.  Moving left on cell 0 keeps the head there."""
    if config.state in machine.halting_states:
        raise HaltedError(f"configuration is halted in state {config.state!r}")
    tape = list(config.tape)
    q2, sym2, mv = machine.delta[(config.state, tape[config.head])]
    tape[config.head] = sym2
    head = config.head + 1 if mv == "R" else max(config.head - 1, 0)
    return Configuration(tuple(tape), head, q2, config.steps + 1)


@dataclass(frozen=True)
class RunOutcome:
    kind: str  # "halted" | "looped" | "fuel_exhausted"
    steps: int
    accepting: bool | None = None
    preperiod: int | None = None
    period: int | None = None
    trace: tuple[Configuration, ...] | None = field(default=None, compare=False)

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind, "steps": self.steps}
        if self.kind == "halted":
            out["accepting"] = self.accepting
        if self.kind == "looped":
            out["preperiod"] = self.preperiod
            out["period"] = self.period
        return out


@dataclass(frozen=True)
class Execution:
    """Raw record of a run, one entry per step (index 0 is the start)."""

    machine: TuringMachine
    initial: np.ndarray  # kernel symbols of the initial tape
    outcome: RunOutcome
    heads: np.ndarray
    states: np.ndarray
    wcell: np.ndarray
    wold: np.ndarray
    wnew: np.ndarray

    def configurations(self) -> Iterable[Configuration]:
        syms = self.machine.kernel_symbols
        tape = [int(v) for v in self.initial]
        used = max(len(tape), 1)
        for t in range(len(self.heads)):
            if t:
                cell = int(self.wcell[t])
                if cell >= len(tape):
                    tape.extend([0] * (cell + 1 - len(tape)))
                tape[cell] = int(self.wnew[t])
            tape.extend([0] * (int(self.heads[t]) + 1 - len(tape)))
            head = int(self.heads[t])
            used = max(used, head + 1)
            yield Configuration(tuple(syms[v] for v in tape[:used]), head,
                                self.machine.states[int(self.states[t])], t)


def execute(machine: TuringMachine, word: str, fuel: int, detect_loops: bool = True) -> Execution:
    if fuel < 1:
        raise ValueError("fuel must be a positive integer")
    machine.check_input(word)
    nxt, wrt, mov, halt = machine.compiled
    gidx = {s: i for i, s in enumerate(machine.kernel_symbols)}
    initial = np.array([gidx[s] for s in word], np.int64)
    tape = np.zeros(len(word) + fuel + 2, np.int64)
    tape[: len(word)] = initial
    start = machine.states.index(machine.start)
    if halt[start]:
        zero = np.zeros(1, np.int64)
        zero_state = np.full(1, start, np.int64)
        outcome = RunOutcome("halted", 0, accepting=bool(halt[start] == 1))
        return Execution(machine, initial, outcome, zero, zero_state, zero, zero, zero)
    kind, steps, accepting, pre, per, heads, states, wcell, wold, wnew = kernels.tm_run(
        nxt, wrt, mov, halt, tape, start, fuel, detect_loops)
    if kind == kernels.RUN_HALTED:
        outcome = RunOutcome("halted", steps, accepting=accepting)
    elif kind == kernels.RUN_LOOPED:
        outcome = RunOutcome("looped", steps, preperiod=pre, period=per)
    else:
        outcome = RunOutcome("fuel_exhausted", steps)
    return Execution(machine, initial, outcome, heads, states, wcell, wold, wnew)


def run(machine: TuringMachine, word: str = "", fuel: int = 10_000,
        detect_loops: bool = True, trace: bool = False) -> RunOutcome:
    """Run from the initial configuration until halt, first repeated
    configuration (when ``detect_loops``) or ``fuel`` steps."""
    ex = execute(machine, word, fuel, detect_loops)
    if not trace:
        return ex.outcome
    o = ex.outcome
    return RunOutcome(o.kind, o.steps, o.accepting, o.preperiod, o.period,
                      trace=tuple(ex.configurations()))


###############################################################################
# text format
###############################################################################

_HEADER_KEYS = ("states", "alphabet", "tape_alphabet", "start", "accept", "reject")
_DELTA_RE = re.compile(r"^(\S+)\s+(\S+)\s*->\s*(\S+)\s+(\S+)\s+(\S+)\s*$")


def parse_machine(text: str) -> TuringMachine:
    headers: dict[str, tuple[list[str], int]] = {}
    delta: dict[tuple[str, str], Transition] = {}
    delta_lines: dict[tuple[str, str], int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip())
        if ":" not in line:
            raise MachineSyntaxError("expected '<key>: ...'", lineno, indent + 1)
        key, _, rest = line.partition(":")
        key = key.strip()
        value_col = len(key) + indent + 2
        if key == "delta":
            m = _DELTA_RE.match(rest.strip())
            if m is None:
                raise MachineSyntaxError(
                    "expected 'delta: <state> <sym> -> <state> <sym> <L|R>'", lineno, value_col)
            q, s, q2, s2, mv = m.groups()
            for sym in (s, s2):
                if len(sym) != 1:
                    col = raw.find(sym, value_col - 1) + 1
                    raise MachineSyntaxError(f"symbol {sym!r} must be a single character", lineno, col)
            if mv not in MOVES:
                col = raw.rfind(mv) + 1
                raise MachineSyntaxError(f"move must be L or R, got {mv!r}", lineno, col)
            if (q, s) in delta:
                raise MachineSyntaxError(
                    f"duplicate transition for ({q},{s!r}), first given on line {delta_lines[(q, s)]}",
                    lineno, value_col)
            delta[(q, s)] = Transition(q2, s2, mv)
            delta_lines[(q, s)] = lineno
        elif key in _HEADER_KEYS:
            if key in headers:
                raise MachineSyntaxError(f"duplicate '{key}' line", lineno, indent + 1)
            tokens = rest.split()
            if key in ("alphabet", "tape_alphabet"):
                for tok in tokens:
                    if len(tok) != 1:
                        col = raw.find(tok, value_col - 1) + 1
                        raise MachineSyntaxError(f"symbol {tok!r} must be a single character", lineno, col)
            if key in ("start", "accept", "reject") and len(tokens) != 1:
                raise MachineSyntaxError(f"'{key}' takes exactly one state", lineno, value_col)
            if key == "states" and not tokens:
                raise MachineSyntaxError("'states' needs at least one state", lineno, value_col)
            headers[key] = (tokens, lineno)
        else:
            raise MachineSyntaxError(f"unknown key {key!r}", lineno, indent + 1)
    missing = [k for k in _HEADER_KEYS if k not in headers]
    if missing:
        raise MachineSyntaxError(f"missing required line(s): {', '.join(missing)}",
                                 len(text.splitlines()) + 1, 1)
    return TuringMachine(
        states=tuple(headers["states"][0]),
        input_alphabet=tuple(headers["alphabet"][0]),
        tape_alphabet=tuple(headers["tape_alphabet"][0]),
        delta=delta,
        start=headers["start"][0][0],
        accept=headers["accept"][0][0],
        reject=headers["reject"][0][0],
    )


def format_machine(machine: TuringMachine) -> str:
    lines = [
        f"states: {' '.join(machine.states)}",
        f"alphabet: {' '.join(machine.input_alphabet)}".rstrip(),
        f"tape_alphabet: {' '.join(machine.tape_alphabet)}",
        f"start: {machine.start}",
        f"accept: {machine.accept}",
        f"reject: {machine.reject}",
    ]
    for q in machine.states:
        for s in machine.tape_alphabet:
            if (q, s) in machine.delta:
                q2, s2, mv = machine.delta[(q, s)]
                lines.append(f"delta: {q} {s} -> {q2} {s2} {mv}")
    return "\n".join(lines) + "\n"


def load_machine(path) -> TuringMachine:
    with open(path, encoding="utf-8") as fh:
        return parse_machine(fh.read())


###############################################################################
# encoding over a fixed universal alphabet
###############################################################################
#
# A code word is a sequence of naturals, each written in binary (most
# significant bit first) and terminated by '#':
#
#   |Q|  |Gamma \ {blank}|  codepoints...  |Sigma|  sigma indices...
#   start accept reject  then for each running state (declared order) and each
#   tape symbol (blank first, then declared order): next, write, move.
#
# The header fixes how many numbers follow, so codes are self-delimiting.

UNIVERSAL_SYMBOLS = ("0", "1", "#")
UNIVERSAL_MAP = AlphabetMap(UNIVERSAL_SYMBOLS)


def _nat(n: int) -> str:
    return format(n, "b") + "#"


def encode_machine(machine: TuringMachine) -> str:
    sidx = {q: i for i, q in enumerate(machine.states)}
    syms = machine.kernel_symbols
    gidx = {s: i for i, s in enumerate(syms)}
    nums = [len(machine.states), len(syms) - 1]
    nums += [ord(s) for s in syms[1:]]
    nums.append(len(machine.input_alphabet))
    nums += [gidx[s] for s in machine.input_alphabet]
    nums += [sidx[machine.start], sidx[machine.accept], sidx[machine.reject]]
    for q in machine.states:
        if q in machine.halting_states:
            continue
        for s in syms:
            q2, s2, mv = machine.delta[(q, s)]
            nums += [sidx[q2], gidx[s2], MOVES.index(mv)]
    return "".join(_nat(n) for n in nums)


def _read_nats(word: str) -> Iterable[int]:
    pos = 0
    while pos < len(word):
        end = word.find("#", pos)
        if end == -1 or end == pos:
            raise MachineError(f"malformed code word at position {pos}")
        chunk = word[pos:end]
        if set(chunk) - {"0", "1"}:
            raise MachineError(f"malformed number {chunk!r} at position {pos}")
        yield int(chunk, 2)
        pos = end + 1


def decode_machine(word: str) -> TuringMachine:
    """Inverse of :func:`encode_machine`; states come back as ``q0, q1, ...``."""
    it = iter(_read_nats(word))
    try:
        n_states = next(it)
        n_syms = next(it)
        syms = (BLANK,) + tuple(chr(next(it)) for _ in range(n_syms))
        n_sigma = next(it)
        sigma = tuple(syms[next(it)] for _ in range(n_sigma))
        names = tuple(f"q{i}" for i in range(n_states))
        start, accept, reject = (names[next(it)] for _ in range(3))
        delta = {}
        for q in names:
            if q in (accept, reject):
                continue
            for s in syms:
                q2, s2, mv = next(it), next(it), next(it)
                delta[(q, s)] = Transition(names[q2], syms[s2], MOVES[mv])
    except (StopIteration, IndexError, ValueError) as exc:
        raise MachineError("code word is truncated or inconsistent") from exc
    if next(it, None) is not None:
        raise MachineError("trailing data after machine code")
    tape = tuple(s for s in syms if s != BLANK) + (BLANK,)
    return TuringMachine(names, sigma, tape, delta, start, accept, reject)


def equivalent_up_to_renaming(a: TuringMachine, b: TuringMachine) -> bool:
    """Equal machines once states are matched by declaration order."""
    if len(a.states) != len(b.states):
        return False
    rename = dict(zip(a.states, b.states))
    if (set(a.tape_alphabet) != set(b.tape_alphabet)
            or set(a.input_alphabet) != set(b.input_alphabet)
            or (rename[a.start], rename[a.accept], rename[a.reject]) != (b.start, b.accept, b.reject)):
        return False
    mapped = {(rename[q], s): Transition(rename[q2], s2, mv) for (q, s), (q2, s2, mv) in a.delta.items()}
    return mapped == dict(b.delta)
