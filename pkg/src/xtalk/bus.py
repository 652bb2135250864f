"""Bus description, transition patterns and the per-wire crosstalk classifier.

Wires are numbered from 1 to m throughout the package, as in the
crosstalk literature; Python sequences holding per-wire data are of course
indexed from 0, so ``deltas[k - 1]`` is the transition of wire ``k``.

All quantities are SI (ohm, farad, metre, second).  Voltages are normalised
to the supply, so a rising transition goes 0 -> 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Sequence

from .errors import InvalidPatternError, InvalidSpecError, NoTransitionError, WireIndexError

RISE, STEADY, FALL = 1, 0, -1

_SYMBOL_TO_DELTA = {"u": RISE, "↑": RISE, "d": FALL, "↓": FALL, "-": STEADY}
_DELTA_TO_SYMBOL = {RISE: "u", FALL: "d", STEADY: "-"}
_DELTA_TO_ARROW = {RISE: "↑", FALL: "↓", STEADY: "-"}


@dataclass(frozen=True)
class BusSpec:
    """Electrical description of a uniformly coupled m-wire bus.

    ``r``, ``c`` and ``cc`` are per unit length; ``driver_resistance`` is the
    linearised output resistance R_S of every driver and ``load_capacitance``
    the receiver input capacitance C_L at every far end.
    """

    wire_count: int
    r: float
    c: float
    cc: float
    length: float
    driver_resistance: float = 0.0
    load_capacitance: float = 0.0
    segments: int = 100

    def __post_init__(self):
        if int(self.wire_count) != self.wire_count or self.wire_count < 1:
            raise InvalidSpecError(f"wire_count must be a positive integer, got {self.wire_count}")
        if int(self.segments) != self.segments or self.segments < 1:
            raise InvalidSpecError(f"segments must be a positive integer, got {self.segments}")
        for name in ("r", "c", "length"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise InvalidSpecError(f"{name} must be positive and finite, got {value}")
        for name in ("cc", "driver_resistance", "load_capacitance"):
            value = getattr(self, name)
            if not (value >= 0 and math.isfinite(value)):
                raise InvalidSpecError(f"{name} must be non-negative and finite, got {value}")

    @property
    def coupling_factor(self) -> float:
        """lambda = cc / c."""
        return self.cc / self.c

    @property
    def total_resistance(self) -> float:
        return self.r * self.length

    @property
    def total_capacitance(self) -> float:
        return self.c * self.length

    @property
    def tau0_intrinsic(self) -> float:
        """r c L^2 / 2, the distributed-line time scale."""
        return self.r * self.c * self.length ** 2 / 2

    @property
    def tau(self) -> float:
        """Time constant of the slowest single-line mode, (8 / pi^2) * tau0_intrinsic."""
        return 8 / math.pi ** 2 * self.tau0_intrinsic

    @property
    def tau0_baseline(self) -> float:
        """Lumped Elmore delay (R_S + R/2) * C used by the baseline per-class model."""
        return (self.driver_resistance + self.total_resistance / 2) * self.total_capacitance

    def with_(self, **changes) -> "BusSpec":
        values = {f: getattr(self, f) for f in self.__dataclass_fields__}
        values.update(changes)
        return BusSpec(**values)


class CrosstalkClass(IntEnum):
    """Class iC: the wire's normalised delay factor is (1 + i*lambda)."""

    C0 = 0
    C1 = 1
    C2 = 2
    C3 = 3
    C4 = 4

    def __str__(self) -> str:
        return f"{int(self)}C"

    @classmethod
    def parse(cls, text) -> "CrosstalkClass":
        if isinstance(text, int):
            return cls(text)
        s = str(text).strip().upper()
        if s.endswith("C"):
            s = s[:-1]
        try:
            return cls(int(s))
        except ValueError:
            raise ValueError(f"not a crosstalk class: {text!r}") from None


@dataclass(frozen=True)
class TransitionPattern:
    """Initial and final logic state of every wire."""

    initial: tuple[int, ...]
    final: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "initial", tuple(int(b) for b in self.initial))
        object.__setattr__(self, "final", tuple(int(b) for b in self.final))
        if len(self.initial) != len(self.final):
            raise InvalidPatternError(
                f"initial has {len(self.initial)} wires but final has {len(self.final)}")
        if not self.initial:
            raise InvalidPatternError("empty pattern")
        if any(b not in (0, 1) for b in self.initial + self.final):
            raise InvalidPatternError("bits must be 0 or 1")

    @property
    def width(self) -> int:
        return len(self.initial)

    @property
    def deltas(self) -> tuple[int, ...]:
        return delta_of(self)

    @classmethod
    def from_deltas(cls, deltas: Sequence[int]) -> "TransitionPattern":
        """Falling wires start at 1, rising wires at 0, steady wires sit at 0."""
        check_deltas(deltas)
        initial = tuple(1 if d == FALL else 0 for d in deltas)
        final = tuple(1 if d == RISE else 0 for d in deltas)
        return cls(initial, final)

    @classmethod
    def parse(cls, text: str) -> "TransitionPattern":
        """Accept ``"ud-u"`` / ``"↑↓-↑"`` or explicit bit strings ``"101>010"``."""
        s = "".join(text.split())
        if ">" in s:
            left, _, right = s.partition(">")
            if not left or set(left + right) - {"0", "1"}:
                raise InvalidPatternError(f"malformed bit-string pattern {text!r}")
            return cls(tuple(map(int, left)), tuple(map(int, right)))
        s = "".join(ch for ch in s if ch not in "(), ")
        try:
            deltas = [_SYMBOL_TO_DELTA[ch] for ch in s.lower()]
        except KeyError as exc:
            raise InvalidPatternError(f"unknown transition symbol {exc.args[0]!r} in {text!r}") from None
        if not deltas:
            raise InvalidPatternError("empty pattern")
        return cls.from_deltas(deltas)

    def __str__(self) -> str:
        return format_deltas(self.deltas)

    def arrows(self) -> str:
        return "".join(_DELTA_TO_ARROW[d] for d in self.deltas)

    def bits(self) -> str:
        return "".join(map(str, self.initial)) + ">" + "".join(map(str, self.final))

    def complemented(self) -> "TransitionPattern":
        return TransitionPattern(tuple(1 - b for b in self.initial), tuple(1 - b for b in self.final))

    def mirrored(self) -> "TransitionPattern":
        return TransitionPattern(self.initial[::-1], self.final[::-1])


@dataclass(frozen=True)
class DelayEstimate:
    wire: int
    value: float
    source: str
    cls: CrosstalkClass = field(default=CrosstalkClass.C0)


def format_deltas(deltas: Sequence[int]) -> str:
    return "".join(_DELTA_TO_SYMBOL[int(d)] for d in deltas)


def parse_deltas(text: str) -> tuple[int, ...]:
    return TransitionPattern.parse(text).deltas


def check_deltas(deltas: Sequence[int]) -> tuple[int, ...]:
    out = tuple(int(d) for d in deltas)
    if not out:
        raise InvalidPatternError("empty delta vector")
    if any(d not in (-1, 0, 1) for d in out):
        raise InvalidPatternError(f"deltas must be in {{-1, 0, +1}}, got {out}")
    return out


def as_deltas(pattern) -> tuple[int, ...]:
    """Coerce a TransitionPattern, pattern string or delta sequence into deltas."""
    if isinstance(pattern, TransitionPattern):
        return pattern.deltas
    if isinstance(pattern, str):
        return parse_deltas(pattern)
    return check_deltas(pattern)


def delta_of(pattern: TransitionPattern) -> tuple[int, ...]:
    if len(pattern.initial) != len(pattern.final):
        raise InvalidPatternError("length mismatch between initial and final")
    return tuple(f - i for i, f in zip(pattern.initial, pattern.final))


def _check_wire(m: int, k: int) -> None:
    if not 1 <= k <= m:
        raise WireIndexError(f"wire {k} out of range 1..{m}")


def classify_wire(delta, k: int) -> CrosstalkClass:
    """Class of wire ``k`` (1-based) under the nearest-neighbour delay model.

    The class index is the coefficient of lambda in the delay factor and does
    not depend on the value of lambda.
    """
    d = as_deltas(delta)
    m = len(d)
    _check_wire(m, k)
    dk = d[k - 1]
    if dk == 0 or m == 1:
        return CrosstalkClass.C0
    if k == 1:
        return CrosstalkClass(1 - dk * d[1])
    if k == m:
        return CrosstalkClass(1 - dk * d[m - 2])
    return CrosstalkClass(2 - dk * (d[k - 2] + d[k]))


def classify_bus(delta) -> tuple[tuple[CrosstalkClass, ...], CrosstalkClass]:
    d = as_deltas(delta)
    classes = tuple(classify_wire(d, k) for k in range(1, len(d) + 1))
    return classes, max(classes)


def baseline_delay(delta, k: int, spec: BusSpec) -> DelayEstimate:
    """Prior-work estimate (1 + i*lambda) * tau0_baseline for wire ``k``."""
    d = as_deltas(delta)
    cls = classify_wire(d, k)
    if d[k - 1] == 0:
        return DelayEstimate(k, 0.0, "baseline", CrosstalkClass.C0)
    value = (1 + int(cls) * spec.coupling_factor) * spec.tau0_baseline
    return DelayEstimate(k, value, "baseline", cls)


def baseline_class_delay(cls, spec: BusSpec) -> float:
    return (1 + int(CrosstalkClass.parse(cls)) * spec.coupling_factor) * spec.tau0_baseline


def normalize_rising(pattern: TransitionPattern, k: int) -> TransitionPattern:
    """Complement every bit if wire ``k`` falls, so that it rises."""
    d = pattern.deltas
    _check_wire(len(d), k)
    if d[k - 1] == 0:
        raise NoTransitionError(f"wire {k} does not transition in {pattern}")
    return pattern.complemented() if d[k - 1] == FALL else pattern
