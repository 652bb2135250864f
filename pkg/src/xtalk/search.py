"""Worst-case transition-pattern search for the middle wire of an odd-width bus.

The middle three wires are pinned to a representative of the requested class
(victim rising) and the remaining wires are searched.  Any delay oracle can
drive the search: a callable returning the middle-wire delay for a delta
vector, optionally with a vectorised ``many`` method.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .analytic import crossing_time, window_waveform
from .bus import BusSpec, CrosstalkClass, TransitionPattern, as_deltas, classify_wire, format_deltas
from .errors import BudgetError, InvalidPatternError
from .simulator import StepResponses, step_responses

ACCEPT_TOL = 1e-15  # 1 fs

MIDDLE_PATTERNS = {
    CrosstalkClass.C0: (1, 1, 1),
    CrosstalkClass.C1: (1, 1, 0),
    CrosstalkClass.C2: (0, 1, 0),
    CrosstalkClass.C3: (-1, 1, 0),
    CrosstalkClass.C4: (-1, 1, -1),
}


@dataclass
class SearchReport:
    cls: CrosstalkClass
    pattern: TransitionPattern
    delay: float
    iterations: int
    trajectory: list[TransitionPattern] = field(default_factory=list)
    evaluations: int = 0
    method: str = ""

    def to_dict(self) -> dict:
        return {
            "class": str(self.cls),
            "pattern": str(self.pattern),
            "delay_seconds": self.delay,
            "iterations": self.iterations,
            "evaluations": self.evaluations,
            "method": self.method,
            "trajectory": [str(p) for p in self.trajectory],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "SearchReport":
        return cls(
            CrosstalkClass.parse(data["class"]),
            TransitionPattern.parse(data["pattern"]),
            float(data["delay_seconds"]),
            int(data["iterations"]),
            [TransitionPattern.parse(p) for p in data["trajectory"]],
            int(data.get("evaluations", 0)),
            data.get("method", ""),
        )


class SimulatorOracle:
    """Middle-wire delay from superposed simulated unit-step responses."""

    def __init__(self, spec: BusSpec, dt: float | None = None, responses: StepResponses | None = None):
        self.spec = spec
        self.victim = (spec.wire_count + 1) // 2
        self.responses = responses if responses is not None else step_responses(spec, dt=dt)

    def __call__(self, deltas) -> float:
        return self.responses.delay(deltas, self.victim)

    def many(self, deltas_array) -> np.ndarray:
        return self.responses.delays(deltas_array, self.victim)


class AnalyticOracle:
    """Middle-wire delay from the shift-window analytical model."""

    def __init__(self, spec: BusSpec, buffered: bool = True):
        self.spec = spec
        self.buffered = buffered
        self.victim = (spec.wire_count + 1) // 2

    def __call__(self, deltas) -> float:
        _, wave = window_waveform(deltas, self.victim, self.spec, self.buffered)
        return crossing_time(wave)


def _evaluate(oracle, candidates: list[tuple[int, ...]]) -> np.ndarray:
    if hasattr(oracle, "many"):
        return np.asarray(oracle.many(np.asarray(candidates, dtype=float)), dtype=float)
    return np.array([oracle(c) for c in candidates], dtype=float)


def _middle(m: int, cls, middle) -> tuple[CrosstalkClass, tuple[int, ...]]:
    cls = CrosstalkClass.parse(cls)
    if m < 3 or m % 2 == 0:
        raise ValueError(f"wire count must be odd and >= 3, got {m}")
    mid3 = MIDDLE_PATTERNS[cls] if middle is None else as_deltas(middle)
    if len(mid3) != 3:
        raise InvalidPatternError("middle pattern must cover exactly three wires")
    if classify_wire(mid3, 2) != cls:
        raise InvalidPatternError(f"middle pattern {format_deltas(mid3)} is not in class {cls}")
    return cls, tuple(mid3)


def _with_middle(m: int, mid3, outer) -> tuple[int, ...]:
    """Place the three middle wires into a full pattern; ``outer`` fills the rest in order."""
    c = (m - 1) // 2
    left = c - 1
    return tuple(outer[:left]) + tuple(mid3) + tuple(outer[left:])


def alg1(m: int, cls, oracle, middle=None, max_passes: int = 1000) -> SearchReport:
    """Symmetric pair-flip hill climb.

    Every wire outside the middle three starts with the transition opposite
    to the middle wire.  Each pass visits the symmetric pairs (j, m + 1 - j)
    from the innermost (j = (m - 3) / 2) outwards, reverses both transitions,
    and keeps the flip only if the middle-wire delay grows by more than 1 fs.
    Passes repeat until one makes no change.
    """
    cls, mid3 = _middle(m, cls, middle)
    if m < 5:
        raise ValueError("alg1 needs at least five wires")
    victim_dir = mid3[1]
    pattern = list(_with_middle(m, mid3, [-victim_dir] * (m - 3)))
    best = float(_evaluate(oracle, [tuple(pattern)])[0])
    evaluations = 1
    trajectory = [TransitionPattern.from_deltas(pattern)]
    passes = 0
    while passes < max_passes:
        passes += 1
        changed = False
        for j in range((m - 3) // 2, 0, -1):
            trial = list(pattern)
            trial[j - 1] = -trial[j - 1]
            trial[m - j] = -trial[m - j]
            value = float(_evaluate(oracle, [tuple(trial)])[0])
            evaluations += 1
            if value > best + ACCEPT_TOL:
                pattern, best, changed = trial, value, True
                trajectory.append(TransitionPattern.from_deltas(pattern))
        if not changed:
            break
    return SearchReport(cls, TransitionPattern.from_deltas(pattern), best, passes,
                        trajectory, evaluations, "alg1")


def _argmax_first(values: np.ndarray) -> int:
    """Index of the first value within ACCEPT_TOL of the maximum."""
    best = 0
    for i in range(1, values.size):
        if values[i] > values[best] + ACCEPT_TOL:
            best = i
    return best


def exhaustive(m: int, cls, oracle, middle=None, max_wires: int = 11) -> SearchReport:
    """True maximum over all 3^(m-3) patterns of the free wires.

    Ties (within 1 fs) go to the lexicographically smallest pattern under
    the order down < steady < up.
    """
    cls, mid3 = _middle(m, cls, middle)
    if m > max_wires:
        raise BudgetError(f"exhaustive search over {m} wires needs 3^{m - 3} evaluations (cap: {max_wires} wires)")
    candidates = [_with_middle(m, mid3, outer) for outer in itertools.product((-1, 0, 1), repeat=m - 3)]
    values = _evaluate(oracle, candidates)
    i = _argmax_first(values)
    best = TransitionPattern.from_deltas(candidates[i])
    return SearchReport(cls, best, float(values[i]), 1, [best], len(candidates), "exhaustive")


def symmetric_enumerate(m: int, cls, oracle, middle=None, max_pairs: int = 15) -> SearchReport:
    """Maximum over patterns whose symmetric outer pairs both rise or both fall."""
    cls, mid3 = _middle(m, cls, middle)
    pairs = (m - 3) // 2
    if pairs > max_pairs:
        raise BudgetError(f"symmetric enumeration over {pairs} pairs exceeds the cap of {max_pairs}")
    candidates = []
    for choice in itertools.product((-1, 1), repeat=pairs):
        outer = list(choice) + list(reversed(choice))
        candidates.append(_with_middle(m, mid3, outer))
    values = _evaluate(oracle, candidates)
    i = _argmax_first(values)
    best = TransitionPattern.from_deltas(candidates[i])
    return SearchReport(cls, best, float(values[i]), 1, [best], len(candidates), "symmetric")


def search(method: str, m: int, cls, oracle, middle=None) -> SearchReport:
    funcs = {"alg1": alg1, "exhaustive": exhaustive, "symmetric": symmetric_enumerate}
    try:
        func = funcs[method]
    except KeyError:
        raise ValueError(f"unknown search method {method!r}") from None
    return func(m, cls, oracle, middle=middle)
