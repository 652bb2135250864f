"""Crosstalk-avoidance codebooks: class-capped codeword sets and their delays.

A codebook of width n is valid for a cap iC when every transition between
two of its codewords leaves every wire in class iC or below.  The largest
such codebook is a maximum clique of the compatibility graph over all 2^n
words.  Codewords are bit strings, wire 1 first.
"""

from __future__ import annotations

import functools
import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .analytic import bus_delay_profile, table_delay
from .bus import BusSpec, CrosstalkClass, baseline_class_delay, classify_bus
from .clique import maximum_clique
from .errors import BudgetError, InvalidPatternError
from .simulator import step_responses

FAMILY_CAPS = {"OLC": CrosstalkClass.C1, "FPC": CrosstalkClass.C2, "FOC": CrosstalkClass.C3}


def _bits(word) -> tuple[int, ...]:
    if isinstance(word, str):
        if not word or set(word) - {"0", "1"}:
            raise InvalidPatternError(f"codeword must be a bit string, got {word!r}")
        return tuple(int(ch) for ch in word)
    return tuple(int(b) for b in word)


def pair_class(u, v) -> CrosstalkClass:
    """Largest wire class of the transition u -> v (symmetric in u, v)."""
    a, b = _bits(u), _bits(v)
    if len(a) != len(b):
        raise InvalidPatternError(f"width mismatch: {len(a)} vs {len(b)}")
    return classify_bus([y - x for x, y in zip(a, b)])[1]


@dataclass
class Codebook:
    width: int
    codewords: tuple[str, ...]
    class_cap: CrosstalkClass
    optimal: bool = True

    def __post_init__(self):
        self.codewords = tuple(sorted(self.codewords))
        for w in self.codewords:
            if len(w) != self.width or set(w) - {"0", "1"}:
                raise InvalidPatternError(f"codeword {w!r} is not a {self.width}-bit string")
        self.class_cap = CrosstalkClass.parse(self.class_cap)

    def __len__(self) -> int:
        return len(self.codewords)

    @property
    def transition_count(self) -> int:
        return len(self) * (len(self) - 1)

    def transitions(self):
        return itertools.permutations(self.codewords, 2)

    def to_dict(self) -> dict:
        return {"width": self.width, "cap": str(self.class_cap), "optimal": self.optimal,
                "codewords": list(self.codewords)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "Codebook":
        return cls(int(data["width"]), tuple(data["codewords"]), CrosstalkClass.parse(data["cap"]),
                   bool(data.get("optimal", True)))

    @classmethod
    def from_json(cls, text: str) -> "Codebook":
        return cls.from_dict(json.loads(text))


def _word_bits(n: int) -> np.ndarray:
    words = np.arange(1 << n)
    return ((words[:, None] >> (n - 1 - np.arange(n))) & 1).astype(np.int8)


def _max_class_rows(delta: np.ndarray) -> np.ndarray:
    """Bus class of each row of a (P, n) delta array."""
    n = delta.shape[1]
    if n == 1:
        return np.zeros(delta.shape[0], dtype=np.int8)
    d = delta.astype(np.int8)
    cls = np.zeros_like(d)
    cls[:, 0] = 1 - d[:, 0] * d[:, 1]
    cls[:, -1] = 1 - d[:, -1] * d[:, -2]
    if n > 2:
        cls[:, 1:-1] = 2 - d[:, 1:-1] * (d[:, :-2] + d[:, 2:])
    cls[d == 0] = 0
    return cls.max(axis=1)


def compatibility_graph(n: int, cap) -> list[int]:
    """Adjacency bitmasks: u ~ v iff the transition u -> v stays within ``cap``."""
    cap = int(CrosstalkClass.parse(cap))
    bits = _word_bits(n)
    weights = 1 << np.arange(1 << n, dtype=object)
    adj = []
    for u in range(1 << n):
        ok = _max_class_rows(bits - bits[u]) <= cap
        ok[u] = False
        adj.append(int(sum(weights[ok])) if ok.any() else 0)
    return adj


def generate_codebook(n: int, cap, max_width: int = 12, node_limit: int | None = 2_000_000) -> Codebook:
    """Largest codebook of width n whose transitions all respect ``cap``.

    Ties between optimal codebooks go to the lexicographically smallest sorted
    word list (words ordered as integers, wire 1 most significant).  If the
    search budget runs out the best codebook found is returned with
    ``optimal=False``.
    """
    cap = CrosstalkClass.parse(cap)
    if n < 1:
        raise ValueError("width must be >= 1")
    if n > max_width:
        raise BudgetError(f"width {n} exceeds the search budget of {max_width} wires")
    adj = compatibility_graph(n, cap)
    result = maximum_clique(adj, node_limit=node_limit)
    words = tuple(format(v, f"0{n}b") for v in result.vertices)
    return Codebook(n, words, cap, result.optimal)


def fpc_set(n: int) -> Codebook:
    """Every n-bit word free of the substrings 010 and 101."""
    if n < 1:
        raise ValueError("width must be >= 1")
    words = []
    for v in range(1 << n):
        w = format(v, f"0{n}b")
        if "010" not in w and "101" not in w:
            words.append(w)
    return Codebook(n, tuple(words), CrosstalkClass.C2)


def family_codebook(family: str, n: int) -> Codebook:
    family = family.upper()
    if family == "FPC":
        return fpc_set(n)
    if family not in FAMILY_CAPS:
        raise ValueError(f"unknown code family {family!r}")
    return generate_codebook(n, FAMILY_CAPS[family])


def certify(book: Codebook) -> list[tuple[str, str, CrosstalkClass]]:
    """Every ordered codeword pair whose transition exceeds the cap (empty when valid)."""
    violations = []
    for u, v in book.transitions():
        cls = pair_class(u, v)
        if cls > book.class_cap:
            violations.append((u, v, cls))
    return violations


def certification_report(book: Codebook) -> dict:
    bad = certify(book)
    return {"width": book.width, "cap": str(book.class_cap), "codewords": len(book),
            "valid": not bad, "violations": [[u, v, str(c)] for u, v, c in bad]}


@dataclass
class CodebookDelays:
    per_wire: list[float]
    worst: float
    worst_wire: int
    worst_transition: tuple[str, str]
    per_wire_transition: list[tuple[str, str]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"per_wire_seconds": self.per_wire, "worst_seconds": self.worst,
                "worst_wire": self.worst_wire, "worst_transition": list(self.worst_transition),
                "per_wire_transition": [list(t) for t in self.per_wire_transition]}


def _unique_deltas(book: Codebook) -> tuple[np.ndarray, list[tuple[str, str]]]:
    first: dict[tuple[int, ...], tuple[str, str]] = {}
    for u, v in book.transitions():
        d = tuple(b - a for a, b in zip(_bits(u), _bits(v)))
        first.setdefault(d, (u, v))
    keys = sorted(first, key=lambda d: first[d])
    return np.array(keys, dtype=float).reshape(len(keys), book.width), [first[k] for k in keys]


def codebook_worst_delays(book: Codebook, spec: BusSpec, evaluator: str = "simulator",
                          buffered: bool = True, dt: float | None = None) -> CodebookDelays:
    """Per-wire maximum delay over every ordered transition of the codebook.

    Transitions with the same delta vector share a delay, so each distinct
    delta is evaluated once.  ``evaluator`` is ``"simulator"`` or ``"analytic"``.
    """
    spec = spec.with_(wire_count=book.width)
    D, origin = _unique_deltas(book)
    n = book.width
    per_wire = [0.0] * n
    arg = [("", "")] * n
    if len(D) == 0:
        return CodebookDelays(per_wire, 0.0, 0, ("", ""), arg)
    if evaluator == "simulator":
        responses = step_responses(spec, dt=dt)
        for v in range(1, n + 1):
            rows = np.nonzero(D[:, v - 1])[0]
            if rows.size == 0:
                continue
            values = responses.delays(D[rows], v)
            i = int(np.argmax(values))
            per_wire[v - 1], arg[v - 1] = float(values[i]), origin[rows[i]]
    elif evaluator == "analytic":
        profile = functools.lru_cache(maxsize=None)(
            lambda d: {e.wire: e.value for e in bus_delay_profile(d, spec, "crossing", buffered)})
        for row, src in zip(D.astype(int), origin):
            for wire, value in profile(tuple(row)).items():
                if value > per_wire[wire - 1]:
                    per_wire[wire - 1], arg[wire - 1] = value, src
    else:
        raise ValueError(f"unknown evaluator {evaluator!r}")
    worst_wire = int(np.argmax(per_wire)) + 1
    return CodebookDelays(per_wire, per_wire[worst_wire - 1], worst_wire, arg[worst_wire - 1], arg)


def model_bounds(cap, spec: BusSpec, buffered: bool = True) -> dict[str, float]:
    """Closed-form worst delays a codebook capped at ``cap`` can reach.

    Keys: the per-class baseline, the five-wire model (internal wires) and
    the two boundary models (wires 1 and m, wires 2 and m - 1).  Wire 1 never
    exceeds class 2C, so its bound saturates there.
    """
    cap = int(CrosstalkClass.parse(cap))
    return {
        "baseline": baseline_class_delay(cap, spec),
        "five-wire": table_delay(cap, "five", spec, buffered),
        "boundary1": table_delay(min(cap, 2), "b1", spec, buffered),
        "boundary2": table_delay(cap, "b2", spec, buffered),
    }
