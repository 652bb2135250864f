"""Closed-form victim waveforms for coupled RC buses and their 50% delays.

Every waveform is a :class:`ModalExpansion`, ``V(t) = offset - sum a_i exp(-t/tau_i)``.
Each term belongs to one decoupled mode of the bus, identified by its
capacitance eigenvalue ``p`` (the mode sees ground capacitance ``p * c``).
A mode's share of the victim's swing is its *weight* ``w``; its amplitude is
``w * K(p)`` where ``K`` is ``4/pi`` for an ideal source and open far end and
the fitted factor ``B(p)`` once driver resistance and load capacitance are
included.

Three windows are supported:

* three-wire and boundary (wire 1 / wire 2) windows, solved exactly by
  projection on the eigenvectors of the normalised capacitance matrix;
* the five-wire window, which regroups the pattern into reducible patterns
  (all-equal, and the outer-pair pattern with coupling lambda/2) plus
  single-wire patterns on the inner neighbours.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .bus import (
    BusSpec,
    CrosstalkClass,
    DelayEstimate,
    as_deltas,
    classify_wire,
)
from .errors import NoCrossingError, NoTransitionError, InvalidPatternError, UnsupportedModelError

FOUR_OVER_PI = 4 / math.pi
_WEIGHT_EPS = 1e-12


@dataclass(frozen=True)
class ModalExpansion:
    """Victim waveform ``offset - sum(a * exp(-t / tau))``.

    ``weights`` holds each term's share of the swing; for an exact
    expansion they add up to ``offset - initial``.
    """

    offset: float
    terms: tuple[tuple[float, float], ...]
    initial: float = 0.0
    weights: tuple[float, ...] = ()

    def __post_init__(self):
        for amp, tau in self.terms:
            if not tau > 0:
                raise ValueError(f"time constants must be positive, got {tau}")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        v = np.full(t.shape, self.offset, dtype=float)
        for amp, tau in self.terms:
            v = v - amp * np.exp(-t / tau)
        return v if v.ndim else float(v)

    @property
    def final(self) -> float:
        return self.offset

    @property
    def max_tau(self) -> float:
        return max(tau for _, tau in self.terms)

    @property
    def min_tau(self) -> float:
        return min(tau for _, tau in self.terms)

    def __add__(self, other: "ModalExpansion") -> "ModalExpansion":
        """Superpose two responses of the same victim (offsets and swings add)."""
        return ModalExpansion(
            self.offset + other.offset - other.initial,
            _merge(self.terms + other.terms),
            self.initial,
            tuple(self.weights) + tuple(other.weights),
        )

    def scaled(self, k: float) -> "ModalExpansion":
        """Swing scaled by ``k`` around the initial level."""
        return ModalExpansion(
            self.initial + k * (self.offset - self.initial),
            tuple((k * a, tau) for a, tau in self.terms),
            self.initial,
            tuple(k * w for w in self.weights),
        )

    def coefficients(self, taus: Sequence[float], rel: float = 1e-9) -> list[float]:
        """Amplitude attached to each of ``taus`` (0 when the mode is absent)."""
        out = []
        for target in taus:
            out.append(sum(a for a, tau in self.terms if abs(tau - target) <= rel * target))
        return out

    def to_csv(self, times: Iterable[float]) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t_seconds", "v_normalized"])
        times = np.asarray(list(times), dtype=float)
        for t, v in zip(times, np.atleast_1d(self(times))):
            writer.writerow([repr(float(t)), repr(float(v))])
        return buf.getvalue()


def _merge(terms) -> tuple[tuple[float, float], ...]:
    """Combine terms sharing a time constant (sorted by it) and drop vanishing ones."""
    groups: list[list[float]] = []
    for amp, tau in sorted(terms, key=lambda t: t[1]):
        if groups and tau - groups[-1][1] <= 1e-12 * tau:
            groups[-1][0] += amp
        else:
            groups.append([amp, tau])
    return tuple((a, tau) for a, tau in groups if abs(a) > _WEIGHT_EPS)


@dataclass(frozen=True)
class BufferRatios:
    """Driver and load sizes relative to the line: R_T = R_S / R, C_T = C_L / C."""

    r_t: float
    c_t: float

    @classmethod
    def of(cls, spec: BusSpec) -> "BufferRatios":
        return cls(spec.driver_resistance / spec.total_resistance,
                   spec.load_capacitance / spec.total_capacitance)

    def scaled(self, p: float) -> float:
        """Load ratio seen by a mode of eigenvalue ``p``: C_L / (p C)."""
        return self.c_t / p


def single_line_mode(p: float, ratios: BufferRatios, R: float, C: float) -> tuple[float, float]:
    """Fitted amplitude B and time constant of the slowest mode with buffers.

    Uses B = 1.01 (R_T + C_T' + 1) / (R_T + C_T' + pi/4) and
    tau = p R C (R_T C_T' + R_T + C_T' + (2/pi)^2) / 1.04 with C_T' = C_L / (p C).
    """
    if p < 1 - 1e-12:
        raise ValueError(f"mode eigenvalue must be >= 1, got {p}")
    rt, ct = ratios.r_t, ratios.scaled(p)
    amplitude = 1.01 * (rt + ct + 1) / (rt + ct + math.pi / 4)
    tau = p * R * C * (rt * ct + rt + ct + (2 / math.pi) ** 2) / 1.04
    return amplitude, tau


def eigenmodes(m: int, lam: float) -> list[tuple[float, np.ndarray]]:
    """Eigenpairs of the normalised capacitance matrix of an m-wire bus.

    The matrix is ``I + lam * Lap`` with ``Lap`` the path-graph Laplacian, whose
    eigenvectors are the DCT-II basis regardless of ``lam``; eigenvalues are
    ``1 + lam (2 - 2 cos(k pi / m))``.  Vectors are unit length.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    modes = []
    j = np.arange(m)
    for k in range(m):
        p = 1 + lam * (2 - 2 * math.cos(k * math.pi / m))
        if k == 0:
            vec = np.full(m, 1 / math.sqrt(m))
        else:
            vec = np.cos(k * math.pi * (j + 0.5) / m) * math.sqrt(2 / m)
        modes.append((p, vec))
    # the DCT ordering is already ascending in p for lam >= 0
    return modes


def capacitance_matrix(m: int, lam: float) -> np.ndarray:
    """C / c for m uniformly coupled wires."""
    a = np.diag(np.full(m, 1 + 2 * lam))
    if m >= 1:
        a[0, 0] = a[-1, -1] = 1 + lam
    if m == 1:
        a[0, 0] = 1.0
    idx = np.arange(m - 1)
    a[idx, idx + 1] = a[idx + 1, idx] = -lam
    return a


def window_weights(deltas: Sequence[int], observed: int) -> list[tuple[float, int]]:
    """Swing share of each mode k (returned as ``(weight, k)``) at wire ``observed``."""
    m = len(deltas)
    d = np.asarray(deltas, dtype=float)
    out = []
    for k, (_, vec) in enumerate(eigenmodes(m, 1.0)):
        w = float(vec[observed - 1] * (vec @ d))
        if abs(w) > _WEIGHT_EPS:
            out.append((w, k))
    return out


def _mode_eigenvalue(m: int, k: int, lam: float) -> float:
    return 1 + lam * (2 - 2 * math.cos(k * math.pi / m))


class _ModeShape:
    """Maps (weight, eigenvalue) pairs to exponential terms for one spec."""

    def __init__(self, spec: BusSpec, buffered: bool, series_terms: int = 1):
        if series_terms < 1:
            raise ValueError("series_terms must be >= 1")
        self.spec = spec
        self.buffered = buffered
        self.series_terms = series_terms
        self.ratios = BufferRatios.of(spec)

    def terms(self, weight: float, p: float) -> list[tuple[float, float]]:
        spec = self.spec
        if self.buffered:
            amp, tau = single_line_mode(p, self.ratios, spec.total_resistance, spec.total_capacitance)
            return [(weight * amp, tau)]
        out = []
        for n in range(1, self.series_terms + 1):
            k = 2 * n - 1
            out.append((weight * (-1) ** (n - 1) * FOUR_OVER_PI / k, p * spec.tau / k ** 2))
        return out


def _build(weights: Sequence[tuple[float, float]], spec: BusSpec, buffered: bool,
           initial: float, series_terms: int) -> ModalExpansion:
    shape = _ModeShape(spec, buffered, series_terms)
    swing = sum(w for w, _ in weights)
    raw = []
    kept = []
    for w, p in weights:
        if abs(w) <= _WEIGHT_EPS:
            continue
        kept.append(w)
        raw.extend(shape.terms(w, p))
    return ModalExpansion(initial + swing, _merge(raw), float(initial), tuple(kept))


def _observed_deltas(pattern, width: int, observed: int, label: str) -> tuple[tuple[int, ...], float]:
    d = as_deltas(pattern)
    if len(d) != width:
        raise InvalidPatternError(f"{label} model needs {width} wires, got {len(d)}")
    if d[observed - 1] == 0:
        raise NoTransitionError(f"observed wire {observed} is steady in {label} pattern")
    initial = 1.0 if d[observed - 1] < 0 else 0.0
    return d, initial


def eigen_window_waveform(pattern, spec: BusSpec, observed: int, buffered: bool = False,
                          series_terms: int = 1) -> ModalExpansion:
    """Exact modal waveform of wire ``observed`` in a window of any width."""
    d = as_deltas(pattern)
    if d[observed - 1] == 0:
        raise NoTransitionError(f"observed wire {observed} is steady")
    initial = 1.0 if d[observed - 1] < 0 else 0.0
    lam = spec.coupling_factor
    m = len(d)
    weights = [(w, _mode_eigenvalue(m, k, lam)) for w, k in window_weights(d, observed)]
    return _build(weights, spec, buffered, initial, series_terms)


def three_wire_waveform(pattern, spec: BusSpec, buffered: bool = False,
                        series_terms: int = 1) -> ModalExpansion:
    _observed_deltas(pattern, 3, 2, "three-wire")
    return eigen_window_waveform(pattern, spec, 2, buffered, series_terms)


def boundary_waveform(pattern, spec: BusSpec, which: str = "wire-1", buffered: bool = False,
                      series_terms: int = 1) -> ModalExpansion:
    """Boundary-wire waveform: wire 1 of a 3-wire window or wire 2 of a 4-wire window."""
    if which in ("wire-1", "b1", 1):
        _observed_deltas(pattern, 3, 1, "boundary wire-1")
        return eigen_window_waveform(pattern, spec, 1, buffered, series_terms)
    if which in ("wire-2", "b2", 2):
        _observed_deltas(pattern, 4, 2, "boundary wire-2")
        return eigen_window_waveform(pattern, spec, 2, buffered, series_terms)
    raise UnsupportedModelError(f"unknown boundary model {which!r}")


# Five-wire building blocks, as swing weights on eigenvalues (1, 1 + 3/2 lam, 1 + 3 lam).
# Uniform pattern: one mode, no coupling.
_RTP_UNIFORM = (1.0, 0.0, 0.0)
# Outer-pair pattern (down - up - down): a three-wire 4C pattern at coupling lam/2.
_RTP_OUTER = (-1 / 3, 4 / 3, 0.0)
# Single rising transition on an inner neighbour, seen from the middle wire.
_STP_INNER = (1 / 3, 0.0, -1 / 3)


def five_wire_decomposition(pattern) -> dict[str, float]:
    """Coefficients of the pattern on the reducible and single-transition blocks.

    ``uniform`` multiplies the all-rising pattern, ``outer`` the down-steady-up-
    steady-down pattern, ``stp2`` / ``stp4`` rising transitions on wires 2 / 4.
    The outer wires enter only through their mean, since the middle wire sees
    wires 1 and 5 symmetrically.
    """
    d = as_deltas(pattern)
    if len(d) != 5:
        raise InvalidPatternError(f"five-wire model needs 5 wires, got {len(d)}")
    outer = (d[0] + d[4]) / 2
    uniform = (d[2] + outer) / 2
    opposite = (d[2] - outer) / 2
    return {"uniform": uniform, "outer": opposite, "stp2": d[1] - uniform, "stp4": d[3] - uniform}


def five_wire_weights(pattern) -> tuple[float, float, float]:
    parts = five_wire_decomposition(pattern)
    blocks = {"uniform": _RTP_UNIFORM, "outer": _RTP_OUTER, "stp2": _STP_INNER, "stp4": _STP_INNER}
    return tuple(sum(parts[name] * blocks[name][i] for name in blocks) for i in range(3))


def five_wire_block(name: str, spec: BusSpec, buffered: bool = False, series_terms: int = 1) -> ModalExpansion:
    """Expansion of one building block (``uniform``, ``outer``, ``stp2``, ``stp4``)."""
    blocks = {"uniform": _RTP_UNIFORM, "outer": _RTP_OUTER, "stp2": _STP_INNER, "stp4": _STP_INNER}
    lam = spec.coupling_factor
    eig = (1.0, 1 + 1.5 * lam, 1 + 3 * lam)
    return _build(list(zip(blocks[name], eig)), spec, buffered, 0.0, series_terms)


def five_wire_waveform(pattern, spec: BusSpec, buffered: bool = False,
                       series_terms: int = 1) -> ModalExpansion:
    d, initial = _observed_deltas(pattern, 5, 3, "five-wire")
    lam = spec.coupling_factor
    eig = (1.0, 1 + 1.5 * lam, 1 + 3 * lam)
    return _build(list(zip(five_wire_weights(d), eig)), spec, buffered, initial, series_terms)


def crossing_time(wave: ModalExpansion, threshold: float = 0.5, rel_tol: float = 1e-9) -> float:
    """Last time the waveform crosses ``threshold``.

    The bracket is [0, 50 * max tau].  The waveform is scanned on a dense
    geometric grid, and the last sign change is refined by bisection.
    """
    lo_v, hi_v = sorted((wave.initial, wave.offset))
    if wave.initial == wave.offset or not lo_v < threshold < hi_v:
        raise NoCrossingError(
            f"threshold {threshold} not strictly between initial {wave.initial} and final {wave.offset}")
    if not wave.terms:
        raise NoCrossingError("waveform has no transient terms")
    t_max = 50 * wave.max_tau
    grid = np.concatenate(([0.0], np.geomspace(wave.min_tau * 1e-6, t_max, 4001)))
    f = wave(grid) - threshold
    sign = np.sign(f)
    changes = np.nonzero(sign[1:] * sign[:-1] < 0)[0]
    zeros = np.nonzero(f == 0)[0]
    if changes.size == 0 and zeros.size == 0:
        raise NoCrossingError("waveform does not cross the threshold inside the bracket")
    last_change = changes[-1] if changes.size else -1
    if zeros.size and zeros[-1] > last_change:
        return float(grid[zeros[-1]])
    lo, hi = grid[last_change], grid[last_change + 1]
    f_lo = f[last_change]
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        f_mid = wave(mid) - threshold
        if f_mid == 0:
            return float(mid)
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return float(0.5 * (lo + hi))


# Worst-case pattern of each class, victim rising, for every model.
WORST_PATTERNS = {
    "three": ("uuu", "uu-", "-u-", "du-", "dud"),
    "five": ("duuud", "d-uud", "d-u-d", "udu-u", "ududu"),
    "b1": ("uud", "u-d", "udd"),
    "b2": ("uuud", "-uud", "duud", "du-u", "dudu"),
}

MODEL_SOURCE = {"three": "three-wire", "five": "five-wire", "b1": "boundary1", "b2": "boundary2"}


def model_key(model: str) -> str:
    aliases = {"three": "three", "three-wire": "three", "3": "three",
               "five": "five", "five-wire": "five", "5": "five",
               "b1": "b1", "boundary1": "b1", "wire-1": "b1",
               "b2": "b2", "boundary2": "b2", "wire-2": "b2"}
    try:
        return aliases[str(model)]
    except KeyError:
        raise UnsupportedModelError(f"unknown model {model!r}") from None


def worst_waveform(cls, model: str, spec: BusSpec, buffered: bool = False) -> ModalExpansion:
    key = model_key(model)
    i = int(CrosstalkClass.parse(cls))
    patterns = WORST_PATTERNS[key]
    if i >= len(patterns):
        raise UnsupportedModelError(f"class {i}C is not defined for model {key}")
    pat = patterns[i]
    if key == "three":
        return three_wire_waveform(pat, spec, buffered)
    if key == "five":
        return five_wire_waveform(pat, spec, buffered)
    return boundary_waveform(pat, spec, "wire-1" if key == "b1" else "wire-2", buffered)


def quadratic_delay_factor(b: float, kind: str) -> float:
    """f1 / f2: delay in units of the slowest mode when the middle mode decays twice as fast."""
    if kind == "f1":
        return -math.log(0.25 + 0.5 * math.sqrt(0.25 + 3 / (2 * b)))
    if kind == "f2":
        return -math.log(0.125 + 0.5 * math.sqrt(1 / 16 + 3 / (2 * b)))
    raise ValueError(kind)


def table_delay(cls, model: str, spec: BusSpec, buffered: bool = False) -> float:
    """Closed-form delay of the worst pattern of ``cls`` as printed for each model.

    Buffered boundary models have no printed scalar; single-mode rows use
    ln(2B) tau of that mode and the remaining rows are solved numerically.
    """
    key = model_key(model)
    i = int(CrosstalkClass.parse(cls))
    if i >= len(WORST_PATTERNS[key]):
        raise UnsupportedModelError(f"class {i}C is not defined for model {key}")
    lam = spec.coupling_factor
    pi = math.pi
    if not buffered:
        tau = spec.tau
        s2 = math.sqrt(2)
        table = {
            "three": (math.log(8 / pi), math.log(16 / pi), math.log(16 / (3 * pi)) * (1 + 3 * lam),
                      math.log(8 / pi) * (1 + 3 * lam), math.log(32 / (3 * pi)) * (1 + 3 * lam)),
            "five": (0.165 * (1 + 3 * lam), 0.384 * (1 + 3 * lam),
                     math.log(32 / (3 * pi)) * (1 + 1.5 * lam), math.log(8 / pi) * (1 + 3 * lam),
                     math.log(32 / (3 * pi)) * (1 + 3 * lam)),
            "b1": (0.783 * (1 + lam), math.log(8 / pi) * (1 + lam), 1.094 * (1 + lam)),
            "b2": (math.log(8 / pi), 0.427 * (1 + 2 * lam), math.log(8 / pi) * (1 + 2 * lam),
                   1.441 * (1 + 2 * lam), 6.540 * (1 + (2 - s2) * lam)),
        }
        return table[key][i] * tau

    ratios = BufferRatios.of(spec)
    R, C = spec.total_resistance, spec.total_capacitance

    def mode(p):
        return single_line_mode(p, ratios, R, C)

    if key == "three":
        b1, t1 = mode(1.0)
        b2, t2 = mode(1 + 3 * lam)
        return (math.log(2 * b1) * t1, math.log(4 * b1) * t1, math.log(4 * b2 / 3) * t2,
                math.log(2 * b2) * t2, math.log(8 * b2 / 3) * t2)[i]
    if key == "five":
        b4, t2 = mode(1 + 1.5 * lam)
        b5, t3 = mode(1 + 3 * lam)
        return (quadratic_delay_factor(b5, "f1") * t3, quadratic_delay_factor(b5, "f2") * t3,
                math.log(8 * b4 / 3) * t2, math.log(2 * b5) * t3, math.log(8 * b5 / 3) * t3)[i]
    single = {("b1", 1): 1 + lam, ("b2", 0): 1.0, ("b2", 2): 1 + 2 * lam}
    if (key, i) in single:
        b, t = mode(single[(key, i)])
        return math.log(2 * b) * t
    return crossing_time(worst_waveform(i, key, spec, buffered=True))


def _window(d: tuple[int, ...], k: int) -> tuple[str, tuple[int, ...], int]:
    """Model key, window deltas and observed index for wire ``k`` of the bus."""
    m = len(d)
    if m >= 5 and 3 <= k <= m - 2:
        return "five", d[k - 3:k + 2], 3
    if m >= 5 or m == 4:
        if k == 1:
            return "b1", d[:3], 1
        if k == m:
            return "b1", d[::-1][:3], 1
        if k == 2:
            return "b2", d[:4], 2
        return "b2", d[::-1][:4], 2
    if m == 3:
        return ("three", d, 2) if k == 2 else ("b1", d if k == 1 else d[::-1], 1)
    return "b1", (d if k == 1 else d[::-1]), 1


def window_waveform(pattern, k: int, spec: BusSpec, buffered: bool = True) -> tuple[str, ModalExpansion]:
    """Model key and waveform of wire ``k`` under the shift-window scheme."""
    d = as_deltas(pattern)
    key, win, obs = _window(d, k)
    if key == "five":
        return key, five_wire_waveform(win, spec, buffered)
    return key, eigen_window_waveform(win, spec, obs, buffered)


def bus_delay_profile(pattern, spec: BusSpec, evaluator: str = "crossing",
                      buffered: bool = True) -> list[DelayEstimate]:
    """Delay of every transitioning wire of an m-wire bus.

    Internal wires 3..m-2 use the five-wire window; wires 1, 2, m-1, m the
    boundary windows.  ``evaluator="crossing"`` solves the window waveform of
    the actual pattern; ``evaluator="table"`` looks up the closed-form worst
    delay of the wire's class.
    """
    if evaluator not in ("crossing", "table"):
        raise UnsupportedModelError(f"unknown evaluator {evaluator!r}")
    d = as_deltas(pattern)
    out = []
    for k in range(1, len(d) + 1):
        if d[k - 1] == 0:
            continue
        key, win, obs = _window(d, k)
        cls = classify_wire(d, k)
        if evaluator == "table":
            value = table_delay(classify_wire(win, obs), key, spec, buffered)
        elif key == "five":
            value = crossing_time(five_wire_waveform(win, spec, buffered))
        else:
            value = crossing_time(eigen_window_waveform(win, spec, obs, buffered))
        out.append(DelayEstimate(k, value, MODEL_SOURCE[key], cls))
    return out


def bus_delay(pattern, spec: BusSpec, evaluator: str = "crossing", buffered: bool = True) -> float:
    estimates = bus_delay_profile(pattern, spec, evaluator, buffered)
    return max((e.value for e in estimates), default=0.0)
