"""Segmented distributed-RC bus simulator.

Each wire is a ladder of N sections (series resistance r L / N followed by
ground capacitance c L / N and coupling capacitance cc L / N to each lateral
neighbour).  Drivers are ideal steps behind R_S and every far end carries C_L.

The driver node of a wire (position 0) holds no capacitance, so it is
eliminated exactly: the source reaches position 1 through R_S + r L / N.
The remaining m * N node voltages are numbered position-major
(``(j - 1) * m + (i - 1)`` for wire i, position j) which keeps the system
matrices banded with half-bandwidth m.

Integration is the trapezoidal rule with a constant step; ``G + 2C/dt`` is
Cholesky-factored once per (network, dt) and reused for every step.
"""

from __future__ import annotations

import csv
import functools
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.linalg import LinAlgError, cho_solve_banded, cholesky_banded

from .analytic import BufferRatios, single_line_mode
from .bus import BusSpec, DelayEstimate, TransitionPattern, as_deltas, classify_wire
from .errors import BuildError, GridMismatchError, InvalidPatternError, NoCrossingError, NotSettledError

SETTLE_TOL = 1e-4
DT_REL_TOL = 1e-3


@dataclass(frozen=True, eq=False)
class Network:
    spec: BusSpec
    conductance_matrix: sp.csr_matrix
    capacitance_matrix: sp.csr_matrix
    input_conductance: float
    input_nodes: tuple[int, ...]
    far_nodes: tuple[int, ...]

    @property
    def wire_count(self) -> int:
        return self.spec.wire_count

    @property
    def segments(self) -> int:
        return self.spec.segments

    @property
    def node_count(self) -> int:
        """Electrical nodes including the eliminated driver nodes."""
        return self.wire_count * (self.segments + 1)

    @property
    def state_size(self) -> int:
        return self.conductance_matrix.shape[0]

    @property
    def bandwidth(self) -> int:
        return self.wire_count

    def index(self, wire: int, position: int) -> int:
        """State index of wire ``wire`` (1-based) at ladder position 1..N."""
        if not 1 <= position <= self.segments:
            raise IndexError("driver nodes (position 0) are not state variables")
        return (position - 1) * self.wire_count + (wire - 1)

    def label(self, wire: int, position: int) -> str:
        return f"W{wire}N{position}"

    def summary(self) -> dict:
        s = self.spec
        return {
            "wire_count": s.wire_count,
            "segments": s.segments,
            "node_count": self.node_count,
            "state_size": self.state_size,
            "total_resistance_ohm": s.total_resistance,
            "total_ground_capacitance_farad": float(self.ground_capacitance_per_wire().mean()),
            "total_coupling_capacitance_farad": s.cc * s.length,
            "coupling_factor": s.coupling_factor,
            "driver_resistance_ohm": s.driver_resistance,
            "load_capacitance_farad": s.load_capacitance,
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)

    def ground_capacitance_per_wire(self) -> np.ndarray:
        """Row sums of C (coupling cancels) per wire, minus the far-end load."""
        rows = np.asarray(self.capacitance_matrix.sum(axis=1)).ravel()
        per_wire = rows.reshape(self.segments, self.wire_count).sum(axis=0)
        return per_wire - self.spec.load_capacitance

    def to_spice(self, pattern=None, dt: float | None = None, t_end: float | None = None) -> str:
        """Plain-text SPICE deck of the same segmented network."""
        return spice_netlist(self.spec, pattern, dt, t_end)


def build_network(spec: BusSpec) -> Network:
    m, n_seg = spec.wire_count, spec.segments
    size = m * n_seg
    g_seg = n_seg / spec.total_resistance
    c_seg = spec.total_capacitance / n_seg
    cc_seg = spec.cc * spec.length / n_seg
    g_in = 1.0 / (spec.driver_resistance + spec.total_resistance / n_seg)

    idx = np.arange(size).reshape(n_seg, m)
    rows, cols, vals = [], [], []

    def stamp(a, b, v):
        rows.extend([a, b, a, b])
        cols.extend([a, b, b, a])
        vals.extend([v, v, -v, -v])

    # series resistors between consecutive positions of each wire
    a = idx[:-1].ravel()
    b = idx[1:].ravel()
    G = sp.coo_matrix(
        (np.concatenate([np.full(a.size, g_seg)] * 2 + [np.full(a.size, -g_seg)] * 2),
         (np.concatenate([a, b, a, b]), np.concatenate([a, b, b, a]))),
        shape=(size, size)).tocsr()
    G = G + sp.diags(np.concatenate([np.full(m, g_in), np.zeros(size - m)]))

    diag = np.full(size, c_seg)
    diag[idx[-1]] += spec.load_capacitance
    C = sp.diags(diag)
    if m > 1 and cc_seg > 0:
        a = idx[:, :-1].ravel()
        b = idx[:, 1:].ravel()
        C = C + sp.coo_matrix(
            (np.concatenate([np.full(a.size, cc_seg)] * 2 + [np.full(a.size, -cc_seg)] * 2),
             (np.concatenate([a, b, a, b]), np.concatenate([a, b, b, a]))),
            shape=(size, size))
    return Network(spec, G.tocsr(), sp.csr_matrix(C), g_in,
                   tuple(int(i) for i in idx[0]), tuple(int(i) for i in idx[-1]))


def _band(matrix: sp.spmatrix, kd: int) -> np.ndarray:
    """Upper banded storage as expected by ``cholesky_banded``."""
    n = matrix.shape[0]
    ab = np.zeros((kd + 1, n))
    for k in range(kd + 1):
        ab[kd - k, k:] = matrix.diagonal(k)
    return ab


class _Stepper:
    """Trapezoidal update for one network and step size."""

    def __init__(self, net: Network, dt: float):
        if not dt > 0:
            raise ValueError("dt must be positive")
        self.net = net
        self.dt = dt
        C2 = net.capacitance_matrix * (2.0 / dt)
        lhs = (C2 + net.conductance_matrix).tocsr()
        self.rhs_matrix = (C2 - net.conductance_matrix).tocsr()
        try:
            self.factor = cholesky_banded(_band(lhs, net.bandwidth), lower=False)
        except LinAlgError as exc:
            raise BuildError(f"system matrix is singular or indefinite: {exc}") from None
        if not np.all(np.isfinite(self.factor)):
            raise BuildError("system matrix factorisation produced non-finite values")

    def run(self, v_initial: np.ndarray, v_final: np.ndarray, steps: int, record: Sequence[int]) -> np.ndarray:
        """Integrate from the DC state of ``v_initial``; sources jump to ``v_final`` at t=0.

        ``v_initial`` / ``v_final`` have shape (m, K) for K simultaneous runs.
        Returns samples of shape (steps + 1, len(record), K).
        """
        net = self.net
        m, n_seg = net.wire_count, net.segments
        k = v_initial.shape[1]
        x = np.tile(v_initial, (n_seg, 1))
        drive = np.zeros_like(x)
        drive[:m] = 2.0 * net.input_conductance * v_final
        record = np.asarray(record, dtype=int)
        out = np.empty((steps + 1, record.size, k))
        out[0] = x[record]
        factor = (self.factor, False)
        A = self.rhs_matrix
        for s in range(1, steps + 1):
            x = cho_solve_banded(factor, A @ x + drive, check_finite=False)
            out[s] = x[record]
        return out


@dataclass(frozen=True, eq=False)
class Trace:
    """Sampled node voltages; ``targets`` are the DC values the nodes settle to."""

    times: np.ndarray
    voltages: np.ndarray
    labels: tuple[str, ...]
    targets: np.ndarray

    def __post_init__(self):
        if self.voltages.ndim != 2 or self.voltages.shape != (self.times.size, len(self.labels)):
            raise ValueError("voltages must have shape (len(times), len(labels))")

    def column(self, node) -> np.ndarray:
        return self.voltages[:, self._col(node)]

    def _col(self, node) -> int:
        if isinstance(node, str):
            return self.labels.index(node)
        return int(node)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t_seconds", *self.labels])
        for t, row in zip(self.times, self.voltages):
            writer.writerow([repr(float(t)), *(repr(float(v)) for v in row)])
        return buf.getvalue()


def default_t_end(spec: BusSpec) -> float:
    """60 (1 + 3 lambda) tau, stretched when the buffers slow the slowest mode."""
    lam = spec.coupling_factor
    slowest = single_line_mode(1 + 4 * lam, BufferRatios.of(spec),
                               spec.total_resistance, spec.total_capacitance)[1]
    return max(60 * (1 + 3 * lam) * spec.tau, 10.5 * slowest)


def _pattern_levels(pattern, m: int) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(pattern, TransitionPattern):
        p = pattern
    elif isinstance(pattern, str):
        p = TransitionPattern.parse(pattern)
    else:
        p = TransitionPattern.from_deltas(as_deltas(pattern))
    if p.width != m:
        raise InvalidPatternError(f"pattern has {p.width} wires, network has {m}")
    return np.asarray(p.initial, float), np.asarray(p.final, float)


@functools.lru_cache(maxsize=32)
def select_dt(spec: BusSpec) -> float:
    """Largest dt = tau0_intrinsic / 10 / 2^k whose halving moves probe delays by < 0.1%.

    Probes: every wire rising (the fastest transition) and a lone rising
    middle wire.
    """
    net = build_network(spec)
    m = spec.wire_count
    mid = (m + 1) // 2
    lone = [0] * m
    lone[mid - 1] = 1
    probes = [[1] * m, lone]
    t_end = default_t_end(spec)
    dt = spec.tau0_intrinsic / 10

    def delays(step):
        _, runs = _simulate_far_end(net, probes, step, t_end)
        return np.array([_last_crossing(runs.times, runs.voltages[:, mid - 1, k], 0.5)
                         for k in range(len(probes))])

    previous = delays(dt)
    for _ in range(8):
        current = delays(dt / 2)
        if np.max(np.abs(current - previous) / previous) < DT_REL_TOL:
            return dt
        dt, previous = dt / 2, current
    return dt


@dataclass(frozen=True, eq=False)
class _Runs:
    times: np.ndarray
    voltages: np.ndarray  # (T, m, K) far-end voltages


def _simulate_far_end(net: Network, patterns, dt: float, t_end: float) -> tuple[np.ndarray, _Runs]:
    m = net.wire_count
    levels = [_pattern_levels(p, m) for p in patterns]
    v0 = np.stack([a for a, _ in levels], axis=1)
    v1 = np.stack([b for _, b in levels], axis=1)
    steps = int(math.ceil(t_end / dt))
    out = _stepper(net, dt).run(v0, v1, steps, net.far_nodes)
    return v1, _Runs(np.arange(steps + 1) * dt, out)


_STEPPERS: dict = {}


def _stepper(net: Network, dt: float) -> _Stepper:
    key = (id(net), dt)
    cached = _STEPPERS.get(key)
    if cached is None or cached.net is not net:
        if len(_STEPPERS) > 16:
            _STEPPERS.clear()
        cached = _STEPPERS[key] = _Stepper(net, dt)
    return cached


def simulate(net: Network, pattern, dt: float | None = None, t_end: float | None = None,
             record: Sequence[tuple[int, int]] | None = None) -> Trace:
    """Transient response to simultaneous ideal steps at t = 0.

    ``record`` lists (wire, position) pairs; by default every far end.
    Position 0 (the driver node) is reconstructed from its neighbours.
    """
    spec = net.spec
    m, n_seg = net.wire_count, net.segments
    dt = select_dt(spec) if dt is None else dt
    t_end = default_t_end(spec) if t_end is None else t_end
    if not dt > 0 or not t_end > 0:
        raise ValueError("dt and t_end must be positive")
    v0, v1 = _pattern_levels(pattern, m)
    record = [(i, n_seg) for i in range(1, m + 1)] if record is None else list(record)
    state_nodes = []
    for wire, pos in record:
        if not 1 <= wire <= m or not 0 <= pos <= n_seg:
            raise IndexError(f"no node W{wire}N{pos}")
        state_nodes.append(net.index(wire, max(pos, 1)))
    steps = int(math.ceil(t_end / dt))
    raw = _stepper(net, dt).run(v0[:, None], v1[:, None], steps, state_nodes)[:, :, 0]
    for col, (wire, pos) in enumerate(record):
        if pos == 0:
            raw[:, col] = _driver_voltage(net, wire, raw[:, col], v0, v1)
    times = np.arange(steps + 1) * dt
    labels = tuple(net.label(w, p) for w, p in record)
    targets = np.array([v1[w - 1] for w, _ in record])
    return Trace(times, raw, labels, targets)


def _driver_voltage(net: Network, wire: int, first: np.ndarray, v0, v1) -> np.ndarray:
    spec = net.spec
    g_s = math.inf if spec.driver_resistance == 0 else 1 / spec.driver_resistance
    g = spec.segments / spec.total_resistance
    src = np.full(first.shape, v1[wire - 1])
    src[0] = v0[wire - 1]
    if math.isinf(g_s):
        return src
    return (g_s * src + g * first) / (g_s + g)


def _last_crossing(times: np.ndarray, v: np.ndarray, threshold: float) -> float:
    above = v > threshold
    change = np.nonzero(above[1:] != above[:-1])[0]
    if change.size == 0:
        raise NoCrossingError("trace never crosses the threshold")
    k = change[-1]
    v_a, v_b = v[k], v[k + 1]
    return float(times[k] + (threshold - v_a) * (times[k + 1] - times[k]) / (v_b - v_a))


def extract_crossing(trace: Trace, threshold: float = 0.5, node=0) -> float:
    """Last crossing of ``threshold`` on one recorded node, linearly interpolated."""
    col = trace._col(node)
    v = trace.voltages[:, col]
    target = float(trace.targets[col])
    if abs(v[-1] - target) > SETTLE_TOL:
        raise NotSettledError(
            f"{trace.labels[col]} ends at {v[-1]:.6g}, DC target {target:.6g}; extend t_end")
    return _last_crossing(trace.times, v, threshold)


def superpose(traces: Sequence[Trace], weights: Sequence[float]) -> Trace:
    if len(traces) != len(weights) or not traces:
        raise ValueError("need one weight per trace")
    ref = traces[0]
    for t in traces[1:]:
        if t.times.shape != ref.times.shape or not np.array_equal(t.times, ref.times) or t.labels != ref.labels:
            raise GridMismatchError("traces do not share a time grid and node list")
    volts = sum(w * t.voltages for w, t in zip(weights, traces))
    targets = sum(w * t.targets for w, t in zip(weights, traces))
    return Trace(ref.times.copy(), np.asarray(volts, float), ref.labels, np.asarray(targets, float))


def worst_delay_sim(pattern, spec: BusSpec, dt: float | None = None,
                    net: Network | None = None) -> list[DelayEstimate]:
    """Simulated 50% delay of every transitioning wire's far end."""
    deltas = as_deltas(pattern)
    if len(deltas) != spec.wire_count:
        raise InvalidPatternError(f"pattern has {len(deltas)} wires, bus has {spec.wire_count}")
    if not any(deltas):
        return []
    net = build_network(spec) if net is None else net
    trace = simulate(net, pattern, dt=dt)
    out = []
    for k, d in enumerate(deltas, start=1):
        if d:
            out.append(DelayEstimate(k, extract_crossing(trace, 0.5, k - 1), "simulator",
                                     classify_wire(deltas, k)))
    return out


@dataclass(frozen=True, eq=False)
class StepResponses:
    """Far-end responses to a unit step on each driver, for fast superposition.

    ``h[t, v, k]`` is the voltage at the far end of wire v + 1 when wire k + 1
    steps 0 -> 1 and every other driver is held at 0.  By linearity the far
    end of wire v under deltas D starting from levels V0 is
    ``V0[v] + sum_k D[k] h[:, v, k]``.
    """

    spec: BusSpec
    times: np.ndarray
    h: np.ndarray

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def trace(self, pattern, victim: int) -> np.ndarray:
        d = np.asarray(as_deltas(pattern), float)
        v0 = 1.0 if d[victim - 1] < 0 else 0.0
        return v0 + self.h[:, victim - 1, :] @ d

    def horizon(self, victim: int, margin: float = 0.45) -> int:
        """Sample count after which no pattern's victim trace can reach the threshold.

        Beyond it, the summed worst-case distance of all unit responses from
        their DC values stays below ``margin`` < 0.5.
        """
        dev = np.abs(self.h[:, victim - 1, :] - np.eye(self.spec.wire_count)[victim - 1])
        tail = np.maximum.accumulate(dev[::-1], axis=0)[::-1].sum(axis=1)
        below = np.nonzero(tail < margin)[0]
        return int(below[0]) + 2 if below.size else self.times.size

    def delays(self, patterns, victim: int, threshold: float = 0.5) -> np.ndarray:
        """Simulated delay of ``victim`` for each row of a (P, m) delta array."""
        D = np.atleast_2d(np.asarray(patterns, dtype=float))
        if D.shape[1] != self.spec.wire_count:
            raise InvalidPatternError("pattern width does not match the bus")
        if np.any(D[:, victim - 1] == 0):
            raise InvalidPatternError("victim must transition in every pattern")
        final_err = np.abs(D @ self.h[-1, victim - 1, :] - D[:, victim - 1])
        if np.any(final_err > SETTLE_TOL):
            raise NotSettledError("unit responses have not settled; extend t_end")
        n = min(self.horizon(victim), self.times.size)
        H = self.h[:n, victim - 1, :]
        t = self.times[:n]
        v0 = (D[:, victim - 1] < 0).astype(float)
        out = np.empty(D.shape[0])
        for start in range(0, D.shape[0], 512):
            block = D[start:start + 512]
            Y = v0[start:start + 512, None] + block @ H.T
            above = Y > threshold
            change = above[:, 1:] != above[:, :-1]
            if not np.all(change.any(axis=1)):
                raise NoCrossingError("a victim trace never crosses the threshold")
            k = change.shape[1] - 1 - np.argmax(change[:, ::-1], axis=1)
            rows = np.arange(block.shape[0])
            ya, yb = Y[rows, k], Y[rows, k + 1]
            out[start:start + 512] = t[k] + (threshold - ya) * (t[k + 1] - t[k]) / (yb - ya)
        return out

    def delay(self, pattern, victim: int) -> float:
        return float(self.delays([as_deltas(pattern)], victim)[0])


def step_responses(spec: BusSpec, dt: float | None = None, t_end: float | None = None,
                   use_symmetry: bool = True, net: Network | None = None) -> StepResponses:
    """Simulate unit steps on each driver (half of them when mirror symmetry applies)."""
    net = build_network(spec) if net is None else net
    m = spec.wire_count
    dt = select_dt(spec) if dt is None else dt
    t_end = default_t_end(spec) if t_end is None else t_end
    sources = range((m + 1) // 2) if use_symmetry else range(m)
    patterns = []
    for k in sources:
        d = [0] * m
        d[k] = 1
        patterns.append(d)
    _, runs = _simulate_far_end(net, patterns, dt, t_end)
    h = np.empty((runs.times.size, m, m))
    for col, k in enumerate(sources):
        h[:, :, k] = runs.voltages[:, :, col]
        if use_symmetry:
            h[:, ::-1, m - 1 - k] = runs.voltages[:, :, col]
    return StepResponses(spec, runs.times, h)


def spice_netlist(spec: BusSpec, pattern=None, dt: float | None = None, t_end: float | None = None) -> str:
    """SPICE deck of the segmented bus; node names W{i}N{j}, sources W{i}S."""
    m, n_seg = spec.wire_count, spec.segments
    if pattern is None:
        v0, v1 = np.zeros(m), np.ones(m)
    else:
        v0, v1 = _pattern_levels(pattern, m)
    dt = spec.tau0_intrinsic / 10 if dt is None else dt
    t_end = default_t_end(spec) if t_end is None else t_end
    r_seg = spec.total_resistance / n_seg
    c_seg = spec.total_capacitance / n_seg
    cc_seg = spec.cc * spec.length / n_seg
    lines = [f"* coupled RC bus: {m} wires x {n_seg} sections, lambda={spec.coupling_factor:.6g}"]
    for i in range(1, m + 1):
        drive = f"W{i}S" if spec.driver_resistance > 0 else f"W{i}N0"
        lines.append(f"V{i} {drive} 0 PWL(0 {v0[i - 1]:g} 1e-18 {v1[i - 1]:g})")
        if spec.driver_resistance > 0:
            lines.append(f"RS{i} W{i}S W{i}N0 {spec.driver_resistance:.9g}")
        for j in range(1, n_seg + 1):
            lines.append(f"R{i}_{j} W{i}N{j - 1} W{i}N{j} {r_seg:.9g}")
            lines.append(f"C{i}_{j} W{i}N{j} 0 {c_seg:.9g}")
        if spec.load_capacitance > 0:
            lines.append(f"CL{i} W{i}N{n_seg} 0 {spec.load_capacitance:.9g}")
    if cc_seg > 0:
        for i in range(1, m):
            for j in range(1, n_seg + 1):
                lines.append(f"CC{i}_{j} W{i}N{j} W{i + 1}N{j} {cc_seg:.9g}")
    lines.append(f".tran {dt:.6g} {t_end:.6g}")
    lines.append(".end")
    return "\n".join(lines) + "\n"
