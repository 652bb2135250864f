"""Acceptance suite: reference-bus reproductions and global properties.

Every test prints exactly one PASS/FAIL line with its measured values.
"""

import itertools

import numpy as np
import pytest

from xtalk.analytic import WORST_PATTERNS, crossing_time, eigen_window_waveform, five_wire_waveform, table_delay, \
    worst_waveform
from xtalk.bus import TransitionPattern, baseline_class_delay, classify_bus
from xtalk.cac import certify, codebook_worst_delays, family_codebook, fpc_set, generate_codebook, model_bounds
from xtalk.search import SimulatorOracle, alg1, exhaustive
from xtalk.simulator import build_network, extract_crossing, select_dt, simulate, step_responses, worst_delay_sim


@pytest.fixture
def verdict(capsys):
    def emit(label, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
        assert ok, f"{label}: {detail}"
    return emit


def ps(values):
    return " / ".join(f"{v * 1e12:.2f}" for v in values)


def rel_err(got, want):
    return [abs(g - w) / w for g, w in zip(got, want)]


def within(got, want, tol):
    return max(rel_err(got, want)) <= tol


def sig3(x):
    return float(f"{x:.3g}")


def test_criterion_01_baseline(bus, verdict):
    want = [5.55e-12, 73.50e-12, 141.45e-12, 209.40e-12, 277.35e-12]
    got = [baseline_class_delay(i, bus(3)) for i in range(5)]
    ok = all(sig3(g) == sig3(w) for g, w in zip(got, want))
    verdict("criterion 1 baseline per-class delays", ok, f"{ps(got)} ps (3 significant figures)")


def test_criterion_02_three_wire_buffered(bus, verdict):
    want = [4.04e-12, 7.56e-12, 74.55e-12, 152.24e-12, 207.36e-12]
    got = [table_delay(i, "three", bus(3), buffered=True) for i in range(5)]
    verdict("criterion 2 buffered three-wire model", within(got, want, 0.01),
            f"{ps(got)} ps, max err {max(rel_err(got, want)):.2%} (tol 1%)")


def test_criterion_03_five_wire_buffered(bus, verdict):
    want = [23.15e-12, 62.09e-12, 106.43e-12, 152.24e-12, 207.36e-12]
    got = [table_delay(i, "five", bus(5), buffered=True) for i in range(5)]
    verdict("criterion 3 buffered five-wire model", within(got, want, 0.03),
            f"{ps(got)} ps, max err {max(rel_err(got, want)):.2%} (tol 3%)")


def test_criterion_04_five_wire_loaded(bus, verdict):
    want = [25.11e-12, 67.35e-12, 123.46e-12, 164.62e-12, 224.41e-12]
    spec = bus(5).with_(load_capacitance=100e-15)
    got = [table_delay(i, "five", spec, buffered=True) for i in range(5)]
    verdict("criterion 4 buffered five-wire model, 100 fF load", within(got, want, 0.03),
            f"{ps(got)} ps, max err {max(rel_err(got, want)):.2%} (tol 3%)")


def test_criterion_05_simulator_three_wire(bus, verdict):
    want = [3.96e-12, 7.41e-12, 72.28e-12, 150.74e-12, 206.40e-12]
    spec = bus(3)
    net = build_network(spec)
    got = [{e.wire: e.value for e in worst_delay_sim(p, spec, net=net)}[2] for p in WORST_PATTERNS["three"]]
    verdict("criterion 5 simulator, three-wire worst patterns", within(got, want, 0.05),
            f"{ps(got)} ps, max err {max(rel_err(got, want)):.2%} (tol 5%)")


def test_criterion_06_simulator_five_wire(bus, verdict):
    want = [35.30e-12, 63.09e-12, 98.39e-12, 134.19e-12, 218.91e-12]
    spec = bus(5)
    net = build_network(spec)
    got = [{e.wire: e.value for e in worst_delay_sim(p, spec, net=net)}[3] for p in WORST_PATTERNS["five"]]
    verdict("criterion 6 simulator, five-wire worst patterns", within(got, want, 0.05),
            f"{ps(got)} ps, max err {max(rel_err(got, want)):.2%} (tol 5%)")


SEVENTEEN_WIRE = [
    ("↑↑↑↑↓↓↓↑↑↑↓↓↓↑↑↑↑", 42.17e-12),
    ("↑↑↑↑↑↓↓↑↑-↓↓↑↑↑↑↑", 67.50e-12),
    ("↓↓↑↑↑↑↓-↑-↓↑↑↑↑↓↓", 112.82e-12),
    ("↓↓↓↑↑↑↓↓↑-↓↑↑↑↓↓↓", 165.44e-12),
    ("↑↓↓↓↑↑↑↓↑↓↑↑↑↓↓↓↑", 228.46e-12),
]


def test_criterion_07_alg1_seventeen_wires(responses, verdict):
    r = responses(17)
    oracle = SimulatorOracle(r.spec, responses=r)
    found = [alg1(17, cls, oracle) for cls in range(5)]
    match = []
    for rep, (text, _) in zip(found, SEVENTEEN_WIRE):
        want = TransitionPattern.parse(text).deltas
        match.append(rep.pattern.deltas in (want, tuple(-x for x in want)))
    got = [rep.delay for rep in found]
    want = [d for _, d in SEVENTEEN_WIRE]
    ok = all(match) and within(got, want, 0.05)
    verdict("criterion 7 alg1 on 17 wires", ok,
            f"patterns {' '.join(str(rep.pattern) for rep in found)} match={match}; "
            f"{ps(got)} ps, max err {max(rel_err(got, want)):.2%} (tol 5%)")


def test_criterion_08_alg1_equals_exhaustive(responses, verdict):
    lines, ok = [], True
    trajectory = None
    for m in (9, 11):
        r = responses(m)
        oracle = SimulatorOracle(r.spec, responses=r)
        for cls in range(5):
            a = alg1(m, cls, oracle)
            e = exhaustive(m, cls, oracle)
            same = abs(a.delay - e.delay) <= 1e-15
            ok &= same
            lines.append(f"m={m} {cls}C {'=' if same else '!='}")
            if m == 11 and cls == 2:
                trajectory = [str(p) for p in a.trajectory]
    want = ["dddd-u-dddd", "ddud-u-dudd", "duud-u-duud", "uuud-u-duuu"]
    ok &= trajectory == want
    verdict("criterion 8 alg1 equals exhaustive search", ok,
            f"{', '.join(lines)}; 11-wire 2C trajectory {' > '.join(trajectory)}")


def test_criterion_09_codebook_counts(verdict):
    fpc = generate_codebook(8, "2C")
    foc = generate_codebook(8, "3C")
    olc = generate_codebook(8, "1C")
    substr = fpc_set(8)
    ok = (len(fpc) == 68 and len(foc) == 149 and len(substr) == 68 and certify(substr) == []
          and fpc.transition_count == 4556 and foc.transition_count == 22052)
    verdict("criterion 9 codebook counts", ok,
            f"2C {len(fpc)} ({fpc.transition_count} transitions), 3C {len(foc)} ({foc.transition_count}), "
            f"substring-free {len(substr)} valid={certify(substr) == []}, 1C search optimum {len(olc)} "
            f"(reference count 16)")


EIGHT_WIRE_REFERENCE = {
    "OLC": [55.36, 32.20, 51.40, 51.06, 50.79, 51.39, 32.46, 55.36],
    "FPC": [107.43, 102.71, 106.65, 101.91, 101.89, 106.53, 102.72, 107.39],
    "FOC": [107.73, 159.65, 154.59, 162.61, 162.77, 154.62, 160.61, 108.88],
}
MODEL_ROWS = {
    "OLC": (62.09, 53.43, 42.52),
    "FPC": (106.43, 98.76, 102.84),
    "FOC": (152.24, 98.76, 157.64),
}


def test_criterion_10_codebook_simulated_delays(bus, verdict):
    spec = bus(8)
    responses = step_responses(spec)
    parts, ok = [], True
    for family, want_ps in EIGHT_WIRE_REFERENCE.items():
        book = family_codebook(family, 8)
        got = codebook_worst_delays(book, spec, "simulator", dt=responses.dt).per_wire
        want = [w * 1e-12 for w in want_ps]
        err = max(rel_err(got, want))
        ok &= err <= 0.05
        parts.append(f"{family} {ps(got)} (max err {err:.2%})")
    verdict("criterion 10 per-wire simulated codebook delays", ok, "; ".join(parts) + " (tol 5%)")


def test_criterion_10_codebook_model_rows(bus, verdict):
    spec = bus(8)
    parts, ok = [], True
    for family, want_ps in MODEL_ROWS.items():
        cap = {"OLC": 1, "FPC": 2, "FOC": 3}[family]
        b = model_bounds(cap, spec)
        got = [b["five-wire"], b["boundary1"], b["boundary2"]]
        want = [w * 1e-12 for w in want_ps]
        errs = rel_err(got, want)
        ok &= max(errs) <= 0.03
        parts.append(f"{family} {ps(got)} (errs {', '.join(f'{e:.2%}' for e in errs)})")
    verdict("criterion 10 codebook model rows", ok, "; ".join(parts) + " (tol 3%)")


def test_criterion_11_properties(bus, responses, verdict):
    checks = {}

    # coupling-free collapse: every class of every model gives the same delay
    flat = bus(5).with_(cc=0.0)
    spreads = []
    for model, pats in WORST_PATTERNS.items():
        vals = [crossing_time(worst_waveform(i, model, flat, buffered=True)) for i in range(len(pats))]
        spreads.append((max(vals) - min(vals)) / min(vals))
    vals = [baseline_class_delay(i, flat) for i in range(5)]
    spreads.append((max(vals) - min(vals)) / min(vals))
    flat3 = bus(3).with_(cc=0.0)
    net = build_network(flat3)
    vals = [{e.wire: e.value for e in worst_delay_sim(p, flat3, net=net)}[2] for p in WORST_PATTERNS["three"]]
    spreads.append((max(vals) - min(vals)) / min(vals))
    checks["zero-coupling collapse"] = max(spreads) <= 1e-6

    # linearity: superposed unit responses against direct simulation
    r5 = responses(5)
    net5 = build_network(r5.spec)
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(6):
        d = rng.integers(-1, 2, size=5)
        d[2] = 1
        direct = simulate(net5, d, dt=r5.dt, t_end=float(r5.times[-1]))
        worst = max(worst, float(np.max(np.abs(direct.voltages[:, 2] - r5.trace(d, 3)))))
    checks["simulator linearity"] = worst <= 1e-6

    # time-step and segment convergence
    spec3 = bus(3)
    dt = select_dt(spec3)
    net3 = build_network(spec3)
    dt_err = max(abs(extract_crossing(simulate(net3, p, dt), node=1) - extract_crossing(simulate(net3, p, dt / 2), node=1))
                 / extract_crossing(simulate(net3, p, dt / 2), node=1) for p in WORST_PATTERNS["three"])
    fine = spec3.with_(segments=200)
    n_err = max(abs(worst_delay_sim(p, spec3, net=net3)[-1].value - worst_delay_sim(p, fine)[-1].value)
                / worst_delay_sim(p, fine)[-1].value for p in ("uuu", "dud"))
    checks["dt convergence"] = dt_err < 1e-3
    checks["segment convergence"] = n_err < 5e-3

    # waveform endpoints: analytic finals and swings, simulated DC levels
    ok = True
    spec5 = bus(5)
    for pat in itertools.product((-1, 0, 1), repeat=5):
        if pat[2] == 0:
            continue
        init = 1.0 if pat[2] < 0 else 0.0
        w = five_wire_waveform(pat, spec5, buffered=True)
        ok &= abs(w.offset - (1 - init)) < 1e-12 and abs(sum(w.weights) - (1 - 2 * init)) < 1e-12
        e = eigen_window_waveform(pat[1:4], spec5, 2)
        ok &= abs(e(1e3 * e.max_tau) - (1 - init)) < 1e-12
    tr = simulate(net3, "100>011")
    ok &= bool(np.allclose(tr.voltages[-1], [0, 1, 1], atol=1e-4))
    checks["waveform endpoints"] = ok

    # sign and mirror symmetry of the classifier and the simulator
    ok = True
    for d in itertools.product((-1, 0, 1), repeat=6):
        c = classify_bus(d)[0]
        ok &= classify_bus([-x for x in d])[0] == c and classify_bus(d[::-1])[0] == c[::-1]
    pats = rng.integers(-1, 2, size=(20, 5))
    pats[:, 1] = 1
    a = r5.delays(pats, 2)
    b = r5.delays(-pats, 2)
    full = step_responses(r5.spec, dt=r5.dt, use_symmetry=False)
    c = full.delays(pats[:, ::-1], 4)
    ok &= bool(np.allclose(a, b, rtol=1e-9) and np.allclose(a, c, rtol=1e-9))
    checks["sign and mirror symmetry"] = ok

    # alg1 terminates at a local maximum of symmetric pair flips
    r9 = responses(9)
    oracle = SimulatorOracle(r9.spec, responses=r9)
    ok = True
    for cls in range(5):
        rep = alg1(9, cls, oracle)
        traj = [oracle(p.deltas) for p in rep.trajectory]
        ok &= all(y > x for x, y in zip(traj, traj[1:]))
        d = list(rep.pattern.deltas)
        for j in range(1, 4):
            f = list(d)
            f[j - 1] *= -1
            f[9 - j] *= -1
            ok &= oracle(f) <= rep.delay + 1e-15
    checks["alg1 termination and local maximum"] = ok

    failed = [k for k, v in checks.items() if not v]
    verdict("criterion 11 property suites", not failed,
            f"{len(checks) - len(failed)}/{len(checks)} hold (spread {max(spreads):.1e}, linearity {worst:.1e}, "
            f"dt {dt_err:.2e}, segments {n_err:.2e})" + (f"; failing: {', '.join(failed)}" if failed else ""))
