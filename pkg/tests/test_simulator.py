import json
import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from xtalk.bus import TransitionPattern
from xtalk.errors import GridMismatchError, InvalidPatternError, NoCrossingError, NotSettledError
from xtalk.simulator import (Trace, build_network, extract_crossing, select_dt, simulate,
                             spice_netlist, step_responses, superpose, worst_delay_sim)


def exact_far_end(net, pattern, times):
    """Closed-form far-end voltages from the generalized eigenproblem G v = s C v."""
    G = net.conductance_matrix.toarray()
    C = net.capacitance_matrix.toarray()
    p = TransitionPattern.parse(pattern)
    v0, v1 = np.asarray(p.initial, float), np.asarray(p.final, float)
    m, n_seg = net.wire_count, net.segments
    b = np.zeros(G.shape[0])
    b[:m] = net.input_conductance * v1
    x_inf = np.linalg.solve(G, b)
    x0 = np.tile(v0, n_seg)
    s, V = sla.eigh(G, C)
    coeff = V.T @ C @ (x0 - x_inf)
    far = np.asarray(net.far_nodes)
    return x_inf[far][:, None] + (V[far] * coeff) @ np.exp(-np.outer(s, times))


def test_node_count(bus):
    net = build_network(bus(3))
    assert net.node_count == 303
    assert net.state_size == 300


def test_single_section_pole(bus):
    spec = bus(1).with_(segments=1, driver_resistance=0.0, load_capacitance=0.0)
    net = build_network(spec)
    poles = sla.eigh(net.conductance_matrix.toarray(), net.capacitance_matrix.toarray(), eigvals_only=True)
    assert poles == pytest.approx([1 / (spec.total_resistance * spec.total_capacitance)])


def test_ground_capacitance(bus):
    net = build_network(bus(5))
    assert net.ground_capacitance_per_wire() == pytest.approx(np.full(5, 41.315e-15))
    assert net.summary()["node_count"] == 505
    assert json.loads(net.summary_json())["wire_count"] == 5


def test_capacitance_matrix_properties(bus):
    spec = bus(4).with_(segments=6, load_capacitance=20e-15)
    C = build_network(spec).capacitance_matrix.toarray()
    assert np.allclose(C, C.T)
    off = np.abs(C).sum(axis=1) - np.abs(np.diag(C))
    assert np.all(np.diag(C) >= off - 1e-30)
    assert np.linalg.eigvalsh(C).min() > 0


@pytest.mark.parametrize("pattern", ["ud", "u-", "dd", "-u"])
def test_simulate_matches_exact_solution(bus, pattern):
    spec = bus(2).with_(segments=6)
    net = build_network(spec)
    dt = spec.tau0_intrinsic / 400
    trace = simulate(net, pattern, dt=dt, t_end=60e-12)
    exact = exact_far_end(net, pattern, trace.times).T
    assert np.max(np.abs(trace.voltages[1:] - exact[1:])) < 2e-4


def test_single_wire_delay(bus):
    [est] = worst_delay_sim("u", bus(1))
    assert est.value == pytest.approx(4.04e-12, rel=0.03)
    assert est.source == "simulator"


def test_three_wire_opposed(responses):
    assert responses(3).delay("dud", 2) == pytest.approx(206.40e-12, rel=0.05)


def test_no_transition_is_constant(bus):
    spec = bus(3).with_(segments=10)
    trace = simulate(build_network(spec), "101>101", dt=1e-13, t_end=5e-12)
    assert np.allclose(trace.voltages, [1, 0, 1])
    assert worst_delay_sim("---", bus(3)) == []


def test_extract_crossing_single_exponential():
    tau, dt = 1e-12, 1e-15
    t = np.arange(0, 30e-12, dt)
    trace = Trace(t, (1 - np.exp(-t / tau))[:, None], ("out",), np.array([1.0]))
    assert extract_crossing(trace) == pytest.approx(tau * math.log(2), abs=dt)


def test_extract_crossing_errors():
    t = np.linspace(0, 1e-12, 11)
    unsettled = Trace(t, np.linspace(0, 0.9, 11)[:, None], ("a",), np.array([1.0]))
    with pytest.raises(NotSettledError):
        extract_crossing(unsettled)
    flat = Trace(t, np.full((11, 1), 0.2), ("a",), np.array([0.2]))
    with pytest.raises(NoCrossingError):
        extract_crossing(flat)


def test_falling_victim_matches_rising(responses):
    r = responses(3)
    assert r.delay("udu", 2) == pytest.approx(r.delay("dud", 2), rel=1e-9)


def test_superpose_example(bus):
    spec = bus(6).with_(segments=20)
    net = build_network(spec)
    dt, t_end = 1e-13, 40e-12
    singles = ["u-----", "-u----", "--u---", "---u--", "----d-"]
    parts = [simulate(net, p, dt, t_end) for p in singles]
    whole = simulate(net, "uuuud-", dt, t_end)
    total = superpose(parts, [1.0] * len(parts))
    assert np.max(np.abs(total.voltages - whole.voltages)) < 1e-6
    zero = superpose(parts[:2], [0.0, 0.0])
    assert np.all(zero.voltages == 0)


def test_superpose_reverse_is_constant(bus):
    spec = bus(3).with_(segments=10)
    net = build_network(spec)
    a = simulate(net, "010>111", 1e-13, 20e-12)
    b = simulate(net, "111>010", 1e-13, 20e-12)
    total = superpose([a, b], [1, 1])
    assert np.allclose(total.voltages, [1, 2, 1], atol=1e-9)


def test_superpose_grid_mismatch(bus):
    net = build_network(bus(2).with_(segments=4))
    a = simulate(net, "uu", 1e-13, 5e-12)
    b = simulate(net, "uu", 2e-13, 5e-12)
    with pytest.raises(GridMismatchError):
        superpose([a, b], [1, 1])


@settings(max_examples=15, deadline=None)
@given(st.lists(st.sampled_from([-1, 0, 1]), min_size=5, max_size=5).filter(lambda d: d[2] != 0))
def test_linearity(responses, bus, d):
    r = responses(5)
    net = build_network(bus(5))
    direct = simulate(net, d, dt=r.dt, t_end=float(r.times[-1]))
    assert np.max(np.abs(direct.voltages[:, 2] - r.trace(d, 3))) < 1e-6


def test_dt_convergence(bus):
    spec = bus(3)
    net = build_network(spec)
    dt = select_dt(spec)
    for pattern in ["dud", "uuu", "-u-"]:
        coarse = simulate(net, pattern, dt)
        fine = simulate(net, pattern, dt / 2)
        a, b = extract_crossing(coarse, node=1), extract_crossing(fine, node=1)
        assert abs(a - b) / b < 1e-3


@pytest.mark.parametrize("pattern", ["dud", "uuu"])
def test_segment_convergence(bus, pattern):
    spec = bus(3)
    coarse = {e.wire: e.value for e in worst_delay_sim(pattern, spec)}[2]
    fine = {e.wire: e.value for e in worst_delay_sim(pattern, spec.with_(segments=200))}[2]
    assert abs(coarse - fine) / fine < 5e-3


def test_mirror_symmetry(bus):
    spec = bus(4).with_(segments=20)
    net = build_network(spec)
    a = simulate(net, "ud-u", 1e-13, 30e-12)
    b = simulate(net, "u-du", 1e-13, 30e-12)
    assert np.allclose(a.voltages, b.voltages[:, ::-1], atol=1e-12)


def test_dc_correctness(bus):
    spec = bus(3)
    trace = simulate(build_network(spec), "110>011")
    assert np.allclose(trace.voltages[-1], [0, 1, 1], atol=1e-4)


def test_passivity_without_coupling(bus):
    spec = bus(2).with_(cc=0.0, segments=10)
    net = build_network(spec)
    record = [(w, j) for w in (1, 2) for j in range(0, 11)]
    trace = simulate(net, "u-", dt=spec.tau0_intrinsic / 20, t_end=10e-12, record=record)
    steps = np.diff(trace.voltages, axis=0)
    assert np.all(steps >= -1e-12)


def test_pattern_width_checked(bus):
    with pytest.raises(InvalidPatternError):
        worst_delay_sim("uu", bus(3))


def test_trace_csv(bus):
    trace = simulate(build_network(bus(2).with_(segments=3)), "ud", 1e-13, 1e-12)
    lines = trace.to_csv().splitlines()
    assert lines[0] == "t_seconds,W1N3,W2N3"
    assert len(lines) == trace.times.size + 1


def test_spice_netlist(bus):
    spec = bus(2).with_(segments=3, load_capacitance=1e-15)
    deck = spice_netlist(spec, "ud")
    assert deck.count("\nR1_") == 3 and deck.count("\nCC1_") == 3
    assert "CL2 W2N3 0" in deck and deck.rstrip().endswith(".end")
    assert "RS1 W1S W1N0 100" in deck


def test_step_responses_symmetry_matches_full(bus):
    spec = bus(4).with_(segments=20)
    a = step_responses(spec, dt=1e-13, t_end=60e-12, use_symmetry=True)
    b = step_responses(spec, dt=1e-13, t_end=60e-12, use_symmetry=False)
    assert np.max(np.abs(a.h - b.h)) < 1e-12
