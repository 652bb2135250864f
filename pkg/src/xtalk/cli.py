"""Command-line front end.

Verbs: classify, delay, simulate, compare, worst, cac.  Reports go to stdout
(or ``--out``) as an aligned table, CSV or JSON; failures print a JSON error
object on stderr and exit with status 2.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .analytic import crossing_time, table_delay, window_waveform
from .bus import (BusSpec, CrosstalkClass, TransitionPattern, baseline_delay, classify_bus,
                  classify_wire)
from .cac import (FAMILY_CAPS, Codebook, certification_report, codebook_worst_delays, family_codebook,
                  generate_codebook, model_bounds)
from .errors import NoTransitionError, UnsupportedModelError, XtalkError
from .report import Report
from .scenario import ANALYTIC_MODELS, Scenario, expand_patterns
from .search import AnalyticOracle, SimulatorOracle, search
from .simulator import build_network, select_dt, simulate, worst_delay_sim

# model name -> (window width, observed position inside the window, table key)
_WINDOWS = {"three-wire": (3, 2, "three"), "five-wire": (5, 3, "five"),
            "boundary1": (3, 1, "b1"), "boundary2": (4, 2, "b2")}


class _Sim:
    """Simulator runs for one bus, sharing the network and time step."""

    def __init__(self, spec: BusSpec):
        self.spec = spec
        self.net = build_network(spec)
        self.dt = select_dt(spec)
        self._cache = {}

    def delays(self, pattern: TransitionPattern) -> dict[int, float]:
        key = pattern.deltas
        if key not in self._cache:
            self._cache[key] = {e.wire: e.value for e in worst_delay_sim(pattern, self.spec, self.dt, self.net)}
        return self._cache[key]


def _window(deltas: tuple[int, ...], victim: int, width: int, obs: int) -> tuple[int, ...]:
    """Window of ``width`` wires placing the victim at ``obs``, flipped for the far edge."""
    m = len(deltas)
    start = victim - obs
    if 0 <= start and start + width <= m:
        return deltas[start:start + width]
    rev = deltas[::-1]
    start = (m + 1 - victim) - obs
    if 0 <= start and start + width <= m and (obs == 1 or width == 4):
        return rev[start:start + width]
    raise UnsupportedModelError(f"wire {victim} of a {m}-wire bus has no window for this model")


def model_delay(model: str, pattern: TransitionPattern, victim: int, spec: BusSpec, buffered: bool,
                sim: _Sim | None = None) -> float:
    d = pattern.deltas
    if d[victim - 1] == 0:
        raise NoTransitionError(f"wire {victim} does not switch")
    if model == "baseline":
        return baseline_delay(d, victim, spec).value
    if model == "simulator":
        return (sim or _Sim(spec)).delays(pattern)[victim]
    if model == "profile":
        return crossing_time(window_waveform(d, victim, spec, buffered)[1])
    if model in _WINDOWS:
        width, obs, key = _WINDOWS[model]
        if model.startswith("boundary") and victim not in (obs, len(d) + 1 - obs):
            raise UnsupportedModelError(f"{model} applies to wire {obs} or {len(d) + 1 - obs}")
        win = _window(d, victim, width, obs)
        return table_delay(classify_wire(win, obs), key, spec, buffered)
    raise UnsupportedModelError(f"unknown model {model!r}")


def _try(func, *args):
    try:
        return func(*args)
    except XtalkError as exc:
        return f"{exc.code}: {exc}"


def _search_runner(spec: BusSpec):
    oracle = None

    def run(method, cls):
        nonlocal oracle
        oracle = oracle or SimulatorOracle(spec)
        return search(method, spec.wire_count, cls, oracle).pattern
    return run


def _scenario(args) -> Scenario:
    scenario = Scenario.load(args.scenario)
    patterns = getattr(args, "pattern", None)
    if patterns:
        width = TransitionPattern.parse(patterns[0]).width
        bus = scenario.bus if args.scenario else scenario.bus.with_(wire_count=width)
        scenario = Scenario(bus, list(patterns), scenario.models, scenario.buffered,
                            scenario.victim if args.scenario else None, scenario.output)
    if getattr(args, "models", None):
        scenario = Scenario(scenario.bus, scenario.patterns, args.models.split(","), scenario.buffered,
                            scenario.victim, scenario.output)
    if getattr(args, "victim", None) is not None:
        scenario.victim = args.victim
        scenario.__post_init__()
    if getattr(args, "unbuffered", False):
        scenario.buffered = False
    return scenario


def cmd_classify(args) -> Report:
    pattern = TransitionPattern.parse(args.pattern)
    classes, worst = classify_bus(pattern.deltas)
    report = Report(f"classes of {pattern}", ["wire", "class"], ["int", "text"])
    for k, c in enumerate(classes, start=1):
        report.add(k, str(c))
    if args.coupling is not None:
        report.columns.append("factor")
        report.kinds.append("text")
        for row, c in zip(report.rows, classes):
            row.append(f"{1 + int(c) * args.coupling:.4g}")
    report.notes = [" ".join(str(c) for c in classes), f"bus max: {worst}"]
    return report


def cmd_delay(args) -> Report:
    scenario = _scenario(args)
    spec, victim = scenario.bus, scenario.victim_wire
    models = [m for m in scenario.models if args.include_simulator or m != "simulator"]
    sim = _Sim(spec) if "simulator" in models else None
    report = Report(f"wire {victim} delays on a {spec.wire_count}-wire bus", ["label", "pattern", "class"] + models,
                    ["text", "text", "text"] + ["seconds"] * len(models))
    for label, pattern in expand_patterns(scenario, _search_runner(spec)):
        cls = str(classify_wire(pattern.deltas, victim))
        report.add(label, pattern.arrows(), cls,
                   *[_try(model_delay, m, pattern, victim, spec, scenario.buffered, sim) for m in models])
    return report


def cmd_simulate(args) -> Report:
    scenario = _scenario(args)
    spec = scenario.bus
    sim = _Sim(spec)
    report = Report(f"simulated far-end delays, {spec.wire_count}-wire bus (dt = {sim.dt * 1e12:.4g} ps)",
                    ["label", "pattern", "wire", "class", "delay"], ["text", "text", "int", "text", "seconds"])
    for i, (label, pattern) in enumerate(expand_patterns(scenario, _search_runner(spec))):
        if not any(pattern.deltas):
            report.add(label, pattern.arrows(), None, None, "no transitions")
            continue
        try:
            delays = sim.delays(pattern)
        except XtalkError as exc:
            report.add(label, pattern.arrows(), None, None, f"{exc.code}: {exc}")
            continue
        for wire, value in delays.items():
            report.add(label, pattern.arrows(), wire, str(classify_wire(pattern.deltas, wire)), value)
        if args.trace:
            trace = simulate(sim.net, pattern, dt=sim.dt)
            path = Path(args.trace) / f"trace_{i:02d}_{pattern}.csv"
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(trace.to_csv())
            report.notes.append(f"trace written to {path}")
    return report


def cmd_compare(args) -> Report:
    scenario = _scenario(args)
    spec, victim = scenario.bus, scenario.victim_wire
    models = [m for m in scenario.models if m != "simulator"]
    if not models:
        raise UnsupportedModelError("compare needs at least one analytical model besides the simulator")
    reference = args.reference
    if reference != "simulator" and reference not in ANALYTIC_MODELS:
        raise UnsupportedModelError(f"unknown reference model {reference!r}")
    sim = _Sim(spec) if reference == "simulator" else None
    columns, kinds = ["label", "pattern", "class", reference], ["text", "text", "text", "seconds"]
    for m in models:
        columns += [m, f"{m} err", f"{m} |err|"]
        kinds += ["seconds", "percent", "percent"]
    report = Report(f"wire {victim} delays against {reference}", columns, kinds)
    for label, pattern in expand_patterns(scenario, _search_runner(spec)):
        row = [label, pattern.arrows(), str(classify_wire(pattern.deltas, victim))]
        ref = _try(model_delay, reference, pattern, victim, spec, scenario.buffered, sim)
        row.append(ref)
        for m in models:
            value = _try(model_delay, m, pattern, victim, spec, scenario.buffered, sim)
            if isinstance(value, float) and isinstance(ref, float):
                err = (value - ref) / ref * 100
                row += [value, err, abs(err)]
            else:
                row += [value, None, None]
        report.add(*row)
    return report


def cmd_worst(args) -> Report:
    spec = Scenario.load(args.scenario).bus.with_(wire_count=args.wires)
    oracle = SimulatorOracle(spec) if args.oracle == "simulator" else AnalyticOracle(spec, not args.unbuffered)
    classes = list(CrosstalkClass) if args.cls == "all" else [CrosstalkClass.parse(args.cls)]
    report = Report(f"worst patterns, {args.wires} wires, {args.method} with the {args.oracle} oracle",
                    ["class", "pattern", "delay", "passes", "evaluations", "trajectory"],
                    ["text", "text", "seconds", "int", "int", "text"])
    found = []
    for cls in classes:
        r = search(args.method, args.wires, cls, oracle)
        found.append(r.to_dict())
        report.add(str(cls), r.pattern.arrows(), r.delay, r.iterations, r.evaluations,
                   " > ".join(str(p) for p in r.trajectory))
    report.payload = {"searches": found}
    return report


def cmd_cac(args) -> Report:
    spec = Scenario.load(args.scenario).bus.with_(wire_count=args.width)
    if args.cap is not None:
        book = generate_codebook(args.width, args.cap)
        name = f"cap {CrosstalkClass.parse(args.cap)}"
    else:
        book = family_codebook(args.family, args.width)
        name = args.family.upper()
    cert = certification_report(book)
    report = Report(f"{name} codebook on {args.width} wires", ["wire", "worst delay", "transition"],
                    ["text", "seconds", "text"])
    report.notes = [f"codewords: {len(book)}", f"transitions: {book.transition_count}",
                    f"certified: {'yes' if cert['valid'] else 'NO'}", f"optimal: {'yes' if book.optimal else 'no'}"]
    payload = {"codebook": book.to_dict(), "certification": cert}
    if args.evaluator != "none":
        delays = codebook_worst_delays(book, spec, args.evaluator, buffered=not args.unbuffered)
        for k, (value, (u, v)) in enumerate(zip(delays.per_wire, delays.per_wire_transition), start=1):
            report.add(str(k), value, f"{u}>{v}" if u else "-")
        for label, value in model_bounds(book.class_cap, spec, not args.unbuffered).items():
            report.add(label, value, "model")
        report.notes.append(f"worst: wire {delays.worst_wire}")
        payload["delays"] = delays.to_dict()
    if args.export:
        Path(args.export).write_text(book.to_json() + "\n")
        report.notes.append(f"codebook written to {args.export}")
    report.payload = payload
    return report


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


class _UsageError(Exception):
    code = "usage"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="scenario JSON file (default: bundled reference bus)")
    common.add_argument("--format", choices=("table", "csv", "json"), default="table")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--unbuffered", action="store_true", help="use the unbuffered (ideal source) models")

    runs = argparse.ArgumentParser(add_help=False)
    runs.add_argument("--pattern", action="append", help="pattern to evaluate (repeatable; replaces scenario patterns)")
    runs.add_argument("--models", help="comma-separated evaluator list (replaces scenario models)")
    runs.add_argument("--victim", type=int, help="observed wire (default: middle wire)")

    parser = _Parser(prog="xtalk", description="Crosstalk delay models, RC bus simulation and codebook analysis.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("classify", parents=[common], help="per-wire crosstalk classes of a pattern")
    p.add_argument("pattern")
    p.add_argument("--lambda", dest="coupling", type=float, help="also print delay factors 1 + i*lambda")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("delay", parents=[common, runs], help="model delays of the observed wire")
    p.add_argument("--no-simulator", dest="include_simulator", action="store_false",
                   help="skip the simulator even if the scenario lists it")
    p.set_defaults(func=cmd_delay)

    p = sub.add_parser("simulate", parents=[common, runs], help="simulated delays of every switching wire")
    p.add_argument("--trace", metavar="DIR", help="also write far-end waveforms as CSV into DIR")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", parents=[common, runs], help="model delays with error against a reference")
    p.add_argument("--reference", default="simulator")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("worst", parents=[common], help="worst transition pattern of each class")
    p.add_argument("wires", type=int)
    p.add_argument("cls", metavar="class", help="class such as 2C, or 'all'")
    p.add_argument("--method", choices=("alg1", "exhaustive", "symmetric"), default="alg1")
    p.add_argument("--oracle", choices=("simulator", "analytic"), default="simulator")
    p.set_defaults(func=cmd_worst)

    p = sub.add_parser("cac", parents=[common], help="build, certify and time a crosstalk-avoidance codebook")
    p.add_argument("width", type=int)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--family", choices=sorted(FAMILY_CAPS), default="FPC")
    group.add_argument("--cap", help="explicit class cap such as 3C")
    p.add_argument("--evaluator", choices=("simulator", "analytic", "none"), default="simulator")
    p.add_argument("--export", help="write the codebook JSON here")
    p.set_defaults(func=cmd_cac)
    return parser


def _fail(code: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": code, "message": message}) + "\n")
    return 2


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        report = args.func(args)
        text = report.render(args.format)
    except _UsageError as exc:
        return _fail("usage", str(exc))
    except XtalkError as exc:
        return _fail(exc.code, str(exc))
    except (ValueError, OSError) as exc:
        return _fail(type(exc).__name__, str(exc))
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
