"""Scenario files: a bus, the patterns to evaluate and the evaluators to use.

Scenario files are JSON with the unit spelled out in every physical key::

    {
      "bus": {"wire_count": 3, "r_ohm_per_meter": 13750.0, ...},
      "patterns": ["dud", {"worst_per_class": "three"}],
      "models": ["baseline", "three-wire", "simulator"],
      "buffered": true
    }

A pattern entry is either a pattern string or a directive.  The directive
``{"worst_per_class": <model>}`` expands to that model's worst pattern of
every class; ``{"search": <method>}`` runs the worst-pattern search for every
class on the scenario bus with the simulator oracle.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .analytic import WORST_PATTERNS, model_key
from .bus import BusSpec, CrosstalkClass, TransitionPattern
from .errors import InvalidPatternError, InvalidSpecError, UnsupportedModelError

BUS_KEYS = {
    "wire_count": "wire_count",
    "r_ohm_per_meter": "r",
    "c_farad_per_meter": "c",
    "cc_farad_per_meter": "cc",
    "length_meter": "length",
    "driver_resistance_ohm": "driver_resistance",
    "load_capacitance_farad": "load_capacitance",
    "segments": "segments",
}

MODELS = ("baseline", "three-wire", "five-wire", "boundary1", "boundary2", "profile", "simulator")
ANALYTIC_MODELS = MODELS[:-1]


def bus_from_dict(data: dict) -> BusSpec:
    unknown = set(data) - set(BUS_KEYS)
    if unknown:
        raise InvalidSpecError(f"unknown bus keys: {sorted(unknown)}")
    try:
        return BusSpec(**{BUS_KEYS[k]: v for k, v in data.items()})
    except TypeError as exc:
        raise InvalidSpecError(str(exc)) from None


def bus_to_dict(spec: BusSpec) -> dict:
    return {k: getattr(spec, attr) for k, attr in BUS_KEYS.items()}


@dataclass
class Scenario:
    bus: BusSpec
    patterns: list = field(default_factory=list)
    models: list[str] = field(default_factory=lambda: ["baseline", "simulator"])
    buffered: bool = True
    victim: int | None = None
    output: str = "table"

    def __post_init__(self):
        for model in self.models:
            if model not in MODELS:
                raise UnsupportedModelError(f"unknown model {model!r}; choose from {', '.join(MODELS)}")
        if self.victim is not None and not 1 <= self.victim <= self.bus.wire_count:
            raise InvalidSpecError(f"victim {self.victim} outside 1..{self.bus.wire_count}")
        for entry in self.patterns:
            if isinstance(entry, str):
                width = TransitionPattern.parse(entry).width
                if width != self.bus.wire_count:
                    raise InvalidPatternError(
                        f"pattern {entry!r} has {width} wires, bus has {self.bus.wire_count}")
            elif isinstance(entry, dict) and set(entry) <= {"worst_per_class", "search"} and len(entry) == 1:
                if "worst_per_class" in entry:
                    key = model_key(entry["worst_per_class"])
                    if len(WORST_PATTERNS[key][0]) != self.bus.wire_count:
                        raise InvalidPatternError(
                            f"{entry['worst_per_class']} patterns do not fit a {self.bus.wire_count}-wire bus")
            else:
                raise InvalidPatternError(f"unrecognised pattern entry {entry!r}")

    @property
    def victim_wire(self) -> int:
        return self.victim if self.victim is not None else (self.bus.wire_count + 1) // 2

    def to_dict(self) -> dict:
        data = {"bus": bus_to_dict(self.bus), "patterns": list(self.patterns), "models": list(self.models),
                "buffered": self.buffered, "output": self.output}
        if self.victim is not None:
            data["victim"] = self.victim
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        if "bus" not in data:
            raise InvalidSpecError("scenario has no 'bus' section")
        return cls(
            bus_from_dict(data["bus"]),
            list(data.get("patterns", [])),
            list(data.get("models", ["baseline", "simulator"])),
            bool(data.get("buffered", True)),
            data.get("victim"),
            data.get("output", "table"),
        )

    @classmethod
    def load(cls, path: str | Path | None = None) -> "Scenario":
        """Read a scenario file; with no path, the bundled default."""
        if path is None:
            text = resources.files("xtalk").joinpath("data/default_scenario.json").read_text()
        else:
            text = Path(path).read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidSpecError(f"scenario is not valid JSON: {exc}") from None
        return cls.from_dict(data)


def default_bus(wire_count: int | None = None) -> BusSpec:
    spec = Scenario.load().bus
    return spec if wire_count is None else spec.with_(wire_count=wire_count)


def expand_patterns(scenario: Scenario, search_runner=None) -> list[tuple[str, TransitionPattern]]:
    """(label, pattern) for every entry; directives expand to one row per class."""
    rows = []
    for entry in scenario.patterns:
        if isinstance(entry, str):
            rows.append((entry, TransitionPattern.parse(entry)))
        elif "worst_per_class" in entry:
            key = model_key(entry["worst_per_class"])
            for i, pat in enumerate(WORST_PATTERNS[key]):
                rows.append((f"{i}C", TransitionPattern.parse(pat)))
        else:
            if search_runner is None:
                raise UnsupportedModelError("search directives need a search runner")
            for cls in CrosstalkClass:
                rows.append((str(cls), search_runner(entry["search"], cls)))
    return rows
