"""Tabular reports rendered as aligned text, CSV or JSON.

Values are stored raw (delays in seconds); text and CSV show delays in ps
and percentages with two decimals.  JSON keeps the raw values and re-parses
into an equal ``Report``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

KINDS = ("text", "seconds", "percent", "int")


def _cell(value, kind: str) -> str:
    if value is None:
        return "-"
    if isinstance(value, str):
        return value
    if kind == "seconds":
        return f"{value * 1e12:.2f}"
    if kind == "percent":
        return f"{value:.2f}"
    return str(value)


@dataclass
class Report:
    title: str
    columns: list[str]
    kinds: list[str]
    rows: list[list] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    payload: dict | None = None

    def __post_init__(self):
        if len(self.columns) != len(self.kinds):
            raise ValueError("one kind per column")
        for kind in self.kinds:
            if kind not in KINDS:
                raise ValueError(f"unknown column kind {kind!r}")

    def add(self, *values) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"row has {len(values)} cells, report has {len(self.columns)} columns")
        self.rows.append(list(values))

    def headers(self) -> list[str]:
        suffix = {"seconds": " (ps)", "percent": " (%)"}
        return [c + suffix.get(k, "") for c, k in zip(self.columns, self.kinds)]

    def formatted_rows(self) -> list[list[str]]:
        return [[_cell(v, k) for v, k in zip(row, self.kinds)] for row in self.rows]

    def to_table(self) -> str:
        head = self.headers()
        body = self.formatted_rows()
        widths = [max([len(h)] + [len(r[i]) for r in body]) for i, h in enumerate(head)]
        lines = [self.title] if self.title else []
        lines.append("  ".join(h.ljust(w) for h, w in zip(head, widths)).rstrip())
        lines.append("  ".join("-" * w for w in widths))
        for r in body:
            lines.append("  ".join(c.rjust(w) if k != "text" else c.ljust(w)
                                   for c, w, k in zip(r, widths, self.kinds)).rstrip())
        if not body:
            lines.append("(no rows)")
        lines.extend(self.notes)
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.headers())
        writer.writerows(self.formatted_rows())
        return buf.getvalue()

    def to_dict(self) -> dict:
        data = {"title": self.title, "columns": self.columns, "kinds": self.kinds,
                "rows": self.rows, "notes": self.notes}
        if self.payload is not None:
            data["payload"] = self.payload
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "Report":
        return cls(data["title"], list(data["columns"]), list(data["kinds"]),
                   [list(r) for r in data["rows"]], list(data.get("notes", [])), data.get("payload"))

    @classmethod
    def from_json(cls, text: str) -> "Report":
        return cls.from_dict(json.loads(text))

    def render(self, fmt: str) -> str:
        if fmt == "table":
            return self.to_table()
        if fmt == "csv":
            return self.to_csv()
        if fmt == "json":
            return self.to_json()
        raise ValueError(f"unknown format {fmt!r}")
