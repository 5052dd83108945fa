"""Report rendering: schema-versioned JSON, a per-service table, and CSV."""

from __future__ import annotations

import csv
import io
import json
from collections import Counter
from typing import Optional, Sequence

from .detector import EXPLOITABILITY, LeakFinding

SCHEMA_VERSION = 1
FORMATS = ("json", "table", "csv")
CSV_HEADER = ["service", "class", "method", "kind", "exploitability", "in_greylist", "jni", "native_fn", "escape", "escaping_type"]


class UnknownFormat(ValueError):
    def __init__(self, fmt: str):
        super().__init__(f"unknown report format {fmt!r} (expected one of {', '.join(FORMATS)})")
        self.fmt = fmt


def summarize(findings: Sequence[LeakFinding]) -> dict:
    by_class = Counter(f.exploitability for f in findings)
    return {
        "findings": len(findings),
        "services": len({f.entry.service_name for f in findings}),
        "by_exploitability": {k: by_class.get(k, 0) for k in EXPLOITABILITY},
    }


def group_by_service(findings: Sequence[LeakFinding]) -> dict[str, list[LeakFinding]]:
    groups: dict[str, list[LeakFinding]] = {}
    for f in sorted(findings, key=lambda f: f.key):
        groups.setdefault(f.entry.service_name, []).append(f)
    return groups


def _row(f: LeakFinding) -> list[str]:
    return [
        f.entry.service_name,
        f.entry.cls,
        f.entry.method,
        f.entry.kind,
        f.exploitability,
        "yes" if f.exploitability == "greylist" else "no",
        f.jni.method_id,
        f.jni.native_fn,
        f"{f.escape.container[0]}.{f.escape.container[1]}",
        f.escape.escaping_type,
    ]


def interface_label(f: LeakFinding) -> str:
    """Method name; helper entries are qualified by their manager class."""
    if f.entry.kind == "service_helper":
        return f"{f.entry.cls.rsplit('.', 1)[-1]}.{f.entry.method}"
    return f.entry.method


def _table(findings: Sequence[LeakFinding]) -> str:
    header = ["Service", "Interface", "Exploitability", "In GreyList", "JGR via"]
    rows = []
    for service, group in group_by_service(findings).items():
        for i, f in enumerate(group):
            rows.append([
                service if i == 0 else "",
                interface_label(f),
                f.exploitability,
                "yes" if f.exploitability == "greylist" else "no",
                f.jni.native_fn,
            ])
    widths = [max(len(r[i]) for r in [header, *rows]) for i in range(len(header))]
    line = lambda r: "  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip()  # noqa: E731
    out = [line(header), line(["-" * w for w in widths])]
    out += [line(r) for r in rows]
    s = summarize(findings)
    out.append("")
    out.append(f"{s['findings']} vulnerable interfaces in {s['services']} services")
    return "\n".join(out) + "\n"


def render_report(findings: Sequence[LeakFinding], fmt: str = "json", meta: Optional[dict] = None) -> str:
    if fmt == "json":
        doc: dict = {"version": SCHEMA_VERSION, "findings": [f.to_dict() for f in sorted(findings, key=lambda f: f.key)]}
        if meta is not None:
            doc.update(meta)
            doc["summary"] = summarize(findings)
            doc["services"] = {k: [interface_label(f) for f in v] for k, v in group_by_service(findings).items()}
        return json.dumps(doc, indent=None if meta is None else 2, separators=(",", ":") if meta is None else None)
    if fmt == "table":
        return _table(findings)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for f in sorted(findings, key=lambda f: f.key):
            w.writerow(_row(f))
        return buf.getvalue()
    raise UnknownFormat(fmt)
