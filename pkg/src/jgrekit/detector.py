"""Pair JGR-creating native reachability with binder-related collection escapes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .ir.errors import Diagnostic
from .ir.hierarchy import ClassHierarchy
from .ir.model import AnalysisConfig, ProgramDb
from .managed.callgraph import CallGraph, build_call_graph
from .managed.entries import EntryPoint, extract_entry_points
from .managed.escapes import EscapeSite, escapes_in_method
from .managed.resolve import Resolver
from .native import JniBinding, NativePath, check_native_path, extract_jni_bindings, jgr_creating_bindings

EXPLOITABILITY = ("public", "greylist", "hidden", "permission_gated")


@dataclass(frozen=True)
class LeakFinding:
    entry: EntryPoint
    managed_path: tuple[str, ...]
    jni: JniBinding
    native_path: NativePath
    escape: EscapeSite
    exploitability: str = "public"
    via: Optional[str] = None  # system-service method a helper forwards to

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.entry.service_name, self.entry.cls, self.entry.method)

    def to_dict(self) -> dict:
        return {
            "entry": self.entry.to_dict(),
            "managed_path": list(self.managed_path),
            "jni": self.jni.to_dict(),
            "native_path": list(self.native_path.frames),
            "escape": self.escape.to_dict(),
            "exploitability": self.exploitability,
            "via": self.via,
            "path_feasibility": "unverified",
        }


def classify_exploitability(finding: LeakFinding, config: AnalysisConfig) -> str:
    e = finding.entry
    if e.permission:
        return "permission_gated"
    if e.visibility == "greylist" or e.method_id in config.greylist:
        return "greylist"
    if e.visibility == "hidden":
        return "hidden"
    return "public"


@dataclass
class Analysis:
    """Everything one detection run computed, kept for reporting."""

    findings: list[LeakFinding]
    entries: list[EntryPoint]
    graphs: dict[tuple[str, str, str], CallGraph]
    creating: list[tuple[JniBinding, NativePath]]
    diagnostics: list[Diagnostic]


def analyze(
    db: ProgramDb, hierarchy: Optional[ClassHierarchy] = None, config: Optional[AnalysisConfig] = None
) -> Analysis:
    if config is not None:
        db = db.with_config(config)
    config = db.config
    diags: list[Diagnostic] = []
    r = Resolver(db, hierarchy)
    extract_jni_bindings(db, diags)
    creating = jgr_creating_bindings(db)
    by_mid = {b.method_id: (b, p) for b, p in creating}
    entries = extract_entry_points(db, r, diags)
    graphs: dict[tuple[str, str, str], CallGraph] = {}
    escape_cache: dict[str, list[EscapeSite]] = {}

    def escapes(mid: str) -> list[EscapeSite]:
        if mid not in escape_cache:
            escape_cache[mid] = escapes_in_method(r, mid)
        return escape_cache[mid]

    findings: dict[tuple[str, str, str], LeakFinding] = {}
    for e in entries:
        cg = build_call_graph(db, r.h, e, resolver=r)
        graphs[(e.service_name, e.cls, e.method)] = cg
        if e.kind != "system_service":
            continue
        jni_nodes = sorted((d, n) for n, d in cg.nodes.items() if n in by_mid)
        if not jni_nodes:
            continue
        related = [
            (d, esc.sink_call, esc.container)
            for n, d in cg.nodes.items()
            for esc in escapes(n)
            if esc.binder_related
        ]
        if not related:
            continue
        _, target = jni_nodes[0]
        best = min(related)
        esc = next(x for x in escapes(best[1].split("#")[0]) if (x.sink_call, x.container) == best[1:])
        binding, npath = by_mid[target]
        path = cg.shortest_path(target)
        f = LeakFinding(e, tuple(path), binding, npath, esc)
        findings[f.key] = f

    # Helpers only count when they forward into an already vulnerable service method.
    service_hits: dict[str, LeakFinding] = {}
    for f in sorted(findings.values(), key=lambda f: f.key):
        service_hits.setdefault(f.entry.method_id, f)
    for e in entries:
        if e.kind != "service_helper":
            continue
        cg = graphs[(e.service_name, e.cls, e.method)]
        hits = sorted((d, n) for n, d in cg.nodes.items() if n in service_hits and n != e.method_id)
        if not hits:
            continue
        _, target = hits[0]
        base = service_hits[target]
        path = tuple(cg.shortest_path(target)) + base.managed_path[1:]
        f = LeakFinding(e, path, base.jni, base.native_path, base.escape, via=target)
        findings[f.key] = f

    out = []
    for key in sorted(findings):
        f = findings[key]
        out.append(LeakFinding(f.entry, f.managed_path, f.jni, f.native_path, f.escape, classify_exploitability(f, config), f.via))
    diags.extend(r.diagnostics)
    return Analysis(out, entries, graphs, creating, diags)


def detect(
    db: ProgramDb, hierarchy: Optional[ClassHierarchy] = None, config: Optional[AnalysisConfig] = None
) -> list[LeakFinding]:
    return analyze(db, hierarchy, config).findings


def check_finding(db: ProgramDb, f: LeakFinding) -> list[str]:
    """Re-validate a finding's witnesses against the db; returns problems found."""
    problems = []
    if not f.managed_path or f.managed_path[0] != f.entry.method_id:
        problems.append("managed path does not start at the entry")
    if f.managed_path and f.managed_path[-1] != f.jni.method_id:
        problems.append("managed path does not end at the JNI method")
    for mid in f.managed_path:
        if db.method(mid) is None:
            problems.append(f"unknown method {mid}")
    reg = {(r.managed_class, m): n for r in db.jni_registrations for m, n in r.entries}
    if reg.get((f.jni.managed_class, f.jni.managed_method)) != f.jni.native_fn:
        problems.append("jni binding not registered")
    if f.native_path.entry != f.jni.native_fn or not check_native_path(db, f.native_path):
        problems.append("native path invalid")
    if not f.escape.binder_related:
        problems.append("escape is not binder-related")
    return problems
