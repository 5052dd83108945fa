from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..ir.model import OBJECT_TYPE, AnalysisConfig, Assign, FieldGet, FieldPut, Invoke, Lit, ProgramDb
from .callgraph import CallGraph
from .resolve import Resolver


@dataclass(frozen=True)
class EscapeSite:
    container_kind: str  # field | static_field
    container: tuple[str, str]
    sink_call: str  # "Cls.method#index"
    sink_signature: str
    escaping_type: str
    binder_related: bool

    @property
    def method_id(self) -> str:
        return self.sink_call.split("#", 1)[0]

    def to_dict(self) -> dict:
        return {
            "container_kind": self.container_kind,
            "container": list(self.container),
            "sink_call": self.sink_call,
            "sink_signature": self.sink_signature,
            "escaping_type": self.escaping_type,
            "binder_related": self.binder_related,
        }


def sink_signature(r: Resolver, mid: str, s: Invoke) -> Optional[str]:
    """The configured collection sink matched by ``s``, if any."""
    if s.dispatch == "static":
        return None
    sinks = r.config.collection_sinks
    for t in sorted(r.static_types(mid, s.recv) | r.points_to(mid, s.recv)):
        for a in [t, *sorted(r.h.ancestors.get(t, ()))]:
            sig = f"{a}.{s.method}"
            if sig in sinks:
                return sig
    return None


def _alias_sets(body) -> dict[str, str]:
    parent: dict[str, str] = {}

    def find(x: str) -> str:
        parent.setdefault(x, x)
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for s in body:
        if isinstance(s, Assign) and not isinstance(s.src, Lit):
            a, b = find(s.dst), find(s.src)
            if a != b:
                parent[max(a, b)] = min(a, b)
    return {x: find(x) for x in list(parent)}


def containers_of(r: Resolver, mid: str, var: str) -> set[tuple[str, str]]:
    """Fields the collection in ``var`` is read from or stored into."""
    body = r.method(mid).body
    roots = _alias_sets(body)
    group = roots.get(var, var)
    same = lambda v: isinstance(v, str) and roots.get(v, v) == group  # noqa: E731
    out: set[tuple[str, str]] = set()
    for s in body:
        if isinstance(s, FieldGet) and same(s.dst):
            out |= r.fields_of(mid, s.recv, s.field)
        elif isinstance(s, FieldPut) and same(s.src):
            out |= r.fields_of(mid, s.recv, s.field)
    return out


def escaping_type(r: Resolver, mid: str, s: Invoke) -> tuple[str, bool]:
    types: set[str] = set()
    for a in s.args:
        t = r.points_to(mid, a) or r.static_types(mid, a)
        types |= t
    ordered = sorted(types)
    for t in ordered:
        if r.binder_related(t):
            return t, True
    return (ordered[0] if ordered else OBJECT_TYPE), False


def escapes_in_method(r: Resolver, mid: str) -> list[EscapeSite]:
    m = r.method(mid)
    if m is None:
        return []
    out = []
    for i, s in enumerate(m.body):
        if not isinstance(s, Invoke):
            continue
        sig = sink_signature(r, mid, s)
        if sig is None:
            continue
        containers = containers_of(r, mid, s.recv)
        if not containers:
            continue
        etype, related = escaping_type(r, mid, s)
        for c in sorted(containers):
            kind = "static_field" if r.field_static(*c) else "field"
            out.append(EscapeSite(kind, c, f"{mid}#{i}", sig, etype, related))
    return out


def find_escapes(
    db: ProgramDb,
    cg: CallGraph,
    config: Optional[AnalysisConfig] = None,
    resolver: Optional[Resolver] = None,
) -> list[EscapeSite]:
    if config is not None and config is not db.config:
        db = db.with_config(config)
        resolver = None
    r = resolver or Resolver(db)
    out: list[EscapeSite] = []
    for mid in cg.nodes:
        out.extend(escapes_in_method(r, mid))
    return out
