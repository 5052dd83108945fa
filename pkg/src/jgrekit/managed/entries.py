from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..ir.errors import Diagnostic
from ..ir.model import Assign, Invoke, Lit, Operand, ProgramDb, Return, method_id
from .resolve import Resolver

ADD_SERVICE = ("ServiceManager", "addService")
REGISTER_SERVICE = ("SystemServiceRegistry", "registerService")
FACTORY_METHOD = "createService"


@dataclass(frozen=True)
class EntryPoint:
    service_name: str
    kind: str  # system_service | service_helper
    cls: str
    method: str
    visibility: str = "public"
    permission: Optional[str] = None

    @property
    def method_id(self) -> str:
        return method_id(self.cls, self.method)

    def to_dict(self) -> dict:
        return {
            "service": self.service_name,
            "kind": self.kind,
            "class": self.cls,
            "method": self.method,
            "visibility": self.visibility,
            "permission": self.permission,
        }


def _simple(name: str) -> str:
    return name.rsplit(".", 1)[-1]


def string_value(r: Resolver, mid: str, op: Operand) -> Optional[str]:
    """Literal bound to ``op`` through assignment chains, if unique."""
    seen: set[str] = set()
    while not isinstance(op, Lit):
        if op in seen:
            return None
        seen.add(op)
        defs = r._defs.get(mid, {}).get(op, [])
        if len(defs) != 1 or not isinstance(defs[0], Assign):
            return None
        op = defs[0].src
    return op.value


def _class_entries(db: ProgramDb, cls: str, service: str, kind: str) -> list[EntryPoint]:
    c = db.cls(cls)
    if c is None:
        return []
    return [
        EntryPoint(service, kind, cls, m.name, m.visibility, m.permission)
        for m in c.methods
        if not m.is_native and not m.abstract
    ]


def extract_entry_points(
    db: ProgramDb, resolver: Optional[Resolver] = None, diagnostics: Optional[list[Diagnostic]] = None
) -> list[EntryPoint]:
    r = resolver or Resolver(db)
    diags = diagnostics if diagnostics is not None else []
    found: dict[tuple[str, str, str], EntryPoint] = {}

    def note(code: str, msg: str, loc) -> None:
        diags.append(Diagnostic(code, msg, loc.unit, loc.line))

    for mid in r.methods():
        for s in r.method(mid).body:
            if not isinstance(s, Invoke) or s.dispatch != "static":
                continue
            key = (_simple(s.recv), s.method)
            if key not in (ADD_SERVICE, REGISTER_SERVICE) or len(s.args) < 2:
                continue
            name = string_value(r, mid, s.args[0])
            if not name:
                note("UnresolvedServiceName", f"{mid}: service name of {s.method} is not a constant", s.loc)
                continue
            if key == ADD_SERVICE:
                kind = "system_service"
                types = r.points_to(mid, s.args[1])
            else:
                kind = "service_helper"
                types = set()
                for f in sorted(r.points_to(mid, s.args[-1])):
                    impl = r.h.resolve(f, FACTORY_METHOD)
                    if impl is None:
                        continue
                    fmid = method_id(impl, FACTORY_METHOD)
                    for rs in r.method(fmid).body:
                        if isinstance(rs, Return) and rs.src is not None:
                            types |= r.points_to(fmid, rs.src)
            managed = sorted(t for t in types if db.cls(t) is not None)
            if not managed:
                note("UnresolvedType", f"{mid}: no concrete type for service {name!r}", s.loc)
                continue
            for t in managed:
                for e in _class_entries(db, t, name, kind):
                    found.setdefault((e.service_name, e.cls, e.method), e)

    for fname, fn in sorted(db.native_fns.items()):
        if any(_simple(c.callee.replace("::", ".")) == "addService" for c in fn.calls):
            diags.append(Diagnostic("NativeServiceSkipped", f"native fn {fname} registers a service; not analyzed", fn.loc.unit, fn.loc.line))

    return sorted(found.values(), key=lambda e: (e.service_name, e.kind, e.cls, e.method))
