from __future__ import annotations

from collections import Counter

from .errors import CycleError, Diagnostic
from .hierarchy import _find_cycle, build_hierarchy
from .model import (
    NOLOC,
    SINK,
    FieldGet,
    Invoke,
    Lit,
    ProgramDb,
    defined_var,
    used_operands,
)


def validate(db: ProgramDb) -> list[Diagnostic]:
    """Check every ProgramDb invariant; an empty list means the db is clean."""
    out: list[Diagnostic] = []

    def diag(code: str, msg: str, loc, subject=None) -> None:
        out.append(Diagnostic(code, msg, loc.unit, loc.line, subject))

    classes = db.managed_classes
    for name, c in sorted(classes.items()):
        for p in c.parents:
            if not db.is_known_type(p):
                diag("UnresolvedName", f"{name} inherits from unknown type {p}", c.loc, p)
            elif p in classes and c.kind == "class" and p in c.extends and classes[p].is_interface:
                diag("BadInheritance", f"class {name} extends interface {p}", c.loc, p)
        for f in c.fields:
            if not db.is_known_type(f.type):
                diag("UnresolvedName", f"field {name}.{f.name} has unknown type {f.type}", f.loc, f.type)
        for m, count in Counter(m.name for m in c.methods).items():
            if count > 1:
                diag("DuplicateMethod", f"{name}.{m} declared {count} times", c.loc, m)
        for m in c.methods:
            mid = f"{name}.{m.name}"
            if m.is_native and m.body:
                diag("NativeMethodHasBody", f"native method {mid} has a body", m.loc, mid)
            if c.is_interface and m.body:
                diag("InterfaceMethodBody", f"interface method {mid} has a body", m.loc, mid)
            for _, t in m.params:
                if not db.is_known_type(t):
                    diag("UnresolvedName", f"{mid} parameter type {t} is unknown", m.loc, t)
            defined = {"this", *m.param_names}
            for s in m.body:
                for op in used_operands(s):
                    if isinstance(op, Lit):
                        continue
                    if isinstance(s, FieldGet) and op == s.recv and op not in defined and db.cls(op):
                        continue  # static field read through a class name
                    if op not in defined:
                        diag("UseBeforeDef", f"{mid}: variable {op!r} used before definition", s.loc, op)
                d = defined_var(s)
                if d:
                    defined.add(d)
                if isinstance(s, Invoke) and s.dispatch == "static":
                    target = db.cls(s.recv)
                    tm = target.method(s.method) if target else None
                    if target is not None and tm is None:
                        diag("UnknownMethod", f"{mid}: {s.recv} has no method {s.method}", s.loc, s.method)
                    elif tm is not None and len(tm.params) != len(s.args):
                        diag("ArityMismatch", f"{mid}: {s.recv}.{s.method} takes {len(tm.params)} args, got {len(s.args)}", s.loc)

    cycle = _find_cycle(db)
    if cycle:
        first = classes[cycle[0]]
        diag("InheritanceCycle", " -> ".join(cycle), first.loc, cycle[0])
    else:
        h = build_hierarchy(db)
        for (cls, mname), impl in h.overrides.items():
            if impl is None:
                diag("UnimplementedMethod", f"concrete class {cls} inherits abstract {mname}", classes[cls].loc, f"{cls}.{mname}")

    for name, fn in sorted(db.native_fns.items()):
        for call in fn.calls:
            if call.callee != SINK and call.callee not in db.native_fns and call.callee not in db.externs:
                diag("UnresolvedName", f"native fn {name} calls unknown {call.callee}", call.loc, call.callee)

    seen: dict[tuple[str, str], object] = {}
    for reg in db.jni_registrations:
        if reg.managed_class not in classes and reg.managed_class not in db.externs:
            diag("UnresolvedName", f"jni_register for unknown class {reg.managed_class}", reg.loc, reg.managed_class)
        for mname, nfn in reg.entries:
            key = (reg.managed_class, mname)
            if key in seen:
                diag("DuplicateJniBinding", f"{reg.managed_class}.{mname} registered twice", reg.loc, f"{reg.managed_class}.{mname}")
            seen[key] = reg
            if nfn not in db.native_fns and nfn not in db.externs:
                diag("UnresolvedName", f"jni entry {mname} binds unknown native fn {nfn}", reg.loc, nfn)
            c = classes.get(reg.managed_class)
            m = c.method(mname) if c else None
            if c is not None and m is None:
                diag("UnknownJniMethod", f"{reg.managed_class} declares no method {mname}", reg.loc, mname)
            elif m is not None and not m.is_native:
                diag("JniTargetNotNative", f"{reg.managed_class}.{mname} is bound but not declared native", reg.loc, mname)

    for iface, impl in sorted(db.stub_bindings.items()):
        loc = db.stub_locs.get(iface, NOLOC)
        if iface not in classes and iface not in db.externs:
            diag("UnresolvedName", f"stub for unknown interface {iface}", loc, iface)
        if impl not in classes:
            diag("UnresolvedName", f"stub implementation {impl} is not a managed class", loc, impl)
        elif classes[impl].is_interface:
            diag("BadStub", f"stub implementation {impl} is an interface", loc, impl)
    return out


__all__ = ["validate", "Diagnostic", "CycleError"]
