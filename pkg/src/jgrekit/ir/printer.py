"""Canonical text rendering of a ProgramDb; output reparses to an equal db."""

from __future__ import annotations

from .model import (
    Assign,
    FieldGet,
    FieldPut,
    Invoke,
    Lit,
    ManagedClass,
    ManagedMethod,
    New,
    Operand,
    ProgramDb,
    Return,
    Stmt,
)


def _op(o: Operand) -> str:
    if isinstance(o, Lit):
        return '"' + o.value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    return o


def format_stmt(s: Stmt) -> str:
    if isinstance(s, New):
        return f"{s.dst} = new {s.type}"
    if isinstance(s, Assign):
        return f"{s.dst} = {_op(s.src)}"
    if isinstance(s, FieldGet):
        return f"{s.dst} = {s.recv}.{s.field}"
    if isinstance(s, FieldPut):
        return f"{s.recv}.{s.field} = {_op(s.src)}"
    if isinstance(s, Invoke):
        kw = "scall" if s.dispatch == "static" else "call"
        call = f"{kw} {s.recv}.{s.method}({', '.join(_op(a) for a in s.args)})"
        return f"{s.dst} = {call}" if s.dst else call
    if isinstance(s, Return):
        return "return" if s.src is None else f"return {_op(s.src)}"
    raise TypeError(f"not a statement: {s!r}")


def _method(m: ManagedMethod, indent: str) -> list[str]:
    params = ", ".join(f"{n}: {t}" for n, t in m.params)
    head = f"{indent}method {m.name}({params})"
    if m.ret:
        head += f": {m.ret}"
    head += f" {m.visibility}"
    if m.permission is not None:
        head += f' permission="{m.permission}"'
    if m.is_native:
        head += " native"
    if m.abstract:
        return [head + ";"]
    if not m.body:
        return [head + " { }"]
    return [head + " {"] + [f"{indent}    {format_stmt(s)}" for s in m.body] + [f"{indent}}}"]


def format_class(c: ManagedClass) -> str:
    head = f"managed {c.kind} {c.fqname}"
    if c.extends:
        head += " extends " + ", ".join(c.extends)
    if c.implements:
        head += " implements " + ", ".join(c.implements)
    lines = [head + " {"]
    for f in c.fields:
        lines.append(f"    field {f.name}: {f.type}" + (" static" if f.static else ""))
    for m in c.methods:
        lines.extend(_method(m, "    "))
    lines.append("}")
    return "\n".join(lines)


def format_db(db: ProgramDb) -> str:
    out: list[str] = [f"extern {e}" for e in sorted(db.externs)]
    for name in sorted(db.managed_classes):
        out.append(format_class(db.managed_classes[name]))
    for iface in sorted(db.stub_bindings):
        out.append(f"stub {iface} -> {db.stub_bindings[iface]}")
    for name in sorted(db.native_fns):
        fn = db.native_fns[name]
        lines = [f"native fn {fn.name}({', '.join(fn.params)}) {{"]
        lines += [f"    call {c.callee}({', '.join(c.args)})" for c in fn.calls]
        lines.append("}")
        out.append("\n".join(lines))
    for r in db.jni_registrations:
        entries = ", ".join(f'"{m}" -> {n}' for m, n in r.entries)
        out.append(f"jni_register class={r.managed_class} {{ {entries} }}")
    return "\n".join(out) + "\n"
