"""Declared-type inference, points-to and call-site resolution.

Points-to here is flow- and context-insensitive: a variable may hold anything
any of its definitions may produce.  Call results are followed exactly one
level (the callee's ``return`` sources are resolved without chasing further
calls), so the analysis is a may-over-approximation of real concrete types.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Optional

from ..ir.errors import Diagnostic
from ..ir.hierarchy import ClassHierarchy, build_hierarchy
from ..ir.model import (
    STRING_TYPE,
    Assign,
    FieldGet,
    FieldPut,
    Invoke,
    Lit,
    ManagedMethod,
    New,
    Operand,
    ProgramDb,
    Return,
    Stmt,
    method_id,
    split_method_id,
)

EDGE_KINDS = ("direct", "virtual", "ipc", "implicit")


@dataclass(frozen=True)
class Target:
    callee: str
    kind: str


class _Cycle(Exception):
    pass


class Resolver:
    def __init__(self, db: ProgramDb, hierarchy: Optional[ClassHierarchy] = None):
        self.db = db
        self.h = hierarchy or build_hierarchy(db)
        self.config = db.config
        self._methods: dict[str, ManagedMethod] = {}
        self._defs: dict[str, dict[str, list[Stmt]]] = {}
        for cname, c in db.managed_classes.items():
            for m in c.methods:
                mid = method_id(cname, m.name)
                self._methods[mid] = m
                defs: dict[str, list[Stmt]] = defaultdict(list)
                for s in m.body:
                    d = getattr(s, "dst", None)
                    if d:
                        defs[d].append(s)
                self._defs[mid] = dict(defs)
        self._static_cache: dict[tuple[str, str], frozenset[str]] = {}
        self._pt_cache: dict[tuple[str, str, bool], frozenset[str]] = {}
        self._targets_cache: dict[tuple[str, int], tuple[Target, ...]] = {}
        self._active: set[tuple] = set()
        self._tainted = False
        self._puts: Optional[dict[tuple[str, str], list[tuple[str, Operand]]]] = None
        self._binder: dict[str, bool] = {}
        self.diagnostics: list[Diagnostic] = []
        self._diag_keys: set[tuple] = set()
        self.field_puts()

    # -- basic lookups ---------------------------------------------------
    def method(self, mid: str) -> Optional[ManagedMethod]:
        return self._methods.get(mid)

    def methods(self) -> list[str]:
        return sorted(self._methods)

    def is_var(self, mid: str, name: str) -> bool:
        m = self._methods.get(mid)
        if m is None:
            return False
        return name == "this" or name in m.param_names or name in self._defs.get(mid, {})

    def _note(self, code: str, msg: str, loc) -> None:
        key = (code, msg)
        if key not in self._diag_keys:
            self._diag_keys.add(key)
            self.diagnostics.append(Diagnostic(code, msg, loc.unit, loc.line))

    def field_owner(self, owner: str, fname: str) -> Optional[tuple[str, str]]:
        """(declaring class, field type) for ``owner.fname``, searching ancestors."""
        seen: set[str] = set()
        order = [owner]
        while order:
            cur = order.pop(0)
            if cur in seen:
                continue
            seen.add(cur)
            c = self.db.cls(cur)
            if c is None:
                continue
            fd = c.field_decl(fname)
            if fd is not None:
                return cur, fd.type
            order.extend(c.parents)
        return None

    def field_static(self, decl_cls: str, fname: str) -> bool:
        c = self.db.cls(decl_cls)
        fd = c.field_decl(fname) if c else None
        return bool(fd and fd.static)

    def fields_of(self, mid: str, recv: str, fname: str) -> set[tuple[str, str]]:
        """Set of (declaring class, field name) that ``recv.fname`` may denote."""
        if not self.is_var(mid, recv) and self.db.cls(recv) is not None:
            owners = {recv}
        else:
            owners = set(self.static_types(mid, recv)) | set(self.points_to(mid, recv))
        out = set()
        for o in owners:
            hit = self.field_owner(o, fname)
            if hit:
                out.add((hit[0], fname))
        return out

    def lookup_declared(self, t: str, mname: str) -> Optional[ManagedMethod]:
        """First declaration of ``mname`` in ``t`` or its ancestors (interfaces included)."""
        seen: set[str] = set()
        order = [t]
        while order:
            cur = order.pop(0)
            if cur in seen:
                continue
            seen.add(cur)
            c = self.db.cls(cur)
            if c is None:
                continue
            m = c.method(mname)
            if m is not None:
                return m
            order.extend(c.parents)
        return None

    def resolve_static(self, cls: str, mname: str) -> Optional[str]:
        cur: Optional[str] = cls
        while cur is not None:
            c = self.db.cls(cur)
            if c is None:
                return None
            m = c.method(mname)
            if m is not None and not m.abstract:
                return method_id(cur, mname)
            cur = c.extends[0] if c.extends and not c.is_interface else None
        return None

    # -- memo plumbing ---------------------------------------------------
    def _memo(self, cache: dict, key: tuple, compute) -> frozenset[str]:
        if key in cache:
            return cache[key]
        if key in self._active:
            self._tainted = True
            return frozenset()
        outer_taint = self._tainted
        self._tainted = False
        self._active.add(key)
        try:
            result = compute()
        finally:
            self._active.discard(key)
        if not self._tainted:
            cache[key] = result
        self._tainted = self._tainted or outer_taint
        return result

    # -- declared types ----------------------------------------------------
    def static_types(self, mid: str, var: Operand) -> frozenset[str]:
        if isinstance(var, Lit):
            return frozenset({STRING_TYPE})
        return self._memo(self._static_cache, (mid, var), lambda: self._static_types(mid, var))

    def _static_types(self, mid: str, var: str) -> frozenset[str]:
        m = self._methods.get(mid)
        if m is None:
            return frozenset()
        cls, _ = split_method_id(mid)
        if var == "this":
            return frozenset({cls})
        out: set[str] = {t for p, t in m.params if p == var}
        for s in self._defs.get(mid, {}).get(var, ()):
            if isinstance(s, New):
                out.add(s.type)
            elif isinstance(s, Assign):
                out |= self.static_types(mid, s.src)
            elif isinstance(s, FieldGet):
                if not self.is_var(mid, s.recv) and self.db.cls(s.recv) is not None:
                    owners = {s.recv}
                else:
                    owners = set(self.static_types(mid, s.recv))
                for o in owners:
                    hit = self.field_owner(o, s.field)
                    if hit:
                        out.add(hit[1])
            elif isinstance(s, Invoke):
                out |= self._return_types(mid, s)
        return frozenset(out)

    def _return_types(self, mid: str, s: Invoke) -> frozenset[str]:
        declared: set[str] = set()
        undeclared = False
        if s.dispatch == "static":
            target = self.resolve_static(s.recv, s.method)
            tm = self._methods.get(target) if target else None
            if tm is not None and tm.ret:
                declared.add(tm.ret)
            elif tm is not None:
                undeclared = True
        else:
            for t in sorted(self.static_types(mid, s.recv)):
                dm = self.lookup_declared(t, s.method)
                if dm is not None and dm.ret:
                    declared.add(dm.ret)
                elif dm is not None:
                    undeclared = True
        if declared:
            return frozenset(declared)
        if undeclared or not declared:
            return self._returned_points_to(mid, s)
        return frozenset()

    # -- points-to ----------------------------------------------------------
    def points_to(self, mid: str, var: Operand, follow_calls: bool = True) -> frozenset[str]:
        if isinstance(var, Lit):
            return frozenset({STRING_TYPE})
        return self._memo(self._pt_cache, (mid, var, follow_calls), lambda: self._points_to(mid, var, follow_calls))

    def _points_to(self, mid: str, var: str, follow: bool) -> frozenset[str]:
        m = self._methods.get(mid)
        if m is None:
            return frozenset()
        cls, _ = split_method_id(mid)
        if var == "this":
            return self.h.concrete_subtypes(cls)
        out: set[str] = set()
        for s in self._defs.get(mid, {}).get(var, ()):
            if isinstance(s, New):
                out.add(s.type)
            elif isinstance(s, Assign):
                out |= self.points_to(mid, s.src, follow)
            elif isinstance(s, FieldGet):
                for key in self.fields_of(mid, s.recv, s.field):
                    for put_mid, src in self.field_puts().get(key, ()):
                        out |= self.points_to(put_mid, src, follow)
            elif isinstance(s, Invoke) and follow:
                out |= self._returned_points_to(mid, s)
        return frozenset(out)

    def _returned_points_to(self, mid: str, s: Invoke) -> frozenset[str]:
        out: set[str] = set()
        for t in self.call_targets(mid, s):
            callee = self._methods.get(t.callee)
            if callee is None:
                continue
            for rs in callee.body:
                if isinstance(rs, Return) and rs.src is not None:
                    out |= self.points_to(t.callee, rs.src, False)
        return frozenset(out)

    def field_puts(self) -> dict[tuple[str, str], list[tuple[str, Operand]]]:
        if self._puts is None:
            puts: dict[tuple[str, str], list[tuple[str, Operand]]] = defaultdict(list)
            self._puts = puts  # visible while building; recursive reads see a partial index
            for mid in sorted(self._methods):
                for s in self._methods[mid].body:
                    if isinstance(s, FieldPut):
                        owners = set(self.static_types(mid, s.recv))
                        for o in sorted(owners):
                            hit = self.field_owner(o, s.field)
                            if hit:
                                puts[(hit[0], s.field)].append((mid, s.src))
            self._puts = dict(puts)
            # anything cached while the index was partial must be recomputed
            self._pt_cache.clear()
            self._static_cache.clear()
            self._targets_cache.clear()
        return self._puts

    # -- call resolution -----------------------------------------------------
    def call_targets(self, mid: str, s: Invoke, index: Optional[int] = None) -> tuple[Target, ...]:
        key = (mid, id(s))
        if key in self._targets_cache:
            return self._targets_cache[key]
        if ("targets",) + key in self._active:
            self._tainted = True
            return ()
        self._active.add(("targets",) + key)
        outer = self._tainted
        self._tainted = False
        try:
            result = self._call_targets(mid, s)
        finally:
            self._active.discard(("targets",) + key)
        if not self._tainted:
            self._targets_cache[key] = result
        self._tainted = self._tainted or outer
        return result

    def receiver_types(self, mid: str, s: Invoke) -> frozenset[str]:
        types = self.static_types(mid, s.recv)
        return types if types else self.points_to(mid, s.recv)

    def _call_targets(self, mid: str, s: Invoke) -> tuple[Target, ...]:
        out: list[Target] = []
        if s.dispatch == "static":
            t = self.resolve_static(s.recv, s.method)
            if t:
                out.append(Target(t, "direct"))
            elif self.db.cls(s.recv) is not None:
                self._note("DanglingEdge", f"{mid}: no body for {s.recv}.{s.method}", s.loc)
            return tuple(out)
        types = self.receiver_types(mid, s)
        if not types:
            self._note("DanglingEdge", f"{mid}: cannot type receiver {s.recv!r} of {s.method}", s.loc)
        managed_involved = False
        for t in sorted(types):
            subs = self.h.concrete_subtypes(t)
            if subs or self.db.cls(t) is not None:
                managed_involved = True
            for c in sorted(subs):
                impl = self.h.resolve(c, s.method)
                if impl is not None:
                    out.append(Target(method_id(impl, s.method), "virtual"))
            impl_cls = self.db.stub_bindings.get(t)
            if impl_cls is not None:
                tgt = self.resolve_static(impl_cls, s.method)
                if tgt:
                    out.append(Target(tgt, "ipc"))
        for trigger, callback in self.config.implicit_edges:
            tcls, tm = split_method_id(trigger)
            if tm != s.method or not any(self.h.is_subtype(t, tcls) for t in types):
                continue
            ccls, cm = split_method_id(callback)
            found = False
            for a in s.args:
                for p in sorted(self.points_to(mid, a)):
                    if self.h.is_subtype(p, ccls):
                        impl = self.h.resolve(p, cm)
                        if impl is not None:
                            out.append(Target(method_id(impl, cm), "implicit"))
                            found = True
            if not found:
                self._note("DanglingEdge", f"{mid}: implicit callback {callback} unresolved at {s.method}", s.loc)
        if managed_involved and not out:
            self._note("DanglingEdge", f"{mid}: no implementation of {s.method} for {sorted(types)}", s.loc)
        seen: set[Target] = set()
        uniq = []
        for t in out:
            if t not in seen:
                seen.add(t)
                uniq.append(t)
        return tuple(uniq)

    # -- binder-relatedness ------------------------------------------------------
    def binder_related(self, t: str) -> bool:
        """True if ``t`` is a binder root, descends from one, or transitively holds one."""
        if t in self._binder:
            return self._binder[t]
        roots = self.config.binder_root_types
        visiting: set[str] = set()

        def walk(x: str) -> bool:
            if x in roots:
                return True
            if x in self._binder:
                return self._binder[x]
            if x in visiting:
                return False
            visiting.add(x)
            if self.h.ancestors.get(x, frozenset()) & roots:
                return True
            c = self.db.cls(x)
            if c is not None:
                for p in c.parents:
                    if walk(p):
                        return True
                for f in c.fields:
                    if walk(f.type):
                        return True
            stub = self.db.stub_bindings.get(x)
            if stub is not None and walk(stub):
                return True
            return False

        result = walk(t)
        self._binder[t] = result
        return result


def resolve_type(db: ProgramDb, method: str, var: str, resolver: Optional[Resolver] = None) -> frozenset[str]:
    """Concrete types ``var`` may hold inside ``method``; empty means unresolved."""
    return (resolver or Resolver(db)).points_to(method, var)
