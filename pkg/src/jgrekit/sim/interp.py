"""Executes corpus code on a small server-side heap.

The heap is reference counted.  Locals are not counted, so anything created
during a call that is still unreferenced when the call returns is freed.
Cycles are never collected (conservative).  A global reference is pinned
to its anchor objects (the JNI receiver and object arguments) and released
once every anchor has been freed; nothing else keeps it alive, so a global
reference only accumulates when managed code keeps the object around.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from ..ir.model import (
    BUILTIN_TYPES,
    OBJECT_TYPE,
    SINK,
    STRING_TYPE,
    Assign,
    FieldGet,
    FieldPut,
    Invoke,
    Lit,
    New,
    ProgramDb,
    Return,
    method_id,
    split_method_id,
)
from ..managed.entries import EntryPoint
from ..managed.resolve import Resolver

BINDER_PROXY = "android.os.BinderProxy"
IBINDER = "android.os.IBinder"
APPEND_METHODS = frozenset({"add", "register", "append", "offer", "push", "addLast"})
MAX_FRAMES = 32
MAX_STMTS_PER_CALL = 2000


class Obj:
    __slots__ = ("oid", "type", "kind", "fields", "entries", "rc", "pinned", "freed", "jgrs", "binder")

    def __init__(self, oid: int, type_: str, kind: str):
        self.oid = oid
        self.type = type_
        self.kind = kind  # managed | extern | binder_proxy | remote
        self.fields: dict[str, Any] = {}
        self.entries: dict[tuple, tuple[Any, Any]] = {}
        self.rc = 0
        self.pinned = False
        self.freed = False
        self.jgrs: list[int] = []
        self.binder: Optional[Obj] = None

    def children(self) -> list[Any]:
        out = list(self.fields.values())
        for k, v in self.entries.values():
            out.append(k)
            out.append(v)
        if self.binder is not None:
            out.append(self.binder)
        return out

    def __repr__(self) -> str:
        return f"<{self.kind} {self.type}#{self.oid}>"


@dataclass
class Jgr:
    jid: int
    app: int
    anchors: int
    released: bool = False


@dataclass(frozen=True)
class Dispatch:
    caller: str
    site: int
    callee: str
    kind: str


class _Budget(Exception):
    pass


def _key(v: Any) -> tuple:
    return ("o", v.oid) if isinstance(v, Obj) else ("v", v)


@dataclass
class Interpreter:
    db: ProgramDb
    resolver: Resolver
    on_sink: Callable[[int, list[Obj]], Optional[int]]
    on_release: Callable[[int], None]
    dispatches: set[Dispatch] = field(default_factory=set)

    def __post_init__(self):
        self.h = self.resolver.h
        self._ids = itertools.count(1)
        self.singletons: dict[str, Obj] = {}
        self.statics: dict[tuple[str, str], Any] = {}
        self.jgrs: dict[int, Jgr] = {}
        self._marshal: dict[Any, Obj] = {}
        self._young: list[Obj] = []
        self._zero: list[Obj] = []
        self._bindings = {(r.managed_class, m): fn for r in self.db.jni_registrations for m, fn in r.entries}
        self._stmts = 0
        self.live_objects = 0

    # -- heap -------------------------------------------------------------
    def _new(self, type_: str, kind: str) -> Obj:
        o = Obj(next(self._ids), type_, kind)
        self._young.append(o)
        self.live_objects += 1
        return o

    def _inc(self, v: Any) -> None:
        if isinstance(v, Obj):
            v.rc += 1

    def _dec(self, v: Any) -> None:
        if isinstance(v, Obj):
            v.rc -= 1
            if v.rc <= 0:
                self._zero.append(v)

    def _store(self, obj: Obj, name: str, v: Any) -> None:
        old = obj.fields.get(name)
        self._inc(v)
        obj.fields[name] = v
        self._dec(old)

    def collect(self) -> None:
        """Free everything unreferenced; called at the end of each top-level call."""
        work = self._young + self._zero
        self._young, self._zero = [], []
        while work:
            o = work.pop()
            if o.freed or o.pinned or o.rc > 0:
                continue
            o.freed = True
            self.live_objects -= 1
            for jid in o.jgrs:
                j = self.jgrs[jid]
                j.anchors -= 1
                if j.anchors == 0 and not j.released:
                    j.released = True
                    self.on_release(jid)
            for c in o.children():
                if isinstance(c, Obj):
                    c.rc -= 1
                    if c.rc <= 0:
                        work.append(c)

    def singleton(self, type_: str) -> Obj:
        o = self.singletons.get(type_)
        if o is None:
            o = self.instantiate(type_)
            o.pinned = True
            self.singletons[type_] = o
        return o

    def instantiate(self, type_: str) -> Obj:
        c = self.db.cls(type_)
        if c is not None:
            return self._new(type_, "managed")
        return self._new(type_, "extern")

    def _default_field(self, ftype: str) -> Any:
        if ftype in BUILTIN_TYPES:
            return None
        c = self.db.cls(ftype)
        if c is not None:
            return None if c.is_interface else self._new(ftype, "managed")
        if ftype in self.db.stub_bindings:
            return None
        return self._new(ftype, "extern")

    def type_ancestors(self, t: str) -> frozenset[str]:
        if t == BINDER_PROXY and self.db.cls(t) is None:
            return frozenset({IBINDER, OBJECT_TYPE})
        return self.h.ancestors.get(t, frozenset()) | {OBJECT_TYPE}

    # -- marshalling ------------------------------------------------------------
    def marshal_binder(self, app_key: Any, declared: str) -> Obj:
        bp = self._marshal.get(app_key)
        if bp is None or bp.freed:
            bp = self._new(BINDER_PROXY, "binder_proxy")
            self._marshal[app_key] = bp
        if declared == BINDER_PROXY or declared in self.type_ancestors(BINDER_PROXY):
            return bp
        rp = self._new(declared, "remote")
        rp.binder = bp
        bp.rc += 1
        return rp

    # -- execution ---------------------------------------------------------------
    def invoke_entry(self, entry: EntryPoint, args: list[Any], app: int) -> Any:
        self._stmts = 0
        self._app = app
        this = self.singleton(entry.cls)
        try:
            result = self._exec(entry.method_id, this, args, 0)
        except _Budget:
            result = None
        # A reboot unwinds past here on purpose: the heap is frozen at the crash.
        self.collect()
        return result

    def _exec(self, mid: str, this: Any, args: list[Any], depth: int) -> Any:
        if depth > MAX_FRAMES:
            return None
        m = self.resolver.method(mid)
        if m is None:
            return None
        cls, mname = split_method_id(mid)
        if m.is_native:
            fn = self._bindings.get((cls, mname))
            if fn is None:
                return None
            anchors = [a for a in [this, *args] if isinstance(a, Obj)]
            self._native(fn, anchors, set())
            return None
        env: dict[str, Any] = {"this": this}
        for (p, _), a in zip(m.params, args):
            env[p] = a
        for i, s in enumerate(m.body):
            self._stmts += 1
            if self._stmts > MAX_STMTS_PER_CALL:
                raise _Budget()
            if isinstance(s, New):
                env[s.dst] = "" if s.type == STRING_TYPE else None if s.type in BUILTIN_TYPES else self.instantiate(s.type)
            elif isinstance(s, Assign):
                env[s.dst] = self._val(env, s.src)
            elif isinstance(s, FieldGet):
                env[s.dst] = self._field_get(mid, env, s)
            elif isinstance(s, FieldPut):
                self._field_put(mid, env, s)
            elif isinstance(s, Invoke):
                r = self._invoke(mid, i, env, s, depth)
                if s.dst:
                    env[s.dst] = r
            elif isinstance(s, Return):
                return None if s.src is None else self._val(env, s.src)
        return None

    def _val(self, env: dict, op: Any) -> Any:
        if isinstance(op, Lit):
            return op.value
        return env.get(op)

    def _static_slot(self, owner: str, fname: str) -> Optional[tuple[str, str]]:
        hit = self.resolver.field_owner(owner, fname)
        return (hit[0], fname) if hit else None

    def _field_get(self, mid: str, env: dict, s: FieldGet) -> Any:
        if s.recv not in env and self.db.cls(s.recv) is not None:
            slot = self._static_slot(s.recv, s.field)
            return self._static_get(slot) if slot else None
        obj = env.get(s.recv)
        if not isinstance(obj, Obj):
            return None
        hit = self.resolver.field_owner(obj.type, s.field)
        if hit and self.resolver.field_static(hit[0], s.field):
            return self._static_get((hit[0], s.field))
        if s.field not in obj.fields:
            if hit is None:
                return None
            self._store(obj, s.field, self._default_field(hit[1]))
        return obj.fields[s.field]

    def _static_get(self, slot: tuple[str, str]) -> Any:
        if slot not in self.statics:
            hit = self.resolver.field_owner(*slot)
            v = self._default_field(hit[1]) if hit else None
            self._inc(v)
            self.statics[slot] = v
        return self.statics[slot]

    def _field_put(self, mid: str, env: dict, s: FieldPut) -> None:
        v = self._val(env, s.src)
        obj = env.get(s.recv)
        if not isinstance(obj, Obj):
            return
        hit = self.resolver.field_owner(obj.type, s.field)
        if hit and self.resolver.field_static(hit[0], s.field):
            slot = (hit[0], s.field)
            self._static_get(slot)
            old = self.statics[slot]
            self._inc(v)
            self.statics[slot] = v
            self._dec(old)
            return
        self._store(obj, s.field, v)

    def _run(self, caller: str, site: int, callee: str, kind: str, this: Any, args: list[Any], depth: int) -> Any:
        self.dispatches.add(Dispatch(caller, site, callee, kind))
        return self._exec(callee, this, args, depth + 1)

    def _invoke(self, mid: str, idx: int, env: dict, s: Invoke, depth: int) -> Any:
        args = [self._val(env, a) for a in s.args]
        if s.dispatch == "static":
            target = self.resolver.resolve_static(s.recv, s.method)
            if target is None:
                return None
            return self._run(mid, idx, target, "direct", None, args, depth)
        result = self._dispatch_instance(mid, idx, env, s, args, depth)
        self._implicit(mid, idx, s, args, depth)
        return result

    def _dispatch_instance(self, mid: str, idx: int, env: dict, s: Invoke, args: list[Any], depth: int) -> Any:
        recv = env.get(s.recv)
        if isinstance(recv, Obj):
            if recv.kind in ("managed", "binder_proxy"):
                impl = self.h.resolve(recv.type, s.method)
                if impl is None:
                    return None
                return self._run(mid, idx, method_id(impl, s.method), "virtual", recv, args, depth)
            if recv.kind == "remote":
                return recv.binder if s.method == "asBinder" else None
            return self._container_op(recv, s.method, args)
        if recv is None:
            for t in sorted(self.resolver.static_types(mid, s.recv)):
                impl_cls = self.db.stub_bindings.get(t)
                if impl_cls is None:
                    continue
                target = self.resolver.resolve_static(impl_cls, s.method)
                if target is not None:
                    return self._run(mid, idx, target, "ipc", self.singleton(impl_cls), args, depth)
        return None

    def _implicit(self, mid: str, idx: int, s: Invoke, args: list[Any], depth: int) -> None:
        edges = self.resolver.config.implicit_edges
        if not edges:
            return
        types = None
        for trigger, callback in edges:
            tcls, tm = split_method_id(trigger)
            if tm != s.method:
                continue
            if types is None:
                types = self.resolver.receiver_types(mid, s)
            if not any(self.h.is_subtype(t, tcls) for t in types):
                continue
            ccls, cm = split_method_id(callback)
            for a in args:
                if isinstance(a, Obj) and a.kind == "managed" and self.h.is_subtype(a.type, ccls):
                    impl = self.h.resolve(a.type, cm)
                    if impl is not None:
                        self._run(mid, idx, method_id(impl, cm), "implicit", a, [], depth)

    def _container_op(self, c: Obj, name: str, args: list[Any]) -> Any:
        if name == "put" and len(args) >= 2:
            k, v = args[0], args[1]
            old = c.entries.get(_key(k))
            self._inc(k)
            self._inc(v)
            c.entries[_key(k)] = (k, v)
            if old is not None:
                self._dec(old[0])
                self._dec(old[1])
                return old[1]
            return None
        if name in APPEND_METHODS and args:
            v = args[0]
            self._inc(v)
            c.entries[("i", next(self._ids))] = (None, v)
            return None
        if name == "get" and args:
            hit = c.entries.get(_key(args[0]))
            return hit[1] if hit else None
        if name in ("remove", "unregister") and args:
            k = _key(args[0])
            if k not in c.entries:
                k = next((ek for ek, (_, v) in c.entries.items() if _key(v) == k), None)
            if k is not None:
                ok, ov = c.entries.pop(k)
                self._dec(ok)
                self._dec(ov)
                return ov
            return None
        if name == "clear":
            old = list(c.entries.values())
            c.entries.clear()
            for k, v in old:
                self._dec(k)
                self._dec(v)
        return None

    def _native(self, fn_name: str, anchors: list[Obj], seen: set[str]) -> None:
        # Each reachable native body runs once per JNI call; this keeps the
        # cost linear and cuts recursion.
        fn = self.db.native_fns.get(fn_name)
        if fn is None:
            return
        seen.add(fn_name)
        for call in fn.calls:
            if call.callee == SINK:
                jid = self.on_sink(self._app, anchors)
                if jid is not None:
                    live = {a.oid: a for a in anchors if not a.freed}
                    self.jgrs[jid] = Jgr(jid, self._app, len(live))
                    for a in live.values():
                        a.jgrs.append(jid)
            elif call.callee in self.db.native_fns and call.callee not in seen:
                self._native(call.callee, anchors, seen)

    def release_app(self, app: int) -> list[int]:
        """Drop every live global reference created on behalf of ``app``."""
        out = []
        for j in self.jgrs.values():
            if j.app == app and not j.released:
                j.released = True
                out.append(j.jid)
        return out
