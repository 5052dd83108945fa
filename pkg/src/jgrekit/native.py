"""JNI binding extraction and native reachability to the global-reference sink."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

from .ir.errors import Diagnostic
from .ir.model import SINK, ProgramDb


class UnknownFunction(KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"unknown native function {self.name!r}"


@dataclass(frozen=True)
class JniBinding:
    managed_class: str
    managed_method: str
    native_fn: str

    @property
    def method_id(self) -> str:
        return f"{self.managed_class}.{self.managed_method}"

    def to_dict(self) -> dict:
        return {"managed_class": self.managed_class, "managed_method": self.managed_method, "native_fn": self.native_fn}


@dataclass(frozen=True)
class NativePath:
    frames: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def entry(self) -> str:
        return self.frames[0]


def extract_jni_bindings(db: ProgramDb, diagnostics: Optional[list[Diagnostic]] = None) -> list[JniBinding]:
    out: list[JniBinding] = []
    for reg in db.jni_registrations:
        c = db.cls(reg.managed_class)
        for mname, fn in reg.entries:
            m = c.method(mname) if c else None
            if m is not None and not m.is_native and diagnostics is not None:
                diagnostics.append(
                    Diagnostic(
                        "JniTargetNotNative",
                        f"{reg.managed_class}.{mname} is registered but not declared native",
                        reg.loc.unit,
                        reg.loc.line,
                        f"{reg.managed_class}.{mname}",
                    )
                )
            out.append(JniBinding(reg.managed_class, mname, fn))
    return out


def reaches_globalref(db: ProgramDb, entry: str) -> Optional[NativePath]:
    """Shortest call chain from ``entry`` to the sink, or None.

    Callees of a function are only looked at once BFS reaches it; among
    equally short chains the lexicographically smallest callee sequence wins
    because each frontier is expanded in sorted order.
    """
    if entry not in db.native_fns:
        if entry in db.externs:
            return None
        raise UnknownFunction(entry)
    parent: dict[str, Optional[str]] = {entry: None}
    queue = deque([entry])
    while queue:
        cur = queue.popleft()
        fn = db.native_fns.get(cur)
        if fn is None:
            continue  # extern: opaque leaf
        for callee in sorted(set(fn.callees)):
            if callee == SINK:
                frames = [SINK, cur]
                p = parent[cur]
                while p is not None:
                    frames.append(p)
                    p = parent[p]
                return NativePath(tuple(reversed(frames)))
            if callee not in parent:
                parent[callee] = cur
                queue.append(callee)
    return None


def jgr_creating_bindings(db: ProgramDb) -> list[tuple[JniBinding, NativePath]]:
    out = []
    for b in extract_jni_bindings(db):
        path = reaches_globalref(db, b.native_fn)
        if path is not None:
            out.append((b, path))
    out.sort(key=lambda bp: (bp[0].managed_class, bp[0].managed_method))
    return out


def check_native_path(db: ProgramDb, path: NativePath) -> bool:
    """Re-validate a witness against the db alone."""
    f = path.frames
    if len(f) < 2 or f[-1] != SINK or len(set(f)) != len(f):
        return False
    for a, b in zip(f, f[1:]):
        fn = db.native_fns.get(a)
        if fn is None or b not in fn.callees:
            return False
    return True
