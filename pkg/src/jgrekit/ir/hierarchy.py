from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import CycleError
from .model import ProgramDb


@dataclass(frozen=True)
class ClassHierarchy:
    """Subtype closure and override table for the managed side.

    ``subtypes[T]`` holds the concrete classes whose ancestry includes ``T``
    (``T`` itself when concrete).  Extern names that appear as parents get
    entries too.  ``overrides[(C, m)]`` is the class whose declaration of
    ``m`` runs when ``m`` is dispatched on an instance of concrete ``C``, or
    None when nothing in the superclass chain provides a body.
    """

    subtypes: dict[str, frozenset[str]]
    ancestors: dict[str, frozenset[str]]
    overrides: dict[tuple[str, str], Optional[str]]

    def concrete_subtypes(self, t: str) -> frozenset[str]:
        return self.subtypes.get(t, frozenset())

    def is_subtype(self, sub: str, sup: str) -> bool:
        return sub == sup or sup in self.ancestors.get(sub, frozenset())

    def resolve(self, cls: str, method: str) -> Optional[str]:
        return self.overrides.get((cls, method))


def _find_cycle(db: ProgramDb) -> Optional[list[str]]:
    state: dict[str, int] = {}
    stack: list[str] = []

    def visit(n: str) -> Optional[list[str]]:
        state[n] = 1
        stack.append(n)
        c = db.managed_classes.get(n)
        for p in sorted(c.parents) if c else ():
            if p not in db.managed_classes:
                continue
            if state.get(p) == 1:
                return stack[stack.index(p):] + [p]
            if p not in state:
                found = visit(p)
                if found:
                    return found
        stack.pop()
        state[n] = 2
        return None

    for name in sorted(db.managed_classes):
        if name not in state:
            found = visit(name)
            if found:
                return found
    return None


def build_hierarchy(db: ProgramDb) -> ClassHierarchy:
    cycle = _find_cycle(db)
    if cycle:
        raise CycleError(cycle)
    classes = db.managed_classes

    ancestors: dict[str, frozenset[str]] = {}

    def anc(n: str) -> frozenset[str]:
        if n in ancestors:
            return ancestors[n]
        c = classes.get(n)
        acc: set[str] = set()
        if c:
            for p in c.parents:
                acc.add(p)
                acc |= anc(p)
        ancestors[n] = frozenset(acc)
        return ancestors[n]

    for name in classes:
        anc(name)

    subtypes: dict[str, set[str]] = {}
    for name, c in classes.items():
        if c.is_interface:
            subtypes.setdefault(name, set())
            continue
        subtypes.setdefault(name, set()).add(name)
        for a in ancestors[name]:
            subtypes.setdefault(a, set()).add(name)

    overrides: dict[tuple[str, str], Optional[str]] = {}
    for name, c in classes.items():
        if c.is_interface:
            continue
        names: set[str] = {m.name for m in c.methods}
        for a in ancestors[name]:
            ac = classes.get(a)
            if ac:
                names.update(m.name for m in ac.methods)
        for mname in names:
            overrides[(name, mname)] = _nearest_body(db, name, mname)

    return ClassHierarchy(
        subtypes={k: frozenset(v) for k, v in sorted(subtypes.items())},
        ancestors=dict(sorted(ancestors.items())),
        overrides=dict(sorted(overrides.items())),
    )


def _nearest_body(db: ProgramDb, cls: str, mname: str) -> Optional[str]:
    cur: Optional[str] = cls
    while cur is not None and cur in db.managed_classes:
        c = db.managed_classes[cur]
        if c.is_interface:
            return None
        m = c.method(mname)
        if m is not None and not m.abstract:
            return cur
        cur = c.extends[0] if c.extends else None
    return None
