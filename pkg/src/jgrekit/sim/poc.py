"""Proof-of-concept attack scripts synthesized from entry-point signatures."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Optional

from ..ir.model import BUILTIN_TYPES, STRING_TYPE, ProgramDb
from ..managed.entries import EntryPoint
from ..managed.resolve import Resolver
from .model import STRATEGIES, AttackScript, make_params

if TYPE_CHECKING:
    from .engine import Simulator


class UnconstructibleParam(Exception):
    def __init__(self, name: str, type_: str):
        super().__init__(f"cannot synthesize parameter {name}: {type_}")
        self.name = name
        self.type = type_


@dataclass(frozen=True)
class ParamRules:
    name_presets: dict[str, tuple[Any, ...]] = field(
        default_factory=lambda: {
            "package": ("com.poc.app", "com.poc.attacker", "com.example.victim"),
            "uid": (10001, 10002, 10057),
        }
    )
    aliases: dict[str, str] = field(
        default_factory=lambda: {
            "pkg": "package",
            "packagename": "package",
            "callingpackage": "package",
            "opPackageName".lower(): "package",
            "userid": "uid",
            "callinguid": "uid",
        }
    )
    singletons: frozenset[str] = frozenset({"android.os.Looper", "android.content.Context", "android.os.Handler"})
    seed: int = 0

    def preset_for(self, name: str) -> Optional[str]:
        low = name.lower()
        if low in self.name_presets:
            return low
        return self.aliases.get(low)


def iface_for(entry: EntryPoint, ambiguous: bool = False) -> str:
    if ambiguous or entry.kind == "service_helper":
        return f"{entry.service_name}.{entry.cls}.{entry.method}"
    return f"{entry.service_name}.{entry.method}"


def _param_spec(db: ProgramDb, r: Resolver, rules: ParamRules, rng: random.Random, name: str, t: str) -> Any:
    preset = rules.preset_for(name)
    if preset is not None:
        return rng.choice(rules.name_presets[preset])
    if t in rules.singletons:
        return {"singleton": t}
    if t == STRING_TYPE:
        return "poc"
    if t == "boolean":
        return False
    if t in BUILTIN_TYPES:
        return 0
    if t in db.config.binder_root_types:
        return {"binder": True}
    c = db.cls(t)
    if c is None:
        raise UnconstructibleParam(name, t)
    if not c.is_interface:
        return {"new": t}
    stub = db.stub_bindings.get(t)
    if stub is not None:
        return {"new": stub}
    impls = sorted(r.h.concrete_subtypes(t))
    if impls:
        return {"new": impls[0]}
    raise UnconstructibleParam(name, t)


def generate_poc(
    db: ProgramDb,
    entry: EntryPoint,
    rules: Optional[ParamRules] = None,
    strategy: str = "Simple",
    budget: int = 1000,
    resolver: Optional[Resolver] = None,
) -> AttackScript:
    rules = rules or ParamRules()
    r = resolver or Resolver(db)
    m = db.method(entry.method_id)
    if m is None:
        raise KeyError(entry.method_id)
    rng = random.Random(rules.seed)
    params = {name: _param_spec(db, r, rules, rng, name, t) for name, t in m.params}
    uid = rng.choice(rules.name_presets.get("uid", (10001,)))
    cls = STRATEGIES[strategy]
    return AttackScript(cls(iface_for(entry), budget), int(uid), make_params(params))


def build_args(sim: "Simulator", entry: EntryPoint, params: dict[str, Any], app: int, token: Any) -> list[Any]:
    """Server-side argument values for one call, marshalling binder objects."""
    interp = sim.interp
    r = interp.resolver
    m = sim.db.method(entry.method_id)
    out: list[Any] = []
    for pname, ptype in m.params:
        spec = params.get(pname, None) if pname in params else _default(ptype, r)
        key = (app, token, pname)
        if isinstance(spec, dict):
            if "singleton" in spec:
                out.append(interp.singleton(spec["singleton"]))
            elif spec.get("binder"):
                out.append(interp.marshal_binder(key, ptype))
            elif "new" in spec:
                t = spec["new"]
                if r.binder_related(t) or r.binder_related(ptype):
                    out.append(interp.marshal_binder(key, ptype))
                else:
                    out.append(interp.instantiate(t))
            else:
                out.append(None)
        else:
            out.append(spec)
    return out


def _default(ptype: str, r: Resolver) -> Any:
    if ptype == STRING_TYPE:
        return "poc"
    if ptype in BUILTIN_TYPES:
        return 0
    if r.binder_related(ptype):
        return {"binder": True}
    return None
