"""Simulator data types: policies, scripts, events, state and outcomes."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Any, Optional, Union

# Value the proxy counter is left at after the flawed reset in the binder-proxy
# limit: the per-uid count is overwritten with a large negative number instead
# of zero, so the app gets roughly two billion more proxies before the next kill.
BUGGY_RESET_VALUE = -2147467005
DEFAULT_CAPACITY = 50000
DEFAULT_PURGER_THRESHOLD = 6000
DEFAULT_PROXY_THRESHOLD = 6000


class SimError(Exception):
    pass


class InvalidAction(SimError):
    pass


# -- defenses -------------------------------------------------------------


@dataclass(frozen=True)
class NoDefense:
    name = "None"


@dataclass(frozen=True)
class PerInterfaceLimit:
    limits: tuple[tuple[str, int], ...]
    name = "PerInterfaceLimit"

    def __post_init__(self):
        for iface, t in self.limits:
            if t < 1:
                raise ValueError(f"threshold for {iface} must be >= 1")

    def limit(self, iface: str) -> Optional[int]:
        return dict(self.limits).get(iface)


@dataclass(frozen=True)
class BinderProxyLimit:
    threshold: int = DEFAULT_PROXY_THRESHOLD
    buggy_reset: bool = False
    reset_value: int = BUGGY_RESET_VALUE
    name = "BinderProxyLimit"

    def __post_init__(self):
        if self.threshold < 1:
            raise ValueError("threshold must be >= 1")

    @property
    def value_after_kill(self) -> int:
        return self.reset_value if self.buggy_reset else 0


@dataclass(frozen=True)
class Purger:
    threshold: int = DEFAULT_PURGER_THRESHOLD
    name = "Purger"

    def __post_init__(self):
        if self.threshold < 1:
            raise ValueError("threshold must be >= 1")


DefensePolicy = Union[NoDefense, PerInterfaceLimit, BinderProxyLimit, Purger]


def policy_label(p: DefensePolicy) -> str:
    if isinstance(p, BinderProxyLimit):
        return f"BinderProxyLimit({p.threshold}{', buggy' if p.buggy_reset else ''})"
    if isinstance(p, PerInterfaceLimit):
        return "PerInterfaceLimit(" + ", ".join(f"{i}={t}" for i, t in p.limits) + ")"
    if isinstance(p, Purger):
        return f"Purger({p.threshold})"
    return "None"


def policy_spec(p: DefensePolicy) -> str:
    """Inverse of :func:`parse_policy`."""
    if isinstance(p, PerInterfaceLimit):
        return "per-interface:" + ",".join(f"{i}={t}" for i, t in p.limits)
    if isinstance(p, BinderProxyLimit):
        return f"binder-proxy:{p.threshold}{':buggy' if p.buggy_reset else ''}"
    if isinstance(p, Purger):
        return f"purger:{p.threshold}"
    return "none"


def parse_policy(spec: str) -> DefensePolicy:
    """``none`` | ``per-interface:IFACE=N[,IFACE=N]`` | ``binder-proxy:N[:buggy]`` | ``purger[:N]``."""
    head, _, rest = spec.strip().partition(":")
    head = head.lower()
    try:
        if head == "none":
            return NoDefense()
        if head == "per-interface":
            pairs = []
            for item in filter(None, rest.split(",")):
                iface, _, n = item.rpartition("=")
                pairs.append((iface.strip(), int(n)))
            if not pairs:
                raise ValueError("per-interface needs at least one IFACE=N")
            return PerInterfaceLimit(tuple(pairs))
        if head == "binder-proxy":
            n, _, flag = rest.partition(":")
            if flag not in ("", "buggy"):
                raise ValueError(f"unknown binder-proxy flag {flag!r}")
            return BinderProxyLimit(int(n) if n else DEFAULT_PROXY_THRESHOLD, flag == "buggy")
        if head == "purger":
            return Purger(int(rest) if rest else DEFAULT_PURGER_THRESHOLD)
    except ValueError as e:
        raise ValueError(f"bad policy {spec!r}: {e}") from None
    raise ValueError(f"bad policy {spec!r}: unknown kind {head!r}")


# -- attacks --------------------------------------------------------------


@dataclass(frozen=True)
class Simple:
    iface: str
    n_calls: int

    def __post_init__(self):
        if self.n_calls < 1:
            raise ValueError("n_calls must be >= 1")


@dataclass(frozen=True)
class ServiceBased:
    iface: str
    stage_budget: int

    def __post_init__(self):
        if self.stage_budget < 1:
            raise ValueError("stage_budget must be >= 1")


@dataclass(frozen=True)
class OneBinder:
    iface: str
    n_calls: int

    def __post_init__(self):
        if self.n_calls < 1:
            raise ValueError("n_calls must be >= 1")


Strategy = Union[Simple, ServiceBased, OneBinder]
STRATEGIES = {"Simple": Simple, "ServiceBased": ServiceBased, "OneBinder": OneBinder}


@dataclass(frozen=True)
class AttackScript:
    strategy: Strategy
    app_uid: int = 10001
    params: tuple[tuple[str, Any], ...] = ()

    @property
    def iface(self) -> str:
        return self.strategy.iface

    def param_map(self) -> dict[str, Any]:
        return dict(self.params)

    def to_dict(self) -> dict:
        s = asdict(self.strategy)
        s["kind"] = type(self.strategy).__name__
        return {"strategy": s, "app_uid": self.app_uid, "params": {k: thaw(v) for k, v in self.params}}


def _freeze(v: Any) -> Any:
    if isinstance(v, dict):
        return tuple(sorted((k, _freeze(x)) for k, x in v.items()))
    if isinstance(v, list):
        return tuple(_freeze(x) for x in v)
    return v


def thaw(v: Any) -> Any:
    """Undo the tuple-freezing applied to script parameters."""
    if isinstance(v, tuple) and v and all(isinstance(x, tuple) and len(x) == 2 and isinstance(x[0], str) for x in v):
        return {k: thaw(x) for k, x in v}
    if isinstance(v, tuple):
        return [thaw(x) for x in v]
    return v


def script_from_dict(d: dict) -> AttackScript:
    s = dict(d["strategy"])
    kind = s.pop("kind")
    if kind not in STRATEGIES:
        raise ValueError(f"unknown strategy {kind!r}")
    params = tuple(sorted((k, _freeze(v)) for k, v in d.get("params", {}).items()))
    return AttackScript(STRATEGIES[kind](**s), int(d.get("app_uid", 10001)), params)


def make_params(params: dict[str, Any]) -> tuple[tuple[str, Any], ...]:
    return tuple(sorted((k, _freeze(v)) for k, v in params.items()))


# -- config, events, state --------------------------------------------------


@dataclass(frozen=True)
class SimConfig:
    jgr_capacity: int = DEFAULT_CAPACITY
    policy: DefensePolicy = field(default_factory=NoDefense)
    rng_seed: int = 0
    max_steps: int = 1_000_000

    def __post_init__(self):
        if self.jgr_capacity < 1:
            raise ValueError("jgr_capacity must be >= 1")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")

    def to_dict(self) -> dict:
        return {
            "jgr_capacity": self.jgr_capacity,
            "policy": policy_spec(self.policy),
            "rng_seed": self.rng_seed,
            "max_steps": self.max_steps,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        unknown = set(d) - {"jgr_capacity", "policy", "rng_seed", "max_steps"}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(
            jgr_capacity=int(d.get("jgr_capacity", DEFAULT_CAPACITY)),
            policy=parse_policy(d.get("policy", "none")),
            rng_seed=int(d.get("rng_seed", 0)),
            max_steps=int(d.get("max_steps", 1_000_000)),
        )


EVENT_KINDS = (
    "CallInvoked",
    "ProxyCreated",
    "JgrCreated",
    "JgrDeleted",
    "JgrDenied",
    "AppKilled",
    "AppRestarted",
    "SystemReboot",
    "Blocked",
)


@dataclass(frozen=True)
class SimEvent:
    seq: int
    step: int
    kind: str
    app: int
    iface: Optional[str] = None
    detail: tuple[tuple[str, Any], ...] = ()

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"seq": self.seq, "step": self.step, "kind": self.kind, "app": self.app}
        if self.iface is not None:
            d["iface"] = self.iface
        d.update(self.detail)
        return d


@dataclass
class AppState:
    proxy_count: int = 0
    jgr_count: int = 0
    alive: bool = True


@dataclass
class SimState:
    apps: dict[int, AppState] = field(default_factory=dict)
    jgr_total: int = 0
    step: int = 0
    rebooted: bool = False
    iface_calls: dict[tuple[int, str], int] = field(default_factory=dict)
    created: int = 0
    deleted: int = 0
    released_on_kill: int = 0

    def app(self, uid: int) -> AppState:
        if uid not in self.apps:
            self.apps[uid] = AppState()
        return self.apps[uid]

    def copy(self) -> "SimState":
        return SimState(
            {k: AppState(a.proxy_count, a.jgr_count, a.alive) for k, a in self.apps.items()},
            self.jgr_total,
            self.step,
            self.rebooted,
            dict(self.iface_calls),
            self.created,
            self.deleted,
            self.released_on_kill,
        )

    def to_dict(self) -> dict:
        return {
            "apps": {str(k): asdict(v) for k, v in sorted(self.apps.items())},
            "jgr_total": self.jgr_total,
            "step": self.step,
            "rebooted": self.rebooted,
        }


OUTCOMES = ("Reboot", "AppKilled", "Blocked", "BudgetExhausted")


@dataclass
class SimOutcome:
    kind: str
    state: SimState
    reason: str = ""

    def to_dict(self) -> dict:
        return {"outcome": self.kind, "reason": self.reason, "state": self.state.to_dict()}


@dataclass
class SimTrace:
    events: list[SimEvent] = field(default_factory=list)

    def kinds(self) -> list[str]:
        return [e.kind for e in self.events]

    def count(self, kind: str) -> int:
        return sum(1 for e in self.events if e.kind == kind)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e.to_dict(), sort_keys=True) + "\n" for e in self.events)


# -- actions ------------------------------------------------------------------


@dataclass(frozen=True)
class Call:
    app: int
    iface: str
    new_proxy: bool = True
    token: Any = None  # identity of the app-side binder object passed along


@dataclass(frozen=True)
class Restart:
    app: int


Action = Union[Call, Restart]
