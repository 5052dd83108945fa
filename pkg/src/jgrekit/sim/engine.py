"""Deterministic attack/defense state machine."""

from __future__ import annotations

import itertools
from typing import Any, Optional

from ..ir.model import ProgramDb
from ..managed.entries import EntryPoint, extract_entry_points
from ..managed.resolve import Resolver
from .interp import Interpreter, Obj
from .model import (
    Action,
    AttackScript,
    BinderProxyLimit,
    Call,
    InvalidAction,
    OneBinder,
    PerInterfaceLimit,
    Purger,
    Restart,
    ServiceBased,
    Simple,
    SimConfig,
    SimEvent,
    SimOutcome,
    SimState,
    SimTrace,
    thaw,
)


class _Reboot(Exception):
    pass


def iface_name(e: EntryPoint) -> str:
    return f"{e.service_name}.{e.method}"


def split_iface(iface: str) -> tuple[str, str]:
    service, _, method = iface.rpartition(".")
    return service, method


class Simulator:
    """One simulated device.  Without a db every call is one proxy and one global ref."""

    def __init__(self, config: SimConfig, db: Optional[ProgramDb] = None, resolver: Optional[Resolver] = None):
        self.config = config
        self.policy = config.policy
        self.state = SimState()
        self.trace = SimTrace()
        self.db = db
        self._seq = itertools.count()
        self._jids = itertools.count(1)
        self._jgr_app: dict[int, int] = {}
        self._live_by_app: dict[int, set[int]] = {}
        self.interp: Optional[Interpreter] = None
        self.entries: dict[str, EntryPoint] = {}
        self._pending: list[SimEvent] = []
        self._iface: Optional[str] = None
        if db is not None:
            r = resolver or Resolver(db)
            # System services claim the short names; helpers stay reachable by class.
            ordered = sorted(extract_entry_points(db, r), key=lambda e: e.kind != "system_service")
            for e in ordered:
                self.entries.setdefault(iface_name(e), e)
                self.entries.setdefault(f"{e.service_name}.{e.cls}.{e.method}", e)
            self.interp = Interpreter(db, r, self._sink, self._release)

    # -- event plumbing ------------------------------------------------------
    def _emit(self, kind: str, app: int, iface: Optional[str] = None, **detail: Any) -> SimEvent:
        ev = SimEvent(next(self._seq), self.state.step, kind, app, iface, tuple(sorted(detail.items())))
        self.trace.events.append(ev)
        self._pending.append(ev)
        return ev

    def _sink(self, app: int, anchors: list[Obj] | None = None) -> Optional[int]:
        st = self.state
        a = st.app(app)
        if isinstance(self.policy, Purger) and a.jgr_count >= self.policy.threshold:
            self._emit("JgrDenied", app, self._iface, jgr_count=a.jgr_count)
            return None
        jid = next(self._jids)
        a.jgr_count += 1
        st.jgr_total += 1
        st.created += 1
        self._jgr_app[jid] = app
        self._live_by_app.setdefault(app, set()).add(jid)
        self._emit("JgrCreated", app, self._iface, jgr_total=st.jgr_total)
        if st.jgr_total >= self.config.jgr_capacity:
            st.rebooted = True
            self._emit("SystemReboot", app, self._iface, jgr_total=st.jgr_total)
            raise _Reboot()
        return jid

    def _release(self, jid: int) -> None:
        app = self._jgr_app[jid]
        live = self._live_by_app.get(app, set())
        if jid not in live:
            return
        live.discard(jid)
        st = self.state
        st.app(app).jgr_count -= 1
        st.jgr_total -= 1
        st.deleted += 1
        self._emit("JgrDeleted", app, self._iface, jgr_total=st.jgr_total)

    def _kill(self, app: int) -> None:
        st = self.state
        a = st.app(app)
        released = len(self._live_by_app.pop(app, set()))
        if self.interp is not None:
            self.interp.release_app(app)
        a.jgr_count -= released
        st.jgr_total -= released
        st.released_on_kill += released
        a.alive = False
        a.proxy_count = self.policy.value_after_kill
        self._emit("AppKilled", app, self._iface, released=released, proxy_count=a.proxy_count)

    # -- transitions ---------------------------------------------------------------
    def step(self, action: Action, args: Optional[list[Any]] = None) -> list[SimEvent]:
        st = self.state
        if st.rebooted:
            raise InvalidAction("system has rebooted")
        self._pending: list[SimEvent] = []
        self._iface = None
        a = st.app(action.app)
        if isinstance(action, Restart):
            if a.alive:
                raise InvalidAction(f"app {action.app} is already running")
            st.step += 1
            a.alive = True
            self._emit("AppRestarted", action.app)
            return self._pending
        if not isinstance(action, Call):
            raise InvalidAction(f"unknown action {action!r}")
        if not a.alive:
            raise InvalidAction(f"app {action.app} is not running")
        entry = None
        if self.interp is not None:
            entry = self.entries.get(action.iface)
            if entry is None:
                raise InvalidAction(f"unknown interface {action.iface!r}")
        st.step += 1
        self._iface = action.iface
        self._emit("CallInvoked", action.app, action.iface)
        if action.new_proxy:
            a.proxy_count += 1
            self._emit("ProxyCreated", action.app, action.iface, proxy_count=a.proxy_count)
        p = self.policy
        if isinstance(p, PerInterfaceLimit):
            lim = p.limit(action.iface)
            if lim is not None:
                key = (action.app, action.iface)
                n = st.iface_calls.get(key, 0)
                if n >= lim:
                    self._emit("Blocked", action.app, action.iface, limit=lim)
                    return self._pending
                st.iface_calls[key] = n + 1
        if isinstance(p, BinderProxyLimit) and a.proxy_count > p.threshold:
            self._kill(action.app)
            return self._pending
        try:
            if self.interp is None:
                self._sink(action.app)
            else:
                call_args = args if args is not None else self.default_args(entry, action)
                self.interp.invoke_entry(entry, call_args, action.app)
        except _Reboot:
            pass
        return self._pending

    def default_args(self, entry: EntryPoint, action: Call, params: Optional[dict] = None) -> list[Any]:
        from .poc import build_args

        return build_args(self, entry, params or {}, action.app, action.token)

    # -- scripted runs ---------------------------------------------------------------
    def run_script(self, script: AttackScript) -> SimOutcome:
        s = script.strategy
        app = script.app_uid
        params = {k: thaw(v) for k, v in script.params}

        def call(token: Any, new_proxy: bool) -> None:
            c = Call(app, s.iface, new_proxy, token)
            args = None
            if self.interp is not None:
                from .poc import build_args

                entry = self.entries.get(s.iface)
                if entry is None:
                    raise InvalidAction(f"unknown interface {s.iface!r}")
                args = build_args(self, entry, params, app, token)
            self.step(c, args)

        def spam(n: int, offset: int, one_binder: bool) -> str:
            for i in range(n):
                if self.state.rebooted:
                    return "reboot"
                if not self.state.app(app).alive:
                    return "killed"
                if self.state.step >= self.config.max_steps:
                    return "max_steps"
                call(0 if one_binder else offset + i, not one_binder or (offset + i) == 0)
            if self.state.rebooted:
                return "reboot"
            return "killed" if not self.state.app(app).alive else "budget"

        if isinstance(s, Simple):
            spam(s.n_calls, 0, False)
        elif isinstance(s, OneBinder):
            spam(s.n_calls, 0, True)
        elif isinstance(s, ServiceBased):
            end = spam(s.stage_budget, 0, False)
            if end == "killed" and self.state.step < self.config.max_steps:
                self.step(Restart(app))
                end = spam(s.stage_budget, s.stage_budget, False)
            elif end == "budget":
                spam(s.stage_budget, s.stage_budget, False)
        else:
            raise InvalidAction(f"unknown strategy {s!r}")
        return self.outcome()

    def outcome(self) -> SimOutcome:
        kinds = set(self.trace.kinds())
        st = self.state
        if st.rebooted:
            return SimOutcome("Reboot", st, f"JGR table full at {st.jgr_total}")
        if "AppKilled" in kinds:
            return SimOutcome("AppKilled", st, "binder proxy limit killed the app")
        if "Blocked" in kinds or "JgrDenied" in kinds:
            return SimOutcome("Blocked", st, "defense refused calls or global references")
        return SimOutcome("BudgetExhausted", st, "attack budget spent without effect")


def step(state: SimState, action: Action, config: SimConfig) -> tuple[SimState, list[SimEvent]]:
    """Pure single transition in abstract mode (one proxy, one global ref per call)."""
    sim = Simulator(config)
    sim.state = state.copy()
    for uid, a in sim.state.apps.items():
        sim._live_by_app[uid] = set()
        for _ in range(a.jgr_count):
            jid = next(sim._jids)
            sim._jgr_app[jid] = uid
            sim._live_by_app[uid].add(jid)
    events = sim.step(action)
    return sim.state, events


def run(db: Optional[ProgramDb], config: SimConfig, script: AttackScript) -> tuple[SimTrace, SimOutcome]:
    sim = Simulator(config, db)
    outcome = sim.run_script(script)
    return sim.trace, outcome
