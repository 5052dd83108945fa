from __future__ import annotations

from typing import Optional, Sequence

from ..ir.model import ProgramDb
from ..managed.resolve import Resolver
from .engine import Simulator
from .model import (
    AttackScript,
    BinderProxyLimit,
    DefensePolicy,
    NoDefense,
    OneBinder,
    PerInterfaceLimit,
    Purger,
    ServiceBased,
    Simple,
    SimConfig,
    SimOutcome,
    Strategy,
    policy_label,
)

DEFAULT_IFACE = "audio.startWatchingRoutes"


def default_policies(threshold: int, iface: str = DEFAULT_IFACE) -> list[DefensePolicy]:
    """The undefended baseline followed by the four defense generations."""
    return [
        NoDefense(),
        PerInterfaceLimit(((iface, threshold),)),
        BinderProxyLimit(threshold, buggy_reset=True),
        BinderProxyLimit(threshold, buggy_reset=False),
        Purger(threshold),
    ]


def default_attacks(iface: str, capacity: int) -> list[Strategy]:
    n = 2 * capacity
    return [Simple(iface, n), ServiceBased(iface, n), OneBinder(iface, n)]


def outcome_matrix(
    db: Optional[ProgramDb],
    policies: Sequence[DefensePolicy],
    attacks: Sequence[Strategy],
    capacity: int,
    app_uid: int = 10001,
    params: tuple = (),
) -> dict[tuple[str, str], SimOutcome]:
    r = Resolver(db) if db is not None else None
    out: dict[tuple[str, str], SimOutcome] = {}
    for p in policies:
        for a in attacks:
            sim = Simulator(SimConfig(jgr_capacity=capacity, policy=p), db, r)
            out[(policy_label(p), type(a).__name__)] = sim.run_script(AttackScript(a, app_uid, params))
    return out


def render_matrix(matrix: dict[tuple[str, str], SimOutcome], fmt: str = "table") -> str:
    rows: list[str] = []
    cols: list[str] = []
    for p, a in matrix:
        if p not in rows:
            rows.append(p)
        if a not in cols:
            cols.append(a)
    if fmt == "csv":
        lines = [",".join(["policy", *cols])]
        lines += [",".join([f'"{p}"', *(matrix[(p, a)].kind for a in cols)]) for p in rows]
        return "\n".join(lines) + "\n"
    if fmt == "json":
        import json

        return json.dumps({p: {a: matrix[(p, a)].kind for a in cols} for p in rows}, indent=2) + "\n"
    w0 = max(len("Policy"), *(len(p) for p in rows))
    widths = [max(len(a), *(len(matrix[(p, a)].kind) for p in rows)) for a in cols]
    fmt_row = lambda first, cells: "  ".join([first.ljust(w0), *(c.ljust(w) for c, w in zip(cells, widths))]).rstrip()  # noqa: E731
    lines = [fmt_row("Policy", cols), fmt_row("-" * w0, ["-" * w for w in widths])]
    lines += [fmt_row(p, [matrix[(p, a)].kind for a in cols]) for p in rows]
    return "\n".join(lines) + "\n"
