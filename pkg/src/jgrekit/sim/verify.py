from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from ..detector import LeakFinding
from ..ir.model import ProgramDb
from ..managed.resolve import Resolver
from .engine import Simulator
from .model import SimConfig, SimOutcome
from .poc import ParamRules, UnconstructibleParam, generate_poc


@dataclass
class Verification:
    finding: LeakFinding
    verified: bool
    outcome: Optional[SimOutcome]
    reason: str

    def to_dict(self) -> dict:
        d = self.finding.to_dict()
        d["verified"] = self.verified
        d["outcome"] = self.outcome.kind if self.outcome else None
        d["reason"] = self.reason
        return d


def verify(
    db: ProgramDb,
    findings: Sequence[LeakFinding],
    config: SimConfig,
    rules: Optional[ParamRules] = None,
    strategy: str = "Simple",
) -> list[Verification]:
    """Replay a synthesized PoC per finding; verified means the system rebooted."""
    r = Resolver(db)
    out = []
    for f in findings:
        try:
            script = generate_poc(db, f.entry, rules, strategy, budget=2 * config.jgr_capacity, resolver=r)
        except UnconstructibleParam as e:
            out.append(Verification(f, False, None, f"unconstructible: {e}"))
            continue
        sim = Simulator(config, db, r)
        outcome = sim.run_script(script)
        ok = outcome.kind == "Reboot"
        out.append(Verification(f, ok, outcome, outcome.reason))
    return out
