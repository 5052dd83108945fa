from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from ..ir.hierarchy import ClassHierarchy
from ..ir.model import AnalysisConfig, Invoke, ProgramDb
from .entries import EntryPoint
from .resolve import Resolver


@dataclass(frozen=True)
class Edge:
    caller: str
    callee: str
    kind: str
    depth: int
    site: int = field(default=-1, compare=False)

    def to_dict(self) -> dict:
        return {"caller": self.caller, "callee": self.callee, "kind": self.kind, "depth": self.depth}


@dataclass
class CallGraph:
    root: EntryPoint
    nodes: dict[str, int]  # method id -> BFS depth
    edges: list[Edge]

    def successors(self, mid: str) -> list[str]:
        return sorted({e.callee for e in self.edges if e.caller == mid})

    def shortest_path(self, target: str) -> Optional[list[str]]:
        start = self.root.method_id
        if target not in self.nodes:
            return None
        adj: dict[str, list[str]] = {}
        for e in self.edges:
            adj.setdefault(e.caller, []).append(e.callee)
        prev: dict[str, Optional[str]] = {start: None}
        q = deque([start])
        while q:
            cur = q.popleft()
            if cur == target:
                path = []
                node: Optional[str] = cur
                while node is not None:
                    path.append(node)
                    node = prev[node]
                return path[::-1]
            for nxt in sorted(set(adj.get(cur, ()))):
                if nxt not in prev:
                    prev[nxt] = cur
                    q.append(nxt)
        return None

    def to_json(self) -> str:
        doc = {
            "root": self.root.method_id,
            "service": self.root.service_name,
            "nodes": [{"id": n, "depth": d} for n, d in sorted(self.nodes.items())],
            "edges": [e.to_dict() for e in sorted(self.edges, key=lambda e: (e.caller, e.callee, e.kind))],
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def build_call_graph(
    db: ProgramDb,
    hierarchy: Optional[ClassHierarchy],
    entry: EntryPoint,
    config: Optional[AnalysisConfig] = None,
    resolver: Optional[Resolver] = None,
) -> CallGraph:
    """Breadth-first call graph from ``entry``; ``config.max_depth=None`` is unbounded."""
    if config is not None and config is not db.config:
        db = db.with_config(config)
        resolver = None
    r = resolver or Resolver(db, hierarchy)
    limit = db.config.max_depth
    root = entry.method_id
    nodes: dict[str, int] = {root: 0}
    edges: dict[tuple[str, str, str], Edge] = {}
    queue = deque([root])
    while queue:
        mid = queue.popleft()
        depth = nodes[mid]
        if limit is not None and depth >= limit:
            continue
        m = r.method(mid)
        if m is None or m.is_native:
            continue
        for i, s in enumerate(m.body):
            if not isinstance(s, Invoke):
                continue
            for t in r.call_targets(mid, s):
                key = (mid, t.callee, t.kind)
                if key not in edges:
                    edges[key] = Edge(mid, t.callee, t.kind, depth + 1, i)
                if t.callee not in nodes:
                    nodes[t.callee] = depth + 1
                    queue.append(t.callee)
    ordered = [edges[k] for k in sorted(edges)]
    return CallGraph(entry, dict(sorted(nodes.items())), ordered)
