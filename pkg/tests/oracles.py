"""Independent reference implementations used by the property tests.

The random corpus generator keeps its own model of what it emitted; the
oracles answer reachability, dispatch and escape questions from that model
alone, never from the parsed ProgramDb.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

SINK = "env.NewGlobalRef"
METHOD_NAMES = ("a", "b", "c", "d")


# -- native graphs --------------------------------------------------------------


def random_native_graph(rng: random.Random, n_fns: int) -> dict[str, list[str]]:
    names = [f"nf{i}" for i in range(n_fns)]
    graph = {}
    for n in names:
        callees = rng.sample(names, k=rng.randint(0, min(3, n_fns)))
        if rng.random() < 0.35:
            callees.append(SINK)
        if rng.random() < 0.2:
            callees.append("ioctl")
        rng.shuffle(callees)
        graph[n] = callees
    return graph


def native_text(graph: dict[str, list[str]]) -> str:
    lines = ["extern ioctl"]
    for n, callees in graph.items():
        lines.append(f"native fn {n}(env) {{")
        lines += [f"    call {c}()" for c in callees]
        lines.append("}")
    return "\n".join(lines) + "\n"


def all_sink_paths(graph: dict[str, list[str]], entry: str) -> list[tuple[str, ...]]:
    """Every simple path from ``entry`` ending at the sink."""
    out: list[tuple[str, ...]] = []

    def dfs(path: list[str]) -> None:
        for c in graph.get(path[-1], []):
            if c == SINK:
                out.append((*path, SINK))
            elif c in graph and c not in path:
                path.append(c)
                dfs(path)
                path.pop()

    if entry in graph:
        dfs([entry])
    return out


def best_sink_path(graph: dict[str, list[str]], entry: str) -> Optional[tuple[str, ...]]:
    paths = all_sink_paths(graph, entry)
    if not paths:
        return None
    return min(paths, key=lambda p: (len(p), p))


# -- managed corpora -------------------------------------------------------------


@dataclass
class GClass:
    name: str
    parent: Optional[str] = None
    implements: tuple[str, ...] = ()
    interface: bool = False
    fields: dict[str, str] = field(default_factory=dict)
    methods: dict[str, list] = field(default_factory=dict)  # name -> actions
    natives: dict[str, str] = field(default_factory=dict)  # name -> native fn
    abstract: tuple[str, ...] = ()


@dataclass
class GCorpus:
    classes: dict[str, GClass]
    native: dict[str, list[str]]
    services: dict[str, str]  # service name -> class
    text: str = ""

    # The oracle side ------------------------------------------------------
    def ancestors(self, c: str) -> set[str]:
        seen: set[str] = set()
        stack = [c]
        while stack:
            g = self.classes.get(stack.pop())
            if g is None:
                continue
            for p in ([g.parent] if g.parent else []) + list(g.implements):
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
        return seen

    def subtypes(self, t: str) -> list[str]:
        return sorted(
            c for c, g in self.classes.items() if not g.interface and (c == t or t in self.ancestors(c))
        )

    def resolve(self, c: str, m: str) -> Optional[str]:
        cur: Optional[str] = c
        while cur is not None:
            g = self.classes[cur]
            if m in g.methods or m in g.natives:
                return f"{cur}.{m}"
            cur = g.parent
        return None

    def targets(self, owner: str, action: tuple) -> set[str]:
        kind = action[0]
        if kind == "call_this":
            recv, m = owner, action[1]
        elif kind == "call_field":
            recv, m = self.classes[owner].fields[action[1]], action[2]
        elif kind == "call_new":
            recv, m = action[1], action[2]
        elif kind == "post":
            r = self.resolve(action[1], "run")
            return {r} if r else set()
        else:
            return set()
        return {t for t in (self.resolve(s, m) for s in self.subtypes(recv)) if t}

    def method_actions(self, mid: str) -> Optional[list]:
        cls, m = mid.rsplit(".", 1)
        return self.classes[cls].methods.get(m)

    def edges(self) -> dict[str, set[str]]:
        out: dict[str, set[str]] = {}
        for c, g in self.classes.items():
            for m, actions in g.methods.items():
                out[f"{c}.{m}"] = set().union(*(self.targets(c, a) for a in actions)) if actions else set()
        return out

    def distances(self, entry: str, max_depth: Optional[int]) -> dict[str, int]:
        """Shortest call distance by repeated relaxation (no worklist ordering)."""
        edges = self.edges()
        dist = {entry: 0}
        changed = True
        while changed:
            changed = False
            for u, d in list(dist.items()):
                if max_depth is not None and d >= max_depth:
                    continue
                for v in edges.get(u, ()):
                    if dist.get(v, 1 << 30) > d + 1:
                        dist[v] = d + 1
                        changed = True
        return dist

    def creating_fns(self) -> set[str]:
        return {f for f in self.native if all_sink_paths(self.native, f)}

    def entries(self) -> list[tuple[str, str, str]]:
        out = []
        for svc, c in self.services.items():
            for m in self.classes[c].methods:
                out.append((svc, c, m))
        return sorted(out)

    def findings(self, max_depth: Optional[int]) -> set[tuple[str, str, str]]:
        creating = self.creating_fns()
        out = set()
        for svc, c, m in self.entries():
            reached = self.distances(f"{c}.{m}", max_depth)
            jni = False
            escape = False
            for mid in reached:
                cls, name = mid.rsplit(".", 1)
                g = self.classes[cls]
                if name in g.natives and g.natives[name] in creating:
                    jni = True
                for a in g.methods.get(name, []):
                    if a[0] == "store" and a[2] == "Rec":
                        escape = True
            if jni and escape:
                out.add((svc, c, m))
        return out


def random_corpus(rng: random.Random, max_methods: int = 15, max_fns: int = 12) -> GCorpus:
    native = random_native_graph(rng, rng.randint(1, max_fns))
    fns = sorted(native)
    classes: dict[str, GClass] = {
        "Rec": GClass("Rec", fields={"b": "android.os.IBinder"}),
        "Plain": GClass("Plain", fields={"s": "java.lang.String"}),
    }
    budget = max_methods - 1  # Boot.main
    iface = None
    if rng.random() < 0.5:
        iface = GClass("I0", interface=True, abstract=tuple(rng.sample(METHOD_NAMES, k=rng.randint(1, 2))))
        classes["I0"] = iface
        budget -= len(iface.abstract)
    tasks = []
    for i in range(rng.randint(0, 1)):
        t = GClass(f"Task{i}", implements=("java.lang.Runnable",))
        classes[t.name] = t
        tasks.append(t)
        budget -= 1
    names = [f"C{i}" for i in range(rng.randint(2, 4))]
    for i, n in enumerate(names):
        parent = rng.choice(names[:i]) if i and rng.random() < 0.5 else None
        impl = ("I0",) if iface and rng.random() < 0.5 else ()
        classes[n] = GClass(n, parent=parent, implements=impl)
    callable_types = names + (["I0"] if iface else [])

    # declare methods first so call actions can refer to them
    decls: list[tuple[GClass, str]] = []
    for n in names:
        g = classes[n]
        if g.implements:
            for m in iface.abstract:
                g.methods[m] = []
                decls.append((g, m))
                budget -= 1
    for n in names:
        g = classes[n]
        for m in rng.sample(METHOD_NAMES, k=rng.randint(0, 2)):
            if budget <= 0 or m in g.methods:
                continue
            if rng.random() < 0.6:
                g.natives[f"n{m}"] = rng.choice(fns)
                budget -= 1
            g.methods[m] = []
            decls.append((g, m))
            budget -= 1
    for t in tasks:
        t.methods["run"] = []
        decls.append((t, "run"))

    def available(t: str) -> list[str]:
        out: set[str] = set()
        for c in [t, *sorted(GCorpus(classes, native, {}).ancestors(t))]:
            g = classes.get(c)
            if g is None:
                continue
            out.update(g.methods)
            out.update(g.natives)
            out.update(g.abstract)
        return sorted(out)

    for g, m in decls:
        actions: list[tuple] = []
        for _ in range(rng.randint(1, 4)):
            r = rng.random()
            if r < 0.35:
                ms = available(g.name)
                if ms:
                    actions.append(("call_this", rng.choice(ms)))
            elif r < 0.55 and callable_types:
                t = rng.choice(callable_types)
                ms = available(t)
                if ms:
                    fname = f"f_{t}"
                    g.fields[fname] = t
                    actions.append(("call_field", fname, rng.choice(ms)))
            elif r < 0.62:
                t = rng.choice(names)
                ms = available(t)
                if ms:
                    actions.append(("call_new", t, rng.choice(ms)))
            elif r < 0.7 and tasks:
                g.fields["mH"] = "android.os.Handler"
                actions.append(("post", rng.choice(tasks).name))
            elif r < 0.92:
                fname = f"lst_{g.name}"
                g.fields[fname] = "java.util.ArrayList"
                actions.append(("store", fname, rng.choice(["Rec", "Rec", "Plain"])))
            else:
                actions.append(("local_store", rng.choice(["Rec", "Plain"])))
        g.methods[m] = actions

    services = {}
    for i, n in enumerate(rng.sample(names, k=rng.randint(1, min(2, len(names))))):
        services[f"svc{i}"] = n
    corpus = GCorpus(classes, native, services)
    corpus.text = emit(corpus)
    return corpus


def _body(g: GClass, actions: list) -> list[str]:
    lines = []
    for i, a in enumerate(actions):
        v = f"v{i}"
        if a[0] == "call_this":
            lines.append(f"call this.{a[1]}()")
        elif a[0] == "call_field":
            lines += [f"{v} = this.{a[1]}", f"call {v}.{a[2]}()"]
        elif a[0] == "call_new":
            lines += [f"{v} = new {a[1]}", f"call {v}.{a[2]}()"]
        elif a[0] == "post":
            lines += [f"{v} = new {a[1]}", f"h{i} = this.mH", f"call h{i}.post({v})"]
        elif a[0] == "store":
            lines += [f"{v} = new {a[2]}", f"l{i} = this.{a[1]}", f"call l{i}.add({v})"]
        elif a[0] == "local_store":
            lines += [f"{v} = new {a[1]}", f"l{i} = new java.util.ArrayList", f"call l{i}.add({v})"]
    return lines


def emit(c: GCorpus) -> str:
    out = [
        "extern java.util.ArrayList",
        "extern android.os.IBinder",
        "extern android.os.Handler",
        "extern java.lang.Runnable",
        "extern android.os.ServiceManager",
    ]
    for g in c.classes.values():
        head = f"managed {'interface' if g.interface else 'class'} {g.name}"
        if g.parent:
            head += f" extends {g.parent}"
        if g.implements:
            head += " implements " + ", ".join(g.implements)
        out.append(head + " {")
        for f, t in g.fields.items():
            out.append(f"    field {f}: {t}")
        for m in g.abstract:
            out.append(f"    method {m}();")
        for m, actions in g.methods.items():
            out.append(f"    method {m}() {{")
            out += ["        " + line for line in _body(g, actions)]
            out.append("    }")
        for m in g.natives:
            out.append(f"    method {m}() native;")
        out.append("}")
        if g.natives:
            out.append(f"jni_register class={g.name} {{")
            out.append(",\n".join(f'    "{m}" -> {fn}' for m, fn in g.natives.items()))
            out.append("}")
    out.append("managed class Boot {")
    out.append("    method main() {")
    for i, (svc, cls) in enumerate(c.services.items()):
        out.append(f"        s{i} = new {cls}")
        out.append(f'        scall android.os.ServiceManager.addService("{svc}", s{i})')
    out.append("    }")
    out.append("}")
    return "\n".join(out) + "\n" + native_text(c.native)
