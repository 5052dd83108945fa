"""Data model for the two-sided (managed + native) program corpus."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

SINK = "env.NewGlobalRef"

# Types every corpus may reference without an ``extern`` line.
BUILTIN_TYPES = frozenset(
    {
        "int", "long", "short", "byte", "char", "boolean", "float", "double", "void",
        "java.lang.String", "java.lang.Object",
    }
)
STRING_TYPE = "java.lang.String"
OBJECT_TYPE = "java.lang.Object"
VISIBILITIES = ("public", "hidden", "greylist")


@dataclass(frozen=True)
class Loc:
    unit: str
    line: int

    def __str__(self) -> str:
        return f"{self.unit}:{self.line}"


NOLOC = Loc("<none>", 0)


@dataclass(frozen=True)
class Lit:
    """A string literal operand."""

    value: str


Operand = Union[str, Lit]


@dataclass(frozen=True)
class New:
    dst: str
    type: str
    loc: Loc = field(default=NOLOC, compare=False, repr=False)


@dataclass(frozen=True)
class Assign:
    dst: str
    src: Operand
    loc: Loc = field(default=NOLOC, compare=False, repr=False)


@dataclass(frozen=True)
class FieldGet:
    dst: str
    recv: str
    field: str
    loc: Loc = field(default=NOLOC, compare=False, repr=False)


@dataclass(frozen=True)
class FieldPut:
    recv: str
    field: str
    src: Operand
    loc: Loc = field(default=NOLOC, compare=False, repr=False)


@dataclass(frozen=True)
class Invoke:
    dst: Optional[str]
    recv: str
    method: str
    args: tuple[Operand, ...]
    dispatch: str  # virtual | interface | static
    loc: Loc = field(default=NOLOC, compare=False, repr=False)


@dataclass(frozen=True)
class Return:
    src: Optional[Operand]
    loc: Loc = field(default=NOLOC, compare=False, repr=False)


Stmt = Union[New, Assign, FieldGet, FieldPut, Invoke, Return]


def defined_var(stmt: Stmt) -> Optional[str]:
    if isinstance(stmt, (New, Assign, FieldGet)):
        return stmt.dst
    if isinstance(stmt, Invoke):
        return stmt.dst
    return None


def used_operands(stmt: Stmt) -> list[Operand]:
    if isinstance(stmt, Assign):
        return [stmt.src]
    if isinstance(stmt, FieldGet):
        return [stmt.recv]
    if isinstance(stmt, FieldPut):
        return [stmt.recv, stmt.src]
    if isinstance(stmt, Invoke):
        ops: list[Operand] = [] if stmt.dispatch == "static" else [stmt.recv]
        return ops + list(stmt.args)
    if isinstance(stmt, Return):
        return [] if stmt.src is None else [stmt.src]
    return []


@dataclass(frozen=True)
class FieldDecl:
    name: str
    type: str
    static: bool = False
    loc: Loc = field(default=NOLOC, compare=False, repr=False)


@dataclass(frozen=True)
class ManagedMethod:
    name: str
    params: tuple[tuple[str, str], ...] = ()
    ret: Optional[str] = None
    visibility: str = "public"
    permission: Optional[str] = None
    is_native: bool = False
    body: tuple[Stmt, ...] = ()
    abstract: bool = False  # declared with ';' inside an interface
    loc: Loc = field(default=NOLOC, compare=False, repr=False)

    @property
    def param_names(self) -> tuple[str, ...]:
        return tuple(p for p, _ in self.params)


@dataclass(frozen=True)
class ManagedClass:
    fqname: str
    kind: str  # class | interface
    extends: tuple[str, ...] = ()
    implements: tuple[str, ...] = ()
    fields: tuple[FieldDecl, ...] = ()
    methods: tuple[ManagedMethod, ...] = ()
    loc: Loc = field(default=NOLOC, compare=False, repr=False)

    @property
    def parents(self) -> tuple[str, ...]:
        return self.extends + self.implements

    @property
    def is_interface(self) -> bool:
        return self.kind == "interface"

    def method(self, name: str) -> Optional[ManagedMethod]:
        for m in self.methods:
            if m.name == name:
                return m
        return None

    def field_decl(self, name: str) -> Optional[FieldDecl]:
        for f in self.fields:
            if f.name == name:
                return f
        return None


@dataclass(frozen=True)
class NativeCall:
    callee: str
    args: tuple[str, ...] = ()
    loc: Loc = field(default=NOLOC, compare=False, repr=False)


@dataclass(frozen=True)
class NativeFn:
    name: str
    params: tuple[str, ...] = ()
    calls: tuple[NativeCall, ...] = ()
    loc: Loc = field(default=NOLOC, compare=False, repr=False)

    @property
    def callees(self) -> tuple[str, ...]:
        return tuple(c.callee for c in self.calls)


@dataclass(frozen=True)
class JniRegistration:
    managed_class: str
    entries: tuple[tuple[str, str], ...]
    loc: Loc = field(default=NOLOC, compare=False, repr=False)


@dataclass(frozen=True)
class StubBinding:
    interface: str
    impl: str
    loc: Loc = field(default=NOLOC, compare=False, repr=False)


def _default_sinks() -> frozenset[str]:
    from .config import DEFAULT_COLLECTION_SINKS

    return DEFAULT_COLLECTION_SINKS


def _default_roots() -> frozenset[str]:
    from .config import DEFAULT_BINDER_ROOTS

    return DEFAULT_BINDER_ROOTS


def _default_edges() -> tuple[tuple[str, str], ...]:
    from .config import DEFAULT_IMPLICIT_EDGES

    return DEFAULT_IMPLICIT_EDGES


@dataclass(frozen=True)
class AnalysisConfig:
    """Knobs for the managed-side analysis.

    ``max_depth=None`` means unbounded; otherwise it counts call levels from
    the entry point (the entry itself sits at depth 0).
    """

    max_depth: Optional[int] = 4
    implicit_edges: tuple[tuple[str, str], ...] = field(default_factory=_default_edges)
    collection_sinks: frozenset[str] = field(default_factory=_default_sinks)
    greylist: frozenset[str] = frozenset()
    binder_root_types: frozenset[str] = field(default_factory=_default_roots)

    def __post_init__(self) -> None:
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError(f"max_depth must be >= 1, got {self.max_depth}")


@dataclass(frozen=True)
class ProgramDb:
    managed_classes: dict[str, ManagedClass] = field(default_factory=dict)
    native_fns: dict[str, NativeFn] = field(default_factory=dict)
    jni_registrations: tuple[JniRegistration, ...] = ()
    stub_bindings: dict[str, str] = field(default_factory=dict)
    externs: frozenset[str] = frozenset()
    config: AnalysisConfig = field(default_factory=AnalysisConfig)
    units: tuple[str, ...] = field(default=(), compare=False)
    stub_locs: dict[str, Loc] = field(default_factory=dict, compare=False, repr=False)

    def with_config(self, config: AnalysisConfig) -> "ProgramDb":
        from dataclasses import replace

        return replace(self, config=config)

    def cls(self, fqname: str) -> Optional[ManagedClass]:
        return self.managed_classes.get(fqname)

    def method(self, mid: str) -> Optional[ManagedMethod]:
        cls_name, _, name = mid.rpartition(".")
        c = self.managed_classes.get(cls_name)
        return c.method(name) if c else None

    def is_known_type(self, name: str) -> bool:
        return name in self.managed_classes or name in self.externs or name in BUILTIN_TYPES

    def is_empty(self) -> bool:
        return not (self.managed_classes or self.native_fns or self.jni_registrations
                    or self.stub_bindings or self.externs)


def method_id(cls: str, name: str) -> str:
    return f"{cls}.{name}"


def split_method_id(mid: str) -> tuple[str, str]:
    cls, _, name = mid.rpartition(".")
    return cls, name
