"""Parser for the ``.jgr`` corpus format.

A corpus is a sequence of declarations::

    extern android.os.IBinder
    managed class com.example.Svc extends android.os.Binder implements com.example.ISvc {
        field mList: java.util.ArrayList
        method register(cb: com.example.ICallback) public permission=android.permission.X {
            l = this.mList
            call l.add(cb)
        }
        method init() hidden native { }
    }
    managed interface com.example.ICallback extends android.os.IInterface {
        method asBinder(): android.os.IBinder;
    }
    stub com.example.ISvc -> com.example.Svc
    native fn svc_init(env, obj) { call env.NewGlobalRef(obj) }
    jni_register class=com.example.Svc { "init" -> svc_init }

Statements and declarations are separated by newlines or ``;``.  Anything
the grammar does not name is a :class:`CorpusSyntaxError`; nothing is skipped.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .errors import CorpusSyntaxError, DuplicateError, LinkError
from .model import (
    BUILTIN_TYPES,
    SINK,
    VISIBILITIES,
    AnalysisConfig,
    Assign,
    FieldDecl,
    FieldGet,
    FieldPut,
    Invoke,
    JniRegistration,
    Lit,
    Loc,
    ManagedClass,
    ManagedMethod,
    NativeCall,
    NativeFn,
    New,
    Operand,
    ProgramDb,
    Return,
    Stmt,
    StubBinding,
)

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<comment>\#[^\n]*)
  | (?P<nl>\n)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<arrow>->)
  | (?P<name>[A-Za-z_$][\w$]*(?:(?:\.|::)[A-Za-z_$][\w$]*)*)
  | (?P<punct>[{}(),:;=])
    """,
    re.VERBOSE,
)

_IDENT = re.compile(r"^[A-Za-z_$][\w$]*$")
KEYWORDS = frozenset({"new", "call", "scall", "return", "method", "field", "this"})


@dataclass(frozen=True)
class Token:
    kind: str  # name | string | arrow | punct | sep | eof
    value: str
    line: int
    col: int


@dataclass(frozen=True)
class SourceUnit:
    name: str
    text: str


def tokenize(text: str, unit: str = "<input>") -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    n = len(text)
    while pos < n:
        m = _TOKEN.match(text, pos)
        if m is None:
            raise CorpusSyntaxError(unit, line, f"unexpected character {text[pos]!r}", pos - line_start + 1)
        kind = m.lastgroup
        value = m.group()
        col = pos - line_start + 1
        if kind == "nl":
            tokens.append(Token("sep", "\n", line, col))
            line += 1
            line_start = m.end()
        elif kind == "punct" and value == ";":
            tokens.append(Token("sep", ";", line, col))
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, value, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


def _unquote(s: str) -> str:
    body = s[1:-1]
    return re.sub(r"\\(.)", r"\1", body)


@dataclass
class _UnitAst:
    name: str
    externs: list[tuple[str, Loc]]
    classes: list[ManagedClass]
    natives: list[NativeFn]
    registrations: list[JniRegistration]
    stubs: list[StubBinding]


class _Parser:
    def __init__(self, text: str, unit: str):
        self.unit = unit
        self.toks = tokenize(text, unit)
        self.i = 0

    # -- token helpers -------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, msg: str, tok: Optional[Token] = None) -> CorpusSyntaxError:
        t = tok or self.tok
        got = "end of input" if t.kind == "eof" else repr(t.value)
        return CorpusSyntaxError(self.unit, t.line, f"{msg} (got {got})", t.col)

    def loc(self, tok: Optional[Token] = None) -> Loc:
        return Loc(self.unit, (tok or self.tok).line)

    def advance(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def at(self, kind: str, value: Optional[str] = None) -> bool:
        t = self.tok
        return t.kind == kind and (value is None or t.value == value)

    def at_kw(self, word: str) -> bool:
        return self.at("name", word)

    def expect(self, kind: str, value: Optional[str] = None, what: str = "") -> Token:
        if not self.at(kind, value):
            raise self.error(f"expected {what or value or kind}")
        return self.advance()

    def expect_kw(self, word: str) -> Token:
        return self.expect("name", word, f"'{word}'")

    def name(self, what: str = "name") -> str:
        return self.expect("name", what=what).value

    def ident(self, what: str = "identifier") -> str:
        t = self.expect("name", what=what)
        if not _IDENT.match(t.value):
            raise self.error(f"expected {what}", t)
        return t.value

    def skip_seps(self) -> None:
        while self.tok.kind == "sep":
            self.i += 1

    def end_of_item(self) -> None:
        if self.at("sep"):
            self.skip_seps()
        elif not (self.at("punct", "}") or self.at("eof")):
            raise self.error("expected end of line")

    # -- declarations ----------------------------------------------------
    def parse_unit(self) -> _UnitAst:
        ast = _UnitAst(self.unit, [], [], [], [], [])
        while True:
            self.skip_seps()
            if self.at("eof"):
                return ast
            t = self.tok
            if self.at_kw("extern"):
                self.advance()
                ast.externs.append((self.name("type name"), self.loc(t)))
            elif self.at_kw("managed"):
                ast.classes.append(self.parse_class())
            elif self.at_kw("stub"):
                self.advance()
                iface = self.name("interface name")
                self.expect("arrow", what="'->'")
                ast.stubs.append(StubBinding(iface, self.name("class name"), self.loc(t)))
            elif self.at_kw("native"):
                ast.natives.append(self.parse_native_fn())
            elif self.at_kw("jni_register"):
                ast.registrations.append(self.parse_jni_register())
            else:
                raise self.error("expected a declaration")
            self.end_of_item()

    def parse_class(self) -> ManagedClass:
        start = self.advance()
        if self.at_kw("class"):
            kind = "class"
        elif self.at_kw("interface"):
            kind = "interface"
        else:
            raise self.error("expected 'class' or 'interface'")
        self.advance()
        fqname = self.name("class name")
        extends: list[str] = []
        implements: list[str] = []
        if self.at_kw("extends"):
            self.advance()
            extends.append(self.name("type name"))
            if kind == "interface":
                while self.at("punct", ","):
                    self.advance()
                    extends.append(self.name("type name"))
        if kind == "class" and self.at_kw("implements"):
            self.advance()
            implements.append(self.name("type name"))
            while self.at("punct", ","):
                self.advance()
                implements.append(self.name("type name"))
        self.skip_seps()
        self.expect("punct", "{")
        fields: list[FieldDecl] = []
        methods: list[ManagedMethod] = []
        while True:
            self.skip_seps()
            if self.at("punct", "}"):
                self.advance()
                break
            if self.at_kw("field"):
                ft = self.advance()
                fname = self.ident("field name")
                self.expect("punct", ":")
                ftype = self.name("type name")
                static = False
                if self.at_kw("static"):
                    self.advance()
                    static = True
                fields.append(FieldDecl(fname, ftype, static, self.loc(ft)))
                self.end_of_item()
            elif self.at_kw("method"):
                methods.append(self.parse_method(kind == "interface"))
            else:
                raise self.error("expected 'field', 'method' or '}'")
        return ManagedClass(fqname, kind, tuple(extends), tuple(implements), tuple(fields), tuple(methods), self.loc(start))

    def parse_method(self, in_interface: bool) -> ManagedMethod:
        mt = self.advance()
        name = self.ident("method name")
        self.expect("punct", "(")
        params: list[tuple[str, str]] = []
        if not self.at("punct", ")"):
            while True:
                pname = self.ident("parameter name")
                self.expect("punct", ":")
                params.append((pname, self.name("type name")))
                if not self.at("punct", ","):
                    break
                self.advance()
        self.expect("punct", ")")
        ret = None
        if self.at("punct", ":"):
            self.advance()
            ret = self.name("return type")
        visibility = "public"
        permission = None
        is_native = False
        while self.at("name"):
            word = self.tok.value
            if word in VISIBILITIES:
                visibility = word
                self.advance()
            elif word == "native":
                is_native = True
                self.advance()
            elif word == "permission":
                self.advance()
                self.expect("punct", "=")
                if self.at("string"):
                    permission = _unquote(self.advance().value)
                else:
                    permission = self.name("permission")
            else:
                raise self.error("unknown method modifier")
        if self.at("punct", "{"):
            body = self.parse_body()
            return ManagedMethod(name, tuple(params), ret, visibility, permission, is_native, body, False, self.loc(mt))
        if self.at("sep") and (in_interface or is_native):
            return ManagedMethod(name, tuple(params), ret, visibility, permission, is_native, (), in_interface, self.loc(mt))
        raise self.error("expected '{' to open the method body")

    def parse_body(self) -> tuple[Stmt, ...]:
        self.expect("punct", "{")
        stmts: list[Stmt] = []
        while True:
            self.skip_seps()
            if self.at("punct", "}"):
                self.advance()
                return tuple(stmts)
            stmts.append(self.parse_stmt())
            self.end_of_item()

    def operand(self) -> Operand:
        if self.at("string"):
            return Lit(_unquote(self.advance().value))
        return self.ident("variable or string literal")

    def parse_invoke(self, dst: Optional[str]) -> Invoke:
        kw = self.advance().value
        t = self.expect("name", what="call target")
        if "." not in t.value:
            raise self.error("call target must be <receiver>.<method>", t)
        recv, _, method = t.value.rpartition(".")
        if kw == "call" and not _IDENT.match(recv):
            raise self.error("instance call receiver must be a variable (use scall for static calls)", t)
        self.expect("punct", "(")
        args: list[Operand] = []
        if not self.at("punct", ")"):
            while True:
                args.append(self.operand())
                if not self.at("punct", ","):
                    break
                self.advance()
        self.expect("punct", ")")
        dispatch = "static" if kw == "scall" else "virtual"
        return Invoke(dst, recv, method, tuple(args), dispatch, Loc(self.unit, t.line))

    def parse_stmt(self) -> Stmt:
        t = self.tok
        loc = self.loc()
        if self.at_kw("return"):
            self.advance()
            if self.at("name") or self.at("string"):
                return Return(self.operand(), loc)
            return Return(None, loc)
        if self.at_kw("call") or self.at_kw("scall"):
            return self.parse_invoke(None)
        if not self.at("name"):
            raise self.error("expected a statement")
        lhs = self.advance().value
        if lhs in KEYWORDS - {"this"}:
            raise self.error("unknown statement form", t)
        self.expect("punct", "=", "'=' (unknown statement form)")
        if "." in lhs:
            recv, _, fld = lhs.rpartition(".")
            if not _IDENT.match(recv) or not _IDENT.match(fld):
                raise self.error("field store must be <var>.<field> = <var>", t)
            return FieldPut(recv, fld, self.operand(), loc)
        if not _IDENT.match(lhs) or lhs == "this":
            raise self.error("assignment target must be a local variable", t)
        if self.at_kw("new"):
            self.advance()
            return New(lhs, self.name("type name"), loc)
        if self.at_kw("call") or self.at_kw("scall"):
            return self.parse_invoke(lhs)
        if self.at("string"):
            return Assign(lhs, Lit(_unquote(self.advance().value)), loc)
        rt = self.expect("name", what="right-hand side")
        if rt.value in KEYWORDS - {"this"}:
            raise self.error("unknown right-hand side", rt)
        if "." in rt.value:
            recv, _, fld = rt.value.rpartition(".")
            return FieldGet(lhs, recv, fld, loc)
        return Assign(lhs, rt.value, loc)

    def parse_native_fn(self) -> NativeFn:
        start = self.advance()
        self.expect_kw("fn")
        name = self.name("function name")
        params = self._name_list()
        self.skip_seps()
        self.expect("punct", "{")
        calls: list[NativeCall] = []
        while True:
            self.skip_seps()
            if self.at("punct", "}"):
                self.advance()
                break
            ct = self.expect_kw("call")
            callee = self.name("callee")
            calls.append(NativeCall(callee, self._name_list(), self.loc(ct)))
            self.end_of_item()
        return NativeFn(name, params, tuple(calls), self.loc(start))

    def _name_list(self) -> tuple[str, ...]:
        self.expect("punct", "(")
        out: list[str] = []
        if not self.at("punct", ")"):
            while True:
                out.append(self.ident("argument"))
                if not self.at("punct", ","):
                    break
                self.advance()
        self.expect("punct", ")")
        return tuple(out)

    def parse_jni_register(self) -> JniRegistration:
        start = self.advance()
        self.expect_kw("class")
        self.expect("punct", "=")
        cls = self.name("class name")
        self.skip_seps()
        self.expect("punct", "{")
        entries: list[tuple[str, str]] = []
        while True:
            self.skip_seps()
            if self.at("punct", "}"):
                self.advance()
                break
            if entries:
                self.expect("punct", ",", "',' or '}'")
                self.skip_seps()
            mname = _unquote(self.expect("string", what="quoted method name").value)
            self.expect("arrow", what="'->'")
            entries.append((mname, self.name("native function name")))
        return JniRegistration(cls, tuple(entries), self.loc(start))


def parse_unit(text: str, unit: str = "<input>") -> _UnitAst:
    return _Parser(text, unit).parse_unit()


UnitLike = Union[SourceUnit, tuple, str]


def _as_units(sources: Iterable[UnitLike]) -> list[SourceUnit]:
    units = []
    for i, s in enumerate(sources):
        if isinstance(s, SourceUnit):
            units.append(s)
        elif isinstance(s, tuple):
            units.append(SourceUnit(str(s[0]), s[1]))
        else:
            units.append(SourceUnit(f"<unit{i}>", s))
    return units


def parse_corpus(sources: Iterable[UnitLike], config: Optional[AnalysisConfig] = None) -> ProgramDb:
    """Parse and link text units into a :class:`ProgramDb`.

    Raises CorpusSyntaxError, LinkError or DuplicateError.  Softer invariant
    violations (use-before-def, duplicate JNI bindings, cycles) are left to
    :func:`jgrekit.ir.validate.validate`.
    """
    asts = [parse_unit(u.text, u.name) for u in _as_units(sources)]
    return link(asts, config or AnalysisConfig())


def link(asts: Sequence[_UnitAst], config: AnalysisConfig) -> ProgramDb:
    externs: set[str] = set()
    classes: dict[str, ManagedClass] = {}
    natives: dict[str, NativeFn] = {}
    regs: list[JniRegistration] = []
    stubs: dict[str, str] = {}
    stub_locs: dict[str, Loc] = {}
    for ast in asts:
        externs.update(n for n, _ in ast.externs)
        for c in ast.classes:
            if c.fqname in classes:
                raise DuplicateError(c.fqname, str(c.loc))
            seen_m: set[str] = set()
            for m in c.methods:
                if m.name in seen_m:
                    raise DuplicateError(f"{c.fqname}.{m.name}", str(m.loc))
                seen_m.add(m.name)
            seen_f: set[str] = set()
            for f in c.fields:
                if f.name in seen_f:
                    raise DuplicateError(f"{c.fqname}.{f.name}", str(f.loc))
                seen_f.add(f.name)
            classes[c.fqname] = c
        for fn in ast.natives:
            if fn.name in natives:
                raise DuplicateError(fn.name, str(fn.loc))
            natives[fn.name] = fn
        regs.extend(ast.registrations)
        for sb in ast.stubs:
            if sb.interface in stubs:
                raise DuplicateError(f"stub {sb.interface}", str(sb.loc))
            stubs[sb.interface] = sb.impl
            stub_locs[sb.interface] = sb.loc

    def known_type(name: str) -> bool:
        return name in classes or name in externs or name in BUILTIN_TYPES

    def need(name: str, where: Loc) -> None:
        if not known_type(name):
            raise LinkError(name, str(where))

    for c in classes.values():
        for p in c.parents:
            need(p, c.loc)
        for f in c.fields:
            need(f.type, f.loc)
        for m in c.methods:
            for _, ptype in m.params:
                need(ptype, m.loc)
            if m.ret is not None:
                need(m.ret, m.loc)
            for s in m.body:
                if isinstance(s, New):
                    need(s.type, s.loc)
                elif isinstance(s, Invoke) and s.dispatch == "static":
                    need(s.recv, s.loc)
    for fn in natives.values():
        for call in fn.calls:
            if call.callee != SINK and call.callee not in natives and call.callee not in externs:
                raise LinkError(call.callee, str(call.loc))
    for r in regs:
        need(r.managed_class, r.loc)
        for _, nfn in r.entries:
            if nfn not in natives and nfn not in externs:
                raise LinkError(nfn, str(r.loc))
    for iface, impl in stubs.items():
        need(iface, stub_locs[iface])
        need(impl, stub_locs[iface])

    classes = {name: _annotate_dispatch(c, classes) for name, c in classes.items()}
    return ProgramDb(
        managed_classes=classes,
        native_fns=natives,
        jni_registrations=tuple(regs),
        stub_bindings=stubs,
        externs=frozenset(externs),
        config=config,
        units=tuple(a.name for a in asts),
        stub_locs=stub_locs,
    )


def _annotate_dispatch(c: ManagedClass, classes: dict[str, ManagedClass]) -> ManagedClass:
    """Mark instance calls whose receiver is declared with an interface type."""

    def is_iface(t: Optional[str]) -> bool:
        return t is not None and t in classes and classes[t].is_interface

    def field_type(owner: Optional[str], fname: str) -> Optional[str]:
        seen = set()
        stack = [owner] if owner else []
        while stack:
            cur = stack.pop()
            if cur in seen or cur not in classes:
                continue
            seen.add(cur)
            fd = classes[cur].field_decl(fname)
            if fd:
                return fd.type
            stack.extend(classes[cur].parents)
        return None

    methods = []
    for m in c.methods:
        declared: dict[str, Optional[str]] = {"this": c.fqname, **dict(m.params)}
        body = []
        for s in m.body:
            if isinstance(s, New):
                declared[s.dst] = s.type
            elif isinstance(s, FieldGet):
                owner = declared.get(s.recv) if s.recv in declared else s.recv
                declared[s.dst] = field_type(owner, s.field)
            elif isinstance(s, Assign):
                declared[s.dst] = declared.get(s.src) if isinstance(s.src, str) else "java.lang.String"
            elif isinstance(s, Invoke):
                if s.dispatch != "static" and is_iface(declared.get(s.recv)):
                    s = replace(s, dispatch="interface")
                if s.dst:
                    declared[s.dst] = None
            body.append(s)
        methods.append(replace(m, body=tuple(body)))
    return replace(c, methods=tuple(methods))


def read_corpus_paths(paths: Iterable[Union[str, Path]]) -> list[SourceUnit]:
    """Expand files and directories (``*.jgr``, sorted) into source units."""
    units: list[SourceUnit] = []
    for p in paths:
        p = Path(p)
        files = sorted(p.glob("*.jgr")) if p.is_dir() else [p]
        for f in files:
            units.append(SourceUnit(str(f), f.read_text(encoding="utf-8")))
    return units


def load_corpus(paths: Iterable[Union[str, Path]], config: Optional[AnalysisConfig] = None) -> ProgramDb:
    return parse_corpus(read_corpus_paths(paths), config)


def bundled_corpus_dir() -> Path:
    from importlib import resources

    return Path(str(resources.files("jgrekit").joinpath("data", "corpus")))
