import pytest

from conftest import FIXTURES, load_fixture
from jgrekit.ir import (
    Assign,
    CorpusSyntaxError,
    CycleError,
    DuplicateError,
    FieldGet,
    FieldPut,
    Invoke,
    LinkError,
    Lit,
    New,
    Return,
    SourceUnit,
    build_hierarchy,
    bundled_corpus_dir,
    format_db,
    load_corpus,
    parse_corpus,
    validate,
)
from jgrekit.ir.config import ConfigError, load_config, parse_implicit_edges, parse_signature_list


def parse(text, unit="t.jgr"):
    return parse_corpus([SourceUnit(unit, text)])


def test_audio_fixture_counts(audio_db):
    assert len(audio_db.managed_classes) == 1
    cls = audio_db.managed_classes["com.android.server.audio.AudioService"]
    assert [m.name for m in cls.methods] == ["startWatchingRoutes", "linkToDeath"]
    assert len(audio_db.jni_registrations) == 1
    assert audio_db.native_fns["android_os_BinderProxy_linkToDeath"].calls[0].callee == "env.NewGlobalRef"


def test_empty_source_list():
    db = parse_corpus([])
    assert db.managed_classes == {} and db.native_fns == {} and db.jni_registrations == ()


def test_undeclared_class_is_link_error():
    with pytest.raises(LinkError) as e:
        parse("managed class A extends Foo { }")
    assert e.value.name == "Foo"
    parse("extern Foo\nmanaged class A extends Foo { }")


def test_statement_forms():
    db = parse(
        """
        extern java.util.ArrayList
        managed class A {
            field f: java.util.ArrayList
            field s: java.lang.String static
            method m(p: java.lang.String): A {
                a = new A
                b = a
                c = "lit"
                d = this.f
                this.s = p
                call d.add(c)
                e = scall A.k()
                return a
            }
            method k() { }
        }
        """
    )
    body = db.method("A.m").body
    kinds = [type(s) for s in body]
    assert kinds == [New, Assign, Assign, FieldGet, FieldPut, Invoke, Invoke, Return]
    assert body[2].src == Lit("lit")
    assert body[5].dispatch == "virtual" and body[6].dispatch == "static"
    assert db.managed_classes["A"].fields[1].static


def test_annotations():
    db = parse(
        """
        managed class S {
            method a() hidden { }
            method b() greylist { }
            method c() permission="android.permission.X" { }
            method d() native;
        }
        """
    )
    ms = {m.name: m for m in db.managed_classes["S"].methods}
    assert ms["a"].visibility == "hidden"
    assert ms["b"].visibility == "greylist"
    assert ms["c"].permission == "android.permission.X"
    assert ms["d"].is_native and ms["d"].body == ()


@pytest.mark.parametrize(
    "text",
    [
        "managed class A { method m() { x = } }",
        "managed class A { method m() { goto x } }",
        "managed class A { method m() { call A.B.m() } }",
        "managed klass A { }",
        'managed class A { method m() { x = "unterminated } }',
        "native fn f( { }",
        "jni_register class=A { m -> f }",
    ],
)
def test_syntax_errors_are_positioned(text):
    with pytest.raises(CorpusSyntaxError) as e:
        parse(text)
    assert e.value.unit == "t.jgr" and e.value.line >= 1


def test_duplicate_class():
    with pytest.raises(DuplicateError):
        parse("managed class A { }\nmanaged class A { }")


def test_hierarchy_subtypes():
    db = load_fixture("hierarchy.jgr")
    h = build_hierarchy(db)
    assert h.concrete_subtypes("A") == {"A", "B", "C"}
    assert h.concrete_subtypes("I") == {"X", "Y"}
    assert h.resolve("C", "m") == "B"
    assert h.resolve("A", "m") == "A"
    assert h.is_subtype("C", "A") and not h.is_subtype("A", "C")


def test_hierarchy_idempotent():
    db = load_corpus([bundled_corpus_dir()])
    assert build_hierarchy(db) == build_hierarchy(db)


def test_hierarchy_cycle():
    db = parse("managed class A extends B { }\nmanaged class B extends A { }")
    with pytest.raises(CycleError) as e:
        build_hierarchy(db)
    assert e.value.path == ["A", "B", "A"]


def test_validate_bundled_corpus_clean():
    assert validate(load_corpus([bundled_corpus_dir()])) == []


def test_validate_duplicate_jni_binding():
    db = parse(
        """
        managed class A { method m() native; }
        jni_register class=A { "m" -> f }
        jni_register class=A { "m" -> f }
        native fn f() { }
        """
    )
    assert [d.code for d in validate(db)] == ["DuplicateJniBinding"]


def test_validate_use_before_def():
    db = parse("managed class A { method m() { x = v } }")
    diags = validate(db)
    assert [d.code for d in diags] == ["UseBeforeDef"]
    assert diags[0].subject == "v"


def test_validate_target_not_native():
    db = parse(
        """
        managed class A { method m() { } }
        jni_register class=A { "m" -> f }
        native fn f() { }
        """
    )
    assert [d.code for d in validate(db)] == ["JniTargetNotNative"]


@pytest.mark.parametrize("name", sorted(p.name for p in FIXTURES.glob("*.jgr")))
def test_fixture_round_trip(name):
    db = load_fixture(name)
    again = parse(format_db(db), name)
    assert again == db


def test_bundled_round_trip():
    db = load_corpus([bundled_corpus_dir()])
    assert parse(format_db(db)) == db


def test_config_files(tmp_path):
    assert parse_implicit_edges("a.B.c => d.E.f  # note\n") == (("a.B.c", "d.E.f"),)
    assert parse_signature_list("\n# only comments\n") == frozenset()
    with pytest.raises(ConfigError):
        parse_implicit_edges("a.B.c -> d.E.f")
    with pytest.raises(ConfigError):
        parse_signature_list("not a signature")
    g = tmp_path / "grey.txt"
    g.write_text("x.Y.z\n")
    cfg = load_config(greylist=g, max_depth=None)
    assert cfg.greylist == {"x.Y.z"} and cfg.max_depth is None
    assert "com.android.server.audio.AudioService.startWatchingRoutes" in load_config().greylist
