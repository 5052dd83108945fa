"""Corpus frontend: parsing, linking, hierarchy and validation."""

from .config import load_config
from .errors import (
    ConfigError,
    CorpusError,
    CorpusSyntaxError,
    CycleError,
    Diagnostic,
    DuplicateError,
    LinkError,
)
from .hierarchy import ClassHierarchy, build_hierarchy
from .model import (
    SINK,
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
    ProgramDb,
    Return,
)
from .parser import SourceUnit, bundled_corpus_dir, load_corpus, parse_corpus, read_corpus_paths
from .printer import format_db
from .validate import validate

__all__ = [name for name in dir() if not name.startswith("_")]
