"""Managed-side analyses: entry points, call graphs, points-to and escapes."""

from .callgraph import CallGraph, Edge, build_call_graph
from .entries import EntryPoint, extract_entry_points
from .escapes import EscapeSite, find_escapes
from .resolve import Resolver, resolve_type

__all__ = [
    "CallGraph",
    "Edge",
    "EntryPoint",
    "EscapeSite",
    "Resolver",
    "build_call_graph",
    "extract_entry_points",
    "find_escapes",
    "resolve_type",
]
