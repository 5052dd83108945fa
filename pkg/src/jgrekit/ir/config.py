"""Analysis configuration files and bundled defaults.

All three file formats are UTF-8, one entry per line, ``#`` comments allowed:

* implicit edges: ``android.os.Handler.post => java.lang.Runnable.run``
* collection sinks: ``java.util.ArrayList.add``
* greylist: ``com.android.server.audio.AudioService.startWatchingRoutes``
"""

from __future__ import annotations

import re
from dataclasses import replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

from .errors import ConfigError

_SIG = re.compile(r"^[A-Za-z_$][\w$]*(\.[A-Za-z_$][\w$]*)+$")

DEFAULT_BINDER_ROOTS = frozenset({"android.os.IBinder", "android.os.IInterface"})


def _entries(text: str) -> Iterable[tuple[int, str]]:
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def _check_sig(sig: str, source: str, lineno: int) -> str:
    if not _SIG.match(sig):
        raise ConfigError(f"{source}:{lineno}: malformed signature {sig!r}")
    return sig


def parse_signature_list(text: str, source: str = "<config>") -> frozenset[str]:
    return frozenset(_check_sig(line, source, n) for n, line in _entries(text))


def parse_implicit_edges(text: str, source: str = "<config>") -> tuple[tuple[str, str], ...]:
    edges = []
    for n, line in _entries(text):
        trigger, sep, callback = line.partition("=>")
        if not sep:
            raise ConfigError(f"{source}:{n}: expected 'trigger => callback'")
        edges.append((_check_sig(trigger.strip(), source, n), _check_sig(callback.strip(), source, n)))
    return tuple(edges)


def _bundled(name: str) -> str:
    return resources.files("jgrekit").joinpath("data", name).read_text(encoding="utf-8")


DEFAULT_COLLECTION_SINKS = parse_signature_list(_bundled("collection_sinks.txt"), "collection_sinks.txt")
DEFAULT_IMPLICIT_EDGES = parse_implicit_edges(_bundled("implicit_edges.txt"), "implicit_edges.txt")
BUNDLED_GREYLIST = parse_signature_list(_bundled("greylist.txt"), "greylist.txt")


def load_config(
    base=None,
    *,
    edges: Optional[Path] = None,
    sinks: Optional[Path] = None,
    greylist: Optional[Path] = None,
    max_depth: Optional[int] = -1,
):
    """Overlay config files and flags on ``base`` (bundled defaults if None).

    ``max_depth=-1`` leaves the base value untouched; ``None`` means unbounded.
    """
    from .model import AnalysisConfig

    cfg = base or AnalysisConfig(greylist=BUNDLED_GREYLIST)
    if edges is not None:
        cfg = replace(cfg, implicit_edges=parse_implicit_edges(Path(edges).read_text(encoding="utf-8"), str(edges)))
    if sinks is not None:
        cfg = replace(cfg, collection_sinks=parse_signature_list(Path(sinks).read_text(encoding="utf-8"), str(sinks)))
    if greylist is not None:
        cfg = replace(cfg, greylist=parse_signature_list(Path(greylist).read_text(encoding="utf-8"), str(greylist)))
    if max_depth != -1:
        cfg = replace(cfg, max_depth=max_depth)
    return cfg
