from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


class CorpusError(Exception):
    """Base class for everything the frontend raises."""


class CorpusSyntaxError(CorpusError):
    def __init__(self, unit: str, line: int, message: str, col: int = 0):
        self.unit = unit
        self.line = line
        self.col = col
        self.message = message
        super().__init__(f"{unit}:{line}:{col}: {message}")


class LinkError(CorpusError):
    def __init__(self, name: str, where: str = ""):
        self.name = name
        self.where = where
        super().__init__(f"unresolved name {name!r}" + (f" at {where}" if where else ""))


class DuplicateError(CorpusError):
    def __init__(self, name: str, where: str = ""):
        self.name = name
        self.where = where
        super().__init__(f"duplicate declaration {name!r}" + (f" at {where}" if where else ""))


class CycleError(CorpusError):
    def __init__(self, path: list[str]):
        self.path = path
        super().__init__("inheritance cycle: " + " -> ".join(path))


class ConfigError(CorpusError):
    pass


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    unit: str = "<none>"
    line: int = 0
    subject: Optional[str] = None

    def __str__(self) -> str:
        return f"{self.unit}:{self.line}: {self.code}: {self.message}"

    def to_dict(self) -> dict:
        return {"code": self.code, "message": self.message, "unit": self.unit, "line": self.line}
