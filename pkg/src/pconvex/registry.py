"""Named constructors that scenario configs can refer to."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

from pconvex.errors import RegistryError, ValidationError


@dataclass(frozen=True)
class Builtin:
    category: str
    name: str
    signature: str
    factory: Callable[..., Any]
    summary: str = ""


class Registry:
    """A name -> factory table for one category of built-ins."""

    def __init__(self, category: str):
        self.category = category
        self._entries: dict[str, Builtin] = {}

    def register(self, name: str, signature: str, summary: str = ""):
        def deco(factory):
            if name in self._entries:
                raise ValueError(f"duplicate {self.category} entry {name!r}")
            self._entries[name] = Builtin(self.category, name, signature, factory, summary)
            return factory

        return deco

    def get(self, name: str) -> Builtin:
        try:
            return self._entries[name]
        except KeyError:
            known = ", ".join(sorted(self._entries))
            raise RegistryError(
                f"unknown {self.category} key {name!r} (known: {known})"
            ) from None

    def build(self, name: str, params=None):
        entry = self.get(name)
        if params is None:
            params = {}
        try:
            if isinstance(params, dict):
                return entry.factory(**params)
            return entry.factory(*params)
        except TypeError as exc:
            raise ValidationError(
                f"bad parameters for {self.category} {name!r}: {exc}"
            ) from exc

    def entries(self) -> list[Builtin]:
        return [self._entries[k] for k in sorted(self._entries)]

    def __contains__(self, name):
        return name in self._entries
