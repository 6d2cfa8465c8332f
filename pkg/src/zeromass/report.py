"""Pass/fail report types shared by the hypothesis checkers."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class CheckItem:
    """One verified inequality or certificate: value against threshold."""

    key: str
    value: float
    threshold: float
    passed: bool
    note: str = ""

    def as_dict(self) -> dict:
        d = {"value": self.value, "threshold": self.threshold, "pass": self.passed}
        if self.note:
            d["note"] = self.note
        return d


@dataclass(frozen=True)
class HypothesisReport:
    name: str
    items: tuple = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(item.passed for item in self.items)

    def item(self, key: str) -> CheckItem:
        for it in self.items:
            if it.key == key:
                return it
        raise KeyError(key)

    def as_dict(self) -> dict:
        return {it.key: it.as_dict() for it in self.items}
