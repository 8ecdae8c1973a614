"""Machine-readable pass/fail reports shared by all audits."""
from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class Report:
    name: str
    checked: int = 0
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def record(self, ok: bool, key) -> None:
        self.checked += 1
        if not ok:
            self.failures.append(key)

    def merge(self, other: "Report") -> "Report":
        return Report(self.name, self.checked + other.checked, self.failures + other.failures)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "status": "pass" if self.passed else "fail",
            "checked": self.checked,
            "failures": [_plain(f) for f in self.failures],
        }


def _plain(x):
    if isinstance(x, (list, tuple)):
        return [_plain(y) for y in x]
    if isinstance(x, (frozenset, set)):
        return sorted(x)
    if isinstance(x, (int, str, float)) or x is None:
        return x
    return str(x)
