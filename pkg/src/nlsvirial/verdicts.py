"""Named pass/fail outcomes with margins."""
from __future__ import annotations

from dataclasses import asdict, dataclass

PASS = "PASS"
FAIL = "FAIL"
INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class Verdict:
    """Outcome of one check.

    ``margin`` is the signed slack of the inequality (positive when it
    holds); ``partial`` marks a check that could only be run in part.
    """

    name: str
    status: str
    margin: float = float("nan")
    detail: str = ""
    partial: bool = False

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["margin"] != d["margin"]:
            d["margin"] = None
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Verdict":
        m = d.get("margin")
        return cls(d["name"], d["status"], float("nan") if m is None else float(m),
                   d.get("detail", ""), bool(d.get("partial", False)))

    @classmethod
    def from_margin(cls, name: str, margin: float, detail: str = "", partial: bool = False):
        status = PASS if margin > 0 else FAIL
        return cls(name, status, float(margin), detail, partial)

    @classmethod
    def inconclusive(cls, name: str, detail: str):
        return cls(name, INCONCLUSIVE, float("nan"), detail)
