"""Report containers shared by the sampling-based hypothesis checkers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

__all__ = ["Witness", "CheckReport"]


@dataclass(frozen=True)
class Witness:
    """A sampled point violating a checked inequality, with its margin."""

    where: dict
    margin: float

    def to_dict(self) -> dict:
        return {"where": dict(self.where), "margin": self.margin}


@dataclass
class CheckReport:
    """Outcome of a sampling check; never a proof, only a falsifier.

    ``max_margin`` is the worst sampled violation amount; values <= the
    check's tolerance mean a pass (negative margins are headroom).
    """

    name: str
    passed: bool
    n_samples: int
    max_margin: float
    witnesses: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def to_dict(self, max_witnesses: int = 1) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "name": self.name,
            "pass": self.passed,
            "n_samples": self.n_samples,
            "margins": {"max_violation": self.max_margin, **self.details},
            "n_violations": len(self.witnesses),
        }
        if self.witnesses:
            doc["witness"] = self.witnesses[0].to_dict()
            if max_witnesses > 1:
                doc["witnesses"] = [w.to_dict() for w in self.witnesses[:max_witnesses]]
        return doc
