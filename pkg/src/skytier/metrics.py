"""Per-iteration records shared by every placement algorithm."""
from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class TraceRow:
    iter: int
    tier: int
    likelihood: float
    accuracy: float
    coverage: float
    S_T: float
    reshuffled: int


@dataclass(frozen=True)
class IterationRecord:
    iter: int
    likelihood: float  # best so far
    accuracy: float
    handled: float
    coverage: float
    S_T: float
    current_likelihood: float
    accurate_count: int = 0


@dataclass
class MetricsSeries:
    records: list = field(default_factory=list)
    iterations_to_converge: int = 0
    converged: bool = False
    trace: list = field(default_factory=list)
    score_history: list = field(default_factory=list)  # (iter, best_score, mean_score)
    survivability: list = field(default_factory=list)  # SurvivabilityReport per record
    moves: list = field(default_factory=list)  # MovePlans flown, in order
    layers: dict = field(default_factory=dict)  # drone id -> tier

    def column(self, name: str) -> list:
        return [getattr(r, name) for r in self.records]

    @property
    def final(self) -> IterationRecord | None:
        return self.records[-1] if self.records else None
