"""Counters for floating-point degeneracies observed during a run.

The constructions assume all relevant distance minima are unique.  When
two stored distances compare exactly equal anyway, a deterministic
tie-break (prefer the pair whose sorted id sequence is lexicographically
smallest) keeps the run reproducible, and the event is counted here so
reports can surface it.  Poisson inputs are expected to keep every
counter at zero.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass


@dataclass
class Degeneracies:
    distance_ties: int = 0
    on_cutter_points: int = 0
    leader_fallbacks: int = 0
    dfs_extra_components: int = 0

    def merge(self, other: "Degeneracies") -> None:
        self.distance_ties += other.distance_ties
        self.on_cutter_points += other.on_cutter_points
        self.leader_fallbacks += other.leader_fallbacks
        self.dfs_extra_components += other.dfs_extra_components

    def as_dict(self) -> dict:
        return asdict(self)

    @property
    def total(self) -> int:
        return sum(asdict(self).values())
