"""Steers question generation toward a target mix of skill compositions.

Each question exercises a set of skills:

    SK1 — reading an attribute at the right temporal scale
    SK2 — locating a time region of interest
    SK3 — integrating evidence across intervals or channels

Depth is the composition size (L1..L3). The controller greedily assigns
the feasible composition with the largest target-minus-observed deficit,
so long-run proportions converge to the configured targets.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

SKILLS = ("SK1", "SK2", "SK3")

COMPOSITIONS: tuple[tuple[str, ...], ...] = (
    ("SK1",),
    ("SK2",),
    ("SK3",),
    ("SK1", "SK2"),
    ("SK1", "SK3"),
    ("SK2", "SK3"),
    ("SK1", "SK2", "SK3"),
)

# Target share of questions per composition (normalized counts).
DEFAULT_TARGET_COUNTS: dict[tuple[str, ...], int] = {
    ("SK1",): 606,
    ("SK2",): 539,
    ("SK3",): 402,
    ("SK1", "SK2"): 497,
    ("SK1", "SK3"): 365,
    ("SK2", "SK3"): 342,
    ("SK1", "SK2", "SK3"): 249,
}

SUBTYPES: dict[str, tuple[str, ...]] = {
    "SK1": ("trend", "seasonality", "noise", "local_event"),
    "SK2": ("explicit_interval", "event_anchored", "cross_channel"),
    "SK3": ("counting", "aggregation", "comparison", "extremum"),
}


@dataclass(frozen=True)
class SeedFeatures:
    has_events: bool
    has_seasonal: bool
    has_noise: bool
    n_channels: int


def seed_features(seed) -> SeedFeatures:
    chans = seed.channels
    return SeedFeatures(
        has_events=any(c.attributes.events for c in chans),
        has_seasonal=any(c.attributes.seasonal is not None for c in chans),
        has_noise=any(c.attributes.noise_sigma > 0 for c in chans),
        n_channels=len(chans),
    )


def subtype_feasible(skill: str, subtype: str, features: SeedFeatures) -> bool:
    if skill == "SK1":
        if subtype == "seasonality":
            return features.has_seasonal
        if subtype == "noise":
            return features.has_noise
        if subtype == "local_event":
            return features.has_events
        return True  # trend
    if skill == "SK2":
        if subtype == "event_anchored":
            return features.has_events
        if subtype == "cross_channel":
            return features.n_channels >= 2
        return True  # explicit_interval
    if skill == "SK3":
        if subtype == "counting":
            return features.has_events
        return True  # aggregation, comparison, extremum
    raise ValueError(f"unknown skill {skill!r}")


def feasible_subtypes(skill: str, features: SeedFeatures) -> list[str]:
    return [s for s in SUBTYPES[skill] if subtype_feasible(skill, s, features)]


@dataclass(frozen=True)
class SkillAssignment:
    composition: tuple[str, ...]
    subtypes: dict[str, str]

    @property
    def depth(self) -> int:
        return len(self.composition)

    @property
    def depth_label(self) -> str:
        return f"L{self.depth}"

    def to_dict(self) -> dict:
        return {
            "composition": list(self.composition),
            "subtypes": dict(self.subtypes),
            "depth": self.depth_label,
        }


class SkillController:
    def __init__(
        self,
        target_counts: Optional[dict[tuple[str, ...], int]] = None,
        rng_seed: int = 0,
    ):
        counts = dict(target_counts or DEFAULT_TARGET_COUNTS)
        unknown = set(counts) - set(COMPOSITIONS)
        if unknown:
            raise ValueError(f"unknown compositions in targets: {sorted(unknown)}")
        total = sum(counts.values())
        if total <= 0:
            raise ValueError("target counts must sum to a positive number")
        self.targets = {c: counts.get(c, 0) / total for c in COMPOSITIONS}
        self.observed: dict[tuple[str, ...], int] = {c: 0 for c in COMPOSITIONS}
        self.subtype_counts: dict[str, dict[str, int]] = {
            sk: {st: 0 for st in subs} for sk, subs in SUBTYPES.items()
        }
        self.total = 0
        self.rng = random.Random(rng_seed)

    # -- composition choice -------------------------------------------------

    def _deficit(self, comp: tuple[str, ...]) -> float:
        share = self.observed[comp] / self.total if self.total else 0.0
        return self.targets[comp] - share

    def next_assignment(self, features: SeedFeatures) -> SkillAssignment:
        feasible = [
            comp
            for comp in COMPOSITIONS
            if all(feasible_subtypes(sk, features) for sk in comp)
        ]
        if not feasible:
            raise ValueError("no feasible skill composition for this seed")
        comp = max(feasible, key=lambda c: (self._deficit(c), c))
        subtypes = {}
        for sk in comp:
            options = feasible_subtypes(sk, features)
            least = min(self.subtype_counts[sk][st] for st in options)
            pool = [st for st in options if self.subtype_counts[sk][st] == least]
            subtypes[sk] = self.rng.choice(pool)
        return SkillAssignment(composition=comp, subtypes=subtypes)

    def record(self, assignment: SkillAssignment) -> None:
        self.observed[assignment.composition] += 1
        self.total += 1
        for sk, st in assignment.subtypes.items():
            self.subtype_counts[sk][st] += 1

    # -- reporting -----------------------------------------------------------

    def observed_proportions(self) -> dict[tuple[str, ...], float]:
        if not self.total:
            return {c: 0.0 for c in COMPOSITIONS}
        return {c: n / self.total for c, n in self.observed.items()}

    def depth_distribution(self) -> dict[str, float]:
        out = {"L1": 0.0, "L2": 0.0, "L3": 0.0}
        if not self.total:
            return out
        for comp, n in self.observed.items():
            out[f"L{len(comp)}"] += n / self.total
        return out
