"""Developer and project activity scoring.

A developer's activity in a repo over a window is the weighted sum of
their collaboration behavior counts. Weights default to the standard
configuration (comment 1, open issue 2, open PR 3, review 4, merge 2) and
are configurable per community. Project activity is the sum of its
developers' in-repo scores.
"""

from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Union

from .errors import DataError
from .events import Behavior, CollabEvent, classify_behavior
from .windows import TimeWindow


@dataclass(frozen=True)
class BehaviorWeights:
    comment: float = 1.0
    open_issue: float = 2.0
    open_pr: float = 3.0
    review_pr: float = 4.0
    pr_merged: float = 2.0

    def __post_init__(self):
        for name, value in self.as_dict().items():
            if value < 0:
                raise DataError(f"behavior weight {name} must be >= 0, got {value}")

    def for_behavior(self, behavior: Behavior) -> float:
        return getattr(self, behavior.value)

    def as_dict(self) -> dict[str, float]:
        return {b.value: float(getattr(self, b.value)) for b in Behavior}

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "BehaviorWeights":
        """Load a weight configuration file, e.g. {"comment": 1, ...}."""
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read weights file {path}: {exc}") from exc
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "BehaviorWeights":
        known = {b.value for b in Behavior}
        unknown = set(raw) - known
        if unknown:
            raise DataError(f"unknown behavior weight keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in raw.items()})


DEFAULT_WEIGHTS = BehaviorWeights()


@dataclass(frozen=True)
class BehaviorCounts:
    comment: int = 0
    open_issue: int = 0
    open_pr: int = 0
    review_pr: int = 0
    pr_merged: int = 0

    def __post_init__(self):
        for b in Behavior:
            if getattr(self, b.value) < 0:
                raise DataError(f"behavior count {b.value} must be >= 0")

    def __add__(self, other: "BehaviorCounts") -> "BehaviorCounts":
        return BehaviorCounts(**{b.value: getattr(self, b.value) + getattr(other, b.value)
                                 for b in Behavior})

    def total(self) -> int:
        return sum(getattr(self, b.value) for b in Behavior)

    def as_dict(self) -> dict[str, int]:
        return {b.value: getattr(self, b.value) for b in Behavior}

    @classmethod
    def from_counter(cls, counter: Counter) -> "BehaviorCounts":
        return cls(**{b.value: counter.get(b, 0) for b in Behavior})


def activity(counts: BehaviorCounts, weights: BehaviorWeights = DEFAULT_WEIGHTS) -> float:
    """Weighted behavior sum: the activity score."""
    return sum(weights.for_behavior(b) * getattr(counts, b.value) for b in Behavior)


@dataclass(frozen=True)
class ActivityRecord:
    """One developer's behavior counts and score in one repo and window."""

    developer_id: int
    repo_id: int
    window: TimeWindow
    counts: BehaviorCounts
    score: float


SCOPES = ("developer_repo", "developer", "repo")


def count_behaviors(events: Iterable[CollabEvent], window: TimeWindow,
                    scope: str = "developer_repo") -> dict:
    """Count classified behaviors inside the window, keyed per scope.

    Keys are (developer, repo) tuples, developer ids, or repo ids. Keys
    with no counted events are absent.
    """
    if scope not in SCOPES:
        raise DataError(f"unknown scope {scope!r}, expected one of {SCOPES}")
    acc: dict = defaultdict(Counter)
    for event in events:
        if not window.contains(event.created_at):
            continue
        behavior = classify_behavior(event)
        if behavior is None:
            continue
        if scope == "developer_repo":
            key = (event.actor_id, event.repo_id)
        elif scope == "developer":
            key = event.actor_id
        else:
            key = event.repo_id
        acc[key][behavior] += 1
    return {key: BehaviorCounts.from_counter(counter) for key, counter in acc.items()}


def activity_records(events: Iterable[CollabEvent], window: TimeWindow,
                     weights: BehaviorWeights = DEFAULT_WEIGHTS) -> list[ActivityRecord]:
    """Per (developer, repo) activity records for the window."""
    counted = count_behaviors(events, window, scope="developer_repo")
    return [
        ActivityRecord(developer_id=dev, repo_id=repo, window=window,
                       counts=counts, score=activity(counts, weights))
        for (dev, repo), counts in sorted(counted.items())
    ]


@dataclass(frozen=True)
class DeveloperRank:
    developer_id: int
    score: float
    counts: BehaviorCounts


def rank_developers(records: Iterable[ActivityRecord],
                    limit: Optional[int] = None) -> list[DeveloperRank]:
    """Developers by total score across repos, descending; ties by id."""
    totals: dict[int, float] = defaultdict(float)
    counts: dict[int, BehaviorCounts] = defaultdict(BehaviorCounts)
    for record in records:
        totals[record.developer_id] += record.score
        counts[record.developer_id] = counts[record.developer_id] + record.counts
    ranked = sorted(totals, key=lambda dev: (-totals[dev], dev))
    if limit is not None:
        ranked = ranked[:limit]
    return [DeveloperRank(dev, totals[dev], counts[dev]) for dev in ranked]


def project_activity(records: Iterable[ActivityRecord],
                     repo_id: Optional[int] = None) -> float:
    """Sum of developer scores; optionally restricted to one repo."""
    return sum(r.score for r in records if repo_id is None or r.repo_id == repo_id)
