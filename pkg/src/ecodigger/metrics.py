"""Community health metrics over repo-scoped, time-windowed event streams.

Issue and pull-request threads are reconstructed from the event log
(opens, closes, comments, reviews keyed by thread number), then each
metric reads the assembled threads or the raw events inside a half-open
window. The catalog is exposed through REGISTRY so the query engine and
CLI can address metrics by name.

Operationalizations that the metric catalog leaves open are explicit
defaults here, all configurable: first response means the earliest
comment or review by someone other than the opener; the inactivity
lookback is 180 days; bus factor is the smallest top-k developer group
holding more than half the repo's activity score.
"""

from __future__ import annotations

import statistics
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Callable, Iterable, Optional

from .activity import DEFAULT_WEIGHTS, BehaviorWeights, activity, count_behaviors
from .errors import DataError, UnknownMetricError
from .events import CollabEvent, EventType
from .windows import TimeWindow


@dataclass(frozen=True)
class DurationStats:
    count: int
    mean: Optional[float] = None
    median: Optional[float] = None
    p90: Optional[float] = None

    @classmethod
    def from_samples(cls, samples: Iterable[float]) -> "DurationStats":
        values = sorted(samples)
        if not values:
            return cls(count=0)
        rank = (90 * len(values) + 99) // 100  # nearest-rank, ceil(0.9 n)
        return cls(
            count=len(values),
            mean=statistics.fmean(values),
            median=float(statistics.median(values)),
            p90=float(values[rank - 1]),
        )

    def to_jsonable(self) -> dict:
        if self.count == 0:
            return {"count": 0}
        return {"count": self.count, "mean": self.mean,
                "median": self.median, "p90": self.p90}


@dataclass(frozen=True)
class IssueThread:
    repo_id: int
    issue_number: int
    opened_at: datetime
    opened_by: int
    closed_at: Optional[datetime] = None
    first_response_at: Optional[datetime] = None
    is_pr: bool = False


@dataclass(frozen=True)
class ChangeRequest:
    repo_id: int
    pr_number: int
    opened_at: datetime
    opened_by: int
    closed_at: Optional[datetime] = None
    merged: bool = False
    review_count: int = 0
    review_times: tuple[datetime, ...] = ()
    first_response_at: Optional[datetime] = None
    additions: Optional[int] = None
    deletions: Optional[int] = None


@dataclass(frozen=True)
class ThreadAssembly:
    issues: tuple[IssueThread, ...]
    change_requests: tuple[ChangeRequest, ...]
    partial: int  # events on threads whose open was never seen


class _ThreadObs:
    __slots__ = ("opens", "state_changes", "comments", "reviews",
                 "merge", "additions", "deletions", "saw_pr_event",
                 "saw_issue_event", "hint_is_pr", "event_count")

    def __init__(self):
        self.opens: list[tuple[datetime, int]] = []
        # (time, kind) with kind in {"open", "close", "reopen"}
        self.state_changes: list[tuple[datetime, str]] = []
        self.comments: list[tuple[datetime, int]] = []
        self.reviews: list[tuple[datetime, int]] = []
        self.merge: Optional[datetime] = None
        self.additions: Optional[int] = None
        self.deletions: Optional[int] = None
        self.saw_pr_event = False
        self.saw_issue_event = False
        self.hint_is_pr: Optional[bool] = None
        self.event_count = 0


def assemble_threads(events: Iterable[CollabEvent]) -> ThreadAssembly:
    """Reconstruct issue and PR threads for one repo's events.

    Events on numbers whose open was never observed become the partial
    tally instead of threads, so every thread has a real opened_at.
    """
    ordered = sorted(events, key=lambda e: (e.created_at, e.event_id))
    obs: dict[int, _ThreadObs] = defaultdict(_ThreadObs)
    repo_id: Optional[int] = None

    for event in ordered:
        if repo_id is None:
            repo_id = event.repo_id
        elif event.repo_id != repo_id:
            raise DataError("assemble_threads expects events from a single repo")
        number = event.issue_number
        if number is None:
            continue
        t = obs[number]
        t.event_count += 1
        if event.event_type is EventType.ISSUES:
            t.saw_issue_event = True
            if event.action == "opened":
                t.opens.append((event.created_at, event.actor_id))
                t.state_changes.append((event.created_at, "open"))
            elif event.action == "closed":
                t.state_changes.append((event.created_at, "close"))
            elif event.action == "reopened":
                t.state_changes.append((event.created_at, "reopen"))
        elif event.event_type is EventType.PULL_REQUEST:
            t.saw_pr_event = True
            if event.action == "opened":
                t.opens.append((event.created_at, event.actor_id))
                t.state_changes.append((event.created_at, "open"))
            elif event.action == "closed":
                t.state_changes.append((event.created_at, "close"))
                if event.pr_merged:
                    t.merge = event.created_at
                if event.pr_additions is not None:
                    t.additions = event.pr_additions
                if event.pr_deletions is not None:
                    t.deletions = event.pr_deletions
            elif event.action == "reopened":
                t.state_changes.append((event.created_at, "reopen"))
        elif event.event_type is EventType.ISSUE_COMMENT:
            t.comments.append((event.created_at, event.actor_id))
            if t.hint_is_pr is None:
                t.hint_is_pr = event.issue_is_pr
        elif event.event_type is EventType.PR_REVIEW_COMMENT:
            t.reviews.append((event.created_at, event.actor_id))
            t.saw_pr_event = True

    issues: list[IssueThread] = []
    crs: list[ChangeRequest] = []
    partial = 0
    for number in sorted(obs):
        t = obs[number]
        if not t.opens:
            partial += t.event_count
            continue
        opened_at, opened_by = t.opens[0]
        closed_at = _final_close(t.state_changes)
        if t.merge is not None:
            closed_at = t.merge
        is_pr = t.saw_pr_event or (not t.saw_issue_event and bool(t.hint_is_pr))
        responses = t.comments + (t.reviews if is_pr else [])
        first_response = min(
            (at for at, actor in responses if actor != opened_by and at >= opened_at),
            default=None,
        )
        if is_pr:
            crs.append(ChangeRequest(
                repo_id=repo_id, pr_number=number,
                opened_at=opened_at, opened_by=opened_by,
                closed_at=closed_at, merged=t.merge is not None,
                review_count=len(t.reviews),
                review_times=tuple(at for at, _ in t.reviews),
                first_response_at=first_response,
                additions=t.additions, deletions=t.deletions,
            ))
        else:
            issues.append(IssueThread(
                repo_id=repo_id, issue_number=number,
                opened_at=opened_at, opened_by=opened_by,
                closed_at=closed_at, first_response_at=first_response,
            ))
    return ThreadAssembly(issues=tuple(issues), change_requests=tuple(crs),
                          partial=partial)


def _final_close(state_changes: list[tuple[datetime, str]]) -> Optional[datetime]:
    """Close time per the thread's final state; reopening clears it."""
    closed: Optional[datetime] = None
    for at, kind in sorted(state_changes, key=lambda c: c[0]):
        if kind == "close":
            closed = at
        elif kind == "reopen" or (kind == "open" and closed is not None):
            closed = None
    return closed


def _seconds(delta: timedelta) -> float:
    return delta.total_seconds()


@dataclass(frozen=True)
class IssueMetrics:
    new: int
    closed: int
    response_time: DurationStats
    resolution_duration: DurationStats
    age: DurationStats


def issue_metrics(threads: Iterable[IssueThread], window: TimeWindow) -> IssueMetrics:
    threads = list(threads)
    new = [t for t in threads if window.contains(t.opened_at)]
    closed = [t for t in threads if t.closed_at is not None and window.contains(t.closed_at)]
    still_open = [t for t in threads
                  if t.opened_at < window.end
                  and (t.closed_at is None or t.closed_at >= window.end)]
    return IssueMetrics(
        new=len(new),
        closed=len(closed),
        response_time=DurationStats.from_samples(
            _seconds(t.first_response_at - t.opened_at)
            for t in new if t.first_response_at is not None),
        resolution_duration=DurationStats.from_samples(
            _seconds(t.closed_at - t.opened_at) for t in closed),
        age=DurationStats.from_samples(
            _seconds(window.end - t.opened_at) for t in still_open),
    )


@dataclass(frozen=True)
class ChangeRequestMetrics:
    opened: int
    accepted: int
    reviews: int
    response_time: DurationStats
    resolution_duration: DurationStats
    age: DurationStats


def change_request_metrics(crs: Iterable[ChangeRequest],
                           window: TimeWindow) -> ChangeRequestMetrics:
    crs = list(crs)
    opened = [c for c in crs if window.contains(c.opened_at)]
    accepted = [c for c in crs
                if c.merged and c.closed_at is not None and window.contains(c.closed_at)]
    resolved = [c for c in crs if c.closed_at is not None and window.contains(c.closed_at)]
    still_open = [c for c in crs
                  if c.opened_at < window.end
                  and (c.closed_at is None or c.closed_at >= window.end)]
    reviews = sum(1 for c in crs for at in c.review_times if window.contains(at))
    return ChangeRequestMetrics(
        opened=len(opened),
        accepted=len(accepted),
        reviews=reviews,
        response_time=DurationStats.from_samples(
            _seconds(c.first_response_at - c.opened_at)
            for c in opened if c.first_response_at is not None),
        resolution_duration=DurationStats.from_samples(
            _seconds(c.closed_at - c.opened_at) for c in resolved),
        age=DurationStats.from_samples(
            _seconds(window.end - c.opened_at) for c in still_open),
    )


@dataclass(frozen=True)
class CodeChangeLines:
    added: int
    removed: int
    sum: int
    skipped: int = 0  # merged PRs lacking line counts


def code_change_lines(crs: Iterable[ChangeRequest], window: TimeWindow) -> CodeChangeLines:
    added = removed = skipped = 0
    for c in crs:
        if not (c.merged and c.closed_at is not None and window.contains(c.closed_at)):
            continue
        if c.additions is None or c.deletions is None:
            skipped += 1
            continue
        added += c.additions
        removed += c.deletions
    return CodeChangeLines(added=added, removed=removed, sum=added + removed,
                           skipped=skipped)


def technical_fork(events: Iterable[CollabEvent], window: TimeWindow) -> int:
    return sum(1 for e in events
               if e.event_type is EventType.FORK and window.contains(e.created_at))


DEFAULT_INACTIVITY_GAP = timedelta(days=180)


@dataclass(frozen=True)
class ContributorMetrics:
    new_contributors: frozenset[int]
    inactive_count: int
    bus_factor: int
    heatmap: tuple[tuple[int, ...], ...]  # 7 weekdays x 24 hours, UTC
    history_known: bool


def contributor_metrics(events: Iterable[CollabEvent], window: TimeWindow,
                        history: Optional[Iterable[CollabEvent]] = None,
                        inactivity_gap: timedelta = DEFAULT_INACTIVITY_GAP,
                        weights: BehaviorWeights = DEFAULT_WEIGHTS,
                        bus_threshold: float = 0.5) -> ContributorMetrics:
    """Contributor-side metrics for one repo.

    Without `history`, new-contributor detection degrades to first seen
    in the supplied stream; history_known=False flags that.
    """
    history_known = history is not None
    combined = list(events)
    if history is not None:
        combined.extend(history)

    gap_start = window.start - inactivity_gap
    in_window: list[CollabEvent] = []
    prior_actors: set[int] = set()
    gap_actors: set[int] = set()
    for event in combined:
        if window.contains(event.created_at):
            in_window.append(event)
        elif event.created_at < window.start:
            prior_actors.add(event.actor_id)
            if event.created_at >= gap_start:
                gap_actors.add(event.actor_id)

    window_actors = {e.actor_id for e in in_window}
    new_contributors = frozenset(window_actors - prior_actors)
    inactive_count = len(gap_actors - window_actors)

    scores = {
        dev: activity(counts, weights)
        for dev, counts in count_behaviors(in_window, window, scope="developer").items()
    }
    bus = _bus_factor(scores, bus_threshold)

    cells = [[0] * 24 for _ in range(7)]
    for event in in_window:
        cells[event.created_at.weekday()][event.created_at.hour] += 1

    return ContributorMetrics(
        new_contributors=new_contributors,
        inactive_count=inactive_count,
        bus_factor=bus,
        heatmap=tuple(tuple(row) for row in cells),
        history_known=history_known,
    )


def _bus_factor(scores: dict[int, float], threshold: float) -> int:
    """Smallest k whose top-k share of total activity exceeds threshold."""
    total = sum(scores.values())
    if total <= 0:
        return 0
    running = 0.0
    for k, score in enumerate(sorted(scores.values(), reverse=True), start=1):
        running += score
        if running > threshold * total:
            return k
    return len(scores)


@dataclass(frozen=True)
class MetricSpec:
    name: str
    kind: str  # count | duration | lines | contributors | heatmap
    description: str
    compute: Callable[..., object] = field(repr=False, compare=False, default=None)


@dataclass(frozen=True)
class MetricResult:
    repo_id: int
    window: TimeWindow
    metric: str
    value: object  # scalar, stats dict, or matrix, depending on the metric

    def to_jsonable(self) -> dict:
        value = self.value
        if isinstance(value, DurationStats):
            value = value.to_jsonable()
        elif isinstance(value, CodeChangeLines):
            value = {"added": value.added, "removed": value.removed,
                     "sum": value.sum, "skipped": value.skipped}
        elif isinstance(value, (set, frozenset)):
            value = sorted(value)
        elif isinstance(value, tuple):
            value = [list(row) for row in value]
        return {
            "repo": self.repo_id,
            "window": {"start": self.window.start.isoformat(),
                       "end": self.window.end.isoformat()},
            "metric": self.metric,
            "value": value,
        }


def _metric_issue(field_name: str):
    def compute(events, window, options):
        assembly = assemble_threads(events)
        return getattr(issue_metrics(assembly.issues, window), field_name)
    return compute


def _metric_cr(field_name: str):
    def compute(events, window, options):
        assembly = assemble_threads(events)
        return getattr(change_request_metrics(assembly.change_requests, window), field_name)
    return compute


def _metric_code_change(events, window, options):
    assembly = assemble_threads(events)
    return code_change_lines(assembly.change_requests, window)


def _metric_fork(events, window, options):
    return technical_fork(events, window)


def _contributors(events, window, options) -> ContributorMetrics:
    gap_days = options.get("inactivity_gap_days", 180)
    threshold = options.get("bus_threshold", 0.5)
    return contributor_metrics(
        events, window, history=[],
        inactivity_gap=timedelta(days=gap_days),
        bus_threshold=threshold,
    )


def _metric_new_contributors(events, window, options):
    return _contributors(events, window, options).new_contributors


def _metric_inactive(events, window, options):
    return _contributors(events, window, options).inactive_count


def _metric_bus_factor(events, window, options):
    return _contributors(events, window, options).bus_factor


def _metric_heatmap(events, window, options):
    return _contributors(events, window, options).heatmap


REGISTRY: dict[str, MetricSpec] = {
    spec.name: spec for spec in [
        MetricSpec("issues_new", "count",
                   "Issues opened in the window", _metric_issue("new")),
        MetricSpec("issues_closed", "count",
                   "Issues closed in the window", _metric_issue("closed")),
        MetricSpec("issue_response_time", "duration",
                   "Open-to-first-response for issues opened in the window",
                   _metric_issue("response_time")),
        MetricSpec("issue_resolution_duration", "duration",
                   "Open-to-close for issues closed in the window",
                   _metric_issue("resolution_duration")),
        MetricSpec("issue_age", "duration",
                   "Age of issues still open at window end", _metric_issue("age")),
        MetricSpec("change_requests", "count",
                   "Pull requests opened in the window", _metric_cr("opened")),
        MetricSpec("change_requests_accepted", "count",
                   "Pull requests merged in the window", _metric_cr("accepted")),
        MetricSpec("change_request_reviews", "count",
                   "Review comments in the window", _metric_cr("reviews")),
        MetricSpec("change_request_response_time", "duration",
                   "Open-to-first-response for PRs opened in the window",
                   _metric_cr("response_time")),
        MetricSpec("change_request_resolution_duration", "duration",
                   "Open-to-close-or-merge for PRs resolved in the window",
                   _metric_cr("resolution_duration")),
        MetricSpec("change_request_age", "duration",
                   "Age of PRs still open at window end", _metric_cr("age")),
        MetricSpec("code_change_lines", "lines",
                   "Added plus removed lines over PRs merged in the window",
                   _metric_code_change),
        MetricSpec("technical_fork", "count",
                   "Fork events in the window", _metric_fork),
        MetricSpec("new_contributors", "contributors",
                   "Actors whose first event in the repo falls in the window",
                   _metric_new_contributors),
        MetricSpec("inactive_contributors", "count",
                   "Actors active in the lookback gap but silent in the window",
                   _metric_inactive),
        MetricSpec("bus_factor", "count",
                   "Smallest top contributor group holding >50% of activity",
                   _metric_bus_factor),
        MetricSpec("activity_dates_and_times", "heatmap",
                   "UTC weekday-by-hour event counts", _metric_heatmap),
    ]
}


def metric_names() -> list[str]:
    return list(REGISTRY)


def compute_metric(name: str, events: Iterable[CollabEvent], window: TimeWindow,
                   options: Optional[dict] = None) -> MetricResult:
    """Compute one registry metric over a single repo's events."""
    spec = REGISTRY.get(name)
    if spec is None:
        raise UnknownMetricError(f"unknown metric {name!r}; see metric_names()")
    events = list(events)
    repo_ids = {e.repo_id for e in events}
    if len(repo_ids) > 1:
        raise DataError("compute_metric expects events from a single repo")
    repo_id = repo_ids.pop() if repo_ids else 0
    value = spec.compute(events, window, options or {})
    return MetricResult(repo_id=repo_id, window=window, metric=name, value=value)


def scalar_value(name: str, value: object, options: Optional[dict] = None) -> float:
    """Collapse a metric value to one number for tabular queries.

    Durations use options["stat"] (mean default); line counts use
    options["which"] (sum default); contributor sets become their size;
    the heatmap becomes its total event count.
    """
    options = options or {}
    spec = REGISTRY.get(name)
    if spec is None:
        raise UnknownMetricError(f"unknown metric {name!r}")
    if spec.kind == "duration":
        stat = options.get("stat", "mean")
        if stat not in ("count", "mean", "median", "p90"):
            raise DataError(f"unknown duration stat {stat!r}")
        picked = getattr(value, stat)
        return float(picked) if picked is not None else 0.0
    if spec.kind == "lines":
        which = options.get("which", "sum")
        if which not in ("added", "removed", "sum"):
            raise DataError(f"unknown code-change field {which!r}")
        return float(getattr(value, which))
    if spec.kind == "contributors":
        return float(len(value))
    if spec.kind == "heatmap":
        return float(sum(sum(row) for row in value))
    return float(value)
