"""Metric queries: scoping, label algebra, time splitting, grouping,
ordering, limiting, precision.

Request field names are kept verbatim from the public parameter contract
(camelCase), since the CLI flags and service schema mirror them one to
one. All scoping clauses conjoin: explicit id lists, name lists (mapped
through the latest observed id-name pairs), label intersections, and the
internal union of labelUnion each narrow the scope. A label axis with no
entries is treated as unconstrained rather than as an empty constraint;
a provably empty scope still yields a valid plan that produces no rows,
plus a warning.

Values are computed at full precision and rounded only at serialization,
half away from zero, to `precision` decimals.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field as dc_field
from datetime import datetime, timezone
from decimal import ROUND_HALF_UP, Decimal
from typing import Optional, Sequence

from .errors import DataError, UnknownLabelError, UnknownMetricError
from .labels import EntitySet, LabelStore, inject_labels, label_intersect, \
    label_union, parse_injected, resolve
from .metrics import REGISTRY, compute_metric, scalar_value
from .store import EventStore
from .windows import TimeWindow

ORDERS = ("ASC", "DESC")
ORDER_OPTIONS = ("latest", "all")
LIMIT_OPTIONS = ("all", "each")
GROUP_TIME_RANGES = ("year", "quarter", "month")


@dataclass(frozen=True)
class QueryRequest:
    metric: str
    startYear: int = 2015
    endYear: Optional[int] = None  # default: current year
    startMonth: int = 1
    endMonth: Optional[int] = None  # default: current month
    repoIds: Optional[list[int]] = None
    repoNames: Optional[list[str]] = None
    orgIds: Optional[list[int]] = None
    orgNames: Optional[list[str]] = None
    userIds: Optional[list[int]] = None
    userNames: Optional[list[str]] = None
    labelUnion: Optional[list[str]] = None
    labelIntersect: Optional[list[str]] = None
    order: str = "ASC"
    orderOption: str = "latest"
    limit: int = 10
    limitOption: str = "all"
    groupBy: Optional[str] = None
    groupTimeRange: Optional[str] = None
    precision: int = 2
    injectLabelData: Optional[list] = None
    options: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if self.order not in ORDERS:
            raise DataError(f"order must be one of {ORDERS}, got {self.order!r}")
        if self.orderOption not in ORDER_OPTIONS:
            raise DataError(f"orderOption must be one of {ORDER_OPTIONS}, "
                            f"got {self.orderOption!r}")
        if self.limitOption not in LIMIT_OPTIONS:
            raise DataError(f"limitOption must be one of {LIMIT_OPTIONS}, "
                            f"got {self.limitOption!r}")
        if self.groupTimeRange is not None and self.groupTimeRange not in GROUP_TIME_RANGES:
            raise DataError(f"groupTimeRange must be one of {GROUP_TIME_RANGES}, "
                            f"got {self.groupTimeRange!r}")
        if self.limit < 1:
            raise DataError(f"limit must be >= 1, got {self.limit}")
        if self.precision < 0:
            raise DataError(f"precision must be >= 0, got {self.precision}")
        if not 1 <= self.startMonth <= 12:
            raise DataError(f"startMonth must be 1..12, got {self.startMonth}")
        if self.endMonth is not None and not 1 <= self.endMonth <= 12:
            raise DataError(f"endMonth must be 1..12, got {self.endMonth}")

    @classmethod
    def from_json(cls, raw: dict) -> "QueryRequest":
        if not isinstance(raw, dict):
            raise DataError("query request must be a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise DataError(f"unknown query fields: {sorted(unknown)}")
        if "metric" not in raw:
            raise DataError("query request needs a 'metric'")
        return cls(**raw)


@dataclass
class QueryPlan:
    metric: str
    window: TimeWindow
    buckets: list[tuple[str, TimeWindow]]
    repo_scope: Optional[frozenset[int]]  # None = unconstrained
    org_scope: Optional[frozenset[int]]
    user_scope: Optional[frozenset[int]]
    order: str
    order_option: str
    limit: int
    limit_option: str
    group_by: Optional[str]
    precision: int
    options: dict
    label_store: Optional[LabelStore]
    warnings: list[str] = dc_field(default_factory=list)
    empty: bool = False


def _scope_from_entity_set(entities: EntitySet):
    """Per-axis clauses; an empty axis is unconstrained, not empty."""
    return (
        frozenset(entities.repos) if entities.repos else None,
        frozenset(entities.orgs) if entities.orgs else None,
        frozenset(entities.users) if entities.users else None,
    )


def _conjoin(current: Optional[frozenset], clause: Optional[frozenset]) -> Optional[frozenset]:
    if clause is None:
        return current
    if current is None:
        return clause
    return current & clause


def _names_to_ids(names: Optional[list[str]], lookup, kind: str,
                  warnings: list[str]) -> Optional[frozenset[int]]:
    if not names:
        return None
    ids = set()
    for name in names:
        found = lookup(name)
        if found is None:
            warnings.append(f"unknown {kind} name {name!r}")
        else:
            ids.add(found)
    return frozenset(ids)


def plan(q: QueryRequest, label_store: Optional[LabelStore] = None,
         data: Optional[EventStore] = None,
         now: Optional[datetime] = None) -> QueryPlan:
    """Resolve defaults, scope, and time buckets for a request."""
    if q.metric not in REGISTRY:
        raise UnknownMetricError(f"unknown metric {q.metric!r}")
    now = now or datetime.now(timezone.utc)
    end_year = q.endYear if q.endYear is not None else now.year
    end_month = q.endMonth if q.endMonth is not None else now.month
    if (q.startYear, q.startMonth) > (end_year, end_month):
        raise DataError(f"query start {q.startYear}-{q.startMonth:02d} is after "
                        f"end {end_year}-{end_month:02d}")
    window = TimeWindow.months(q.startYear, q.startMonth, end_year, end_month)
    if q.groupTimeRange is None:
        buckets = [(window.label(None), window)]
    else:
        buckets = [(w.label(q.groupTimeRange), w) for w in window.split(q.groupTimeRange)]

    warnings: list[str] = []
    if q.injectLabelData:
        if label_store is None:
            label_store = LabelStore([])
        label_store = inject_labels(label_store, parse_injected(q.injectLabelData))

    repo_scope = org_scope = user_scope = None
    if q.repoIds:
        repo_scope = _conjoin(repo_scope, frozenset(q.repoIds))
    if q.orgIds:
        org_scope = _conjoin(org_scope, frozenset(q.orgIds))
    if q.userIds:
        user_scope = _conjoin(user_scope, frozenset(q.userIds))
    if data is not None:
        repo_scope = _conjoin(repo_scope, _names_to_ids(
            q.repoNames, data.repo_id_by_name, "repo", warnings))
        org_scope = _conjoin(org_scope, _names_to_ids(
            q.orgNames, data.org_id_by_name, "org", warnings))
        user_scope = _conjoin(user_scope, _names_to_ids(
            q.userNames, data.user_id_by_name, "user", warnings))
    elif q.repoNames or q.orgNames or q.userNames:
        raise DataError("name-based scoping requires an event store")

    if q.labelUnion:
        if label_store is None:
            raise DataError("labelUnion requires a label store")
        repos, orgs, users = _scope_from_entity_set(label_union(label_store, q.labelUnion))
        repo_scope = _conjoin(repo_scope, repos)
        org_scope = _conjoin(org_scope, orgs)
        user_scope = _conjoin(user_scope, users)
    if q.labelIntersect:
        if label_store is None:
            raise DataError("labelIntersect requires a label store")
        repos, orgs, users = _scope_from_entity_set(
            label_intersect(label_store, q.labelIntersect))
        repo_scope = _conjoin(repo_scope, repos)
        org_scope = _conjoin(org_scope, orgs)
        user_scope = _conjoin(user_scope, users)

    empty = any(scope is not None and not scope
                for scope in (repo_scope, org_scope, user_scope))
    if empty:
        warnings.append("scope is empty after combining constraints; no rows")

    if q.groupBy is not None and q.groupBy != "org":
        if label_store is None:
            raise DataError(f"groupBy {q.groupBy!r} requires a label store")
        if not label_store.labels_of_type(q.groupBy):
            raise UnknownLabelError(q.groupBy, kind="type")

    return QueryPlan(
        metric=q.metric, window=window, buckets=buckets,
        repo_scope=repo_scope, org_scope=org_scope, user_scope=user_scope,
        order=q.order, order_option=q.orderOption,
        limit=q.limit, limit_option=q.limitOption,
        group_by=q.groupBy, precision=q.precision, options=dict(q.options),
        label_store=label_store, warnings=warnings, empty=empty,
    )


@dataclass(frozen=True)
class ResultRow:
    entity_id: object  # int for repos/orgs, label id string for label groups
    name: str
    values: tuple[float, ...]

    @property
    def total(self) -> float:
        return sum(self.values)

    def _tiebreak(self):
        if isinstance(self.entity_id, int):
            return (0, self.entity_id, self.name)
        return (1, str(self.entity_id), self.name)


@dataclass(frozen=True)
class ResultTable:
    metric: str
    group_by: Optional[str]
    bucket_labels: tuple[str, ...]
    rows: tuple[ResultRow, ...]
    warnings: tuple[str, ...] = ()


def _candidate_repos(plan: QueryPlan, data: EventStore) -> list[int]:
    repos = data.repo_ids()
    if plan.repo_scope is not None:
        repos = [r for r in repos if r in plan.repo_scope]
    if plan.org_scope is not None:
        repos = [r for r in repos if data.org_of_repo(r) in plan.org_scope]
    return repos


def _repo_values(plan: QueryPlan, data: EventStore, repo: int) -> list[float]:
    events = list(data.iter_events(repo_ids=[repo]))
    if plan.user_scope is not None:
        events = [e for e in events if e.actor_id in plan.user_scope]
    values = []
    for _label, bucket in plan.buckets:
        result = compute_metric(plan.metric, events, bucket, plan.options)
        values.append(scalar_value(plan.metric, result.value, plan.options))
    return values


def _group_rows_by_org(plan: QueryPlan, data: EventStore,
                       per_repo: dict[int, list[float]]) -> list[ResultRow]:
    grouped: dict[tuple, list[float]] = {}
    for repo, values in per_repo.items():
        org_id = data.org_of_repo(repo)
        if org_id is not None:
            key = (org_id, data.org_name(org_id) or str(org_id))
        else:
            # repos outside an org group under their owner login
            name = data.repo_name(repo) or str(repo)
            key = (None, name.split("/", 1)[0])
        acc = grouped.setdefault(key, [0.0] * len(plan.buckets))
        for i, v in enumerate(values):
            acc[i] += v
    return [ResultRow(entity_id=org_id if org_id is not None else name,
                      name=name, values=tuple(values))
            for (org_id, name), values in grouped.items()]


def _group_rows_by_label(plan: QueryPlan, data: EventStore,
                         per_repo: dict[int, list[float]]) -> list[ResultRow]:
    rows = []
    for label in plan.label_store.labels_of_type(plan.group_by):
        entities = resolve(plan.label_store, label.id)
        acc = [0.0] * len(plan.buckets)
        hit = False
        for repo, values in per_repo.items():
            org = data.org_of_repo(repo)
            if repo in entities.repos or (org is not None and org in entities.orgs):
                hit = True
                for i, v in enumerate(values):
                    acc[i] += v
        if hit:
            rows.append(ResultRow(entity_id=label.id, name=label.name,
                                  values=tuple(acc)))
    return rows


def _order_key(plan: QueryPlan, row: ResultRow) -> float:
    if plan.order_option == "latest":
        return row.values[-1] if row.values else 0.0
    return row.total


def _sort_rows(plan: QueryPlan, rows: list[ResultRow],
               key=None) -> list[ResultRow]:
    key = key or (lambda row: _order_key(plan, row))
    reverse = plan.order == "DESC"
    # two-pass sort keeps the id tie-break ascending under either direction
    rows = sorted(rows, key=lambda r: r._tiebreak())
    return sorted(rows, key=key, reverse=reverse)


def execute(plan: QueryPlan, data: EventStore) -> ResultTable:
    """Compute per-entity bucket values, group, order, and limit them."""
    bucket_labels = tuple(label for label, _ in plan.buckets)
    if plan.empty:
        return ResultTable(metric=plan.metric, group_by=plan.group_by,
                           bucket_labels=bucket_labels, rows=(),
                           warnings=tuple(plan.warnings))

    per_repo = {repo: _repo_values(plan, data, repo)
                for repo in _candidate_repos(plan, data)}

    if plan.group_by is None:
        rows = [ResultRow(entity_id=repo, name=data.repo_name(repo) or str(repo),
                          values=tuple(values))
                for repo, values in per_repo.items()]
    elif plan.group_by == "org":
        rows = _group_rows_by_org(plan, data, per_repo)
    else:
        rows = _group_rows_by_label(plan, data, per_repo)

    if plan.limit_option == "each":
        keep: set = set()
        for i in range(len(plan.buckets)):
            by_bucket = _sort_rows(plan, rows, key=lambda r: r.values[i])
            keep.update(id(r) for r in by_bucket[:plan.limit])
        rows = [r for r in rows if id(r) in keep]
        rows = _sort_rows(plan, rows)
    else:
        rows = _sort_rows(plan, rows)[:plan.limit]

    return ResultTable(metric=plan.metric, group_by=plan.group_by,
                       bucket_labels=bucket_labels, rows=tuple(rows),
                       warnings=tuple(plan.warnings))


def run_query(q: QueryRequest, data: EventStore,
              label_store: Optional[LabelStore] = None,
              now: Optional[datetime] = None) -> ResultTable:
    return execute(plan(q, label_store, data, now=now), data)


def format_value(value: float, precision: int) -> str:
    """Fixed-decimal string, half away from zero: 0.875 -> '0.88'."""
    quantum = Decimal(1).scaleb(-precision)
    return str(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))


def render(table: ResultTable, format: str = "json", precision: int = 2) -> bytes:
    """Deterministic serialization; identical inputs give identical bytes."""
    if precision < 0:
        raise DataError(f"precision must be >= 0, got {precision}")
    if format == "json":
        doc = {
            "metric": table.metric,
            "groupBy": table.group_by,
            "buckets": list(table.bucket_labels),
            "rows": [
                {
                    "id": row.entity_id,
                    "name": row.name,
                    "values": [format_value(v, precision) for v in row.values],
                    "total": format_value(row.total, precision),
                }
                for row in table.rows
            ],
            "warnings": list(table.warnings),
        }
        return (json.dumps(doc, indent=1, sort_keys=False) + "\n").encode()
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["id", "name", *table.bucket_labels, "total"])
        for row in table.rows:
            writer.writerow([
                row.entity_id if row.entity_id is not None else "",
                row.name,
                *(format_value(v, precision) for v in row.values),
                format_value(row.total, precision),
            ])
        return buf.getvalue().encode()
    raise DataError(f"unknown render format {format!r}")
