"""Ingested event store: versioned, columnar, one gzip file per month.

Layout under data_dir:
    manifest.json            {"version": 1, "months": {"2019-03": {...}}}
    names.json               latest id<->name observations per entity kind
    events/2019-03.json.gz   {"columns": {field: [values...]}}

Events are deduplicated by event id within and across ingests. Month
files let window queries skip irrelevant data without an index. Written
via temp file plus rename so a crashed ingest never leaves a torn file.
"""

from __future__ import annotations

import gzip
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Optional, Union

from .errors import StoreError
from .events import CollabEvent, EventType
from .windows import TimeWindow, parse_utc

STORE_VERSION = 1

_COLUMNS = (
    "event_id", "event_type", "actor_id", "actor_login", "repo_id", "repo_name",
    "created_at", "action", "org_id", "org_login", "issue_number", "issue_is_pr",
    "pr_merged", "pr_additions", "pr_deletions", "comment_author_association",
)


def _event_to_row(e: CollabEvent) -> tuple:
    return (e.event_id, e.event_type.value, e.actor_id, e.actor_login, e.repo_id,
            e.repo_name, e.created_at.isoformat(), e.action, e.org_id, e.org_login,
            e.issue_number, e.issue_is_pr, e.pr_merged, e.pr_additions,
            e.pr_deletions, e.comment_author_association)


def _row_to_event(row: tuple) -> CollabEvent:
    (event_id, event_type, actor_id, actor_login, repo_id, repo_name, created_at,
     action, org_id, org_login, issue_number, issue_is_pr, pr_merged,
     pr_additions, pr_deletions, association) = row
    return CollabEvent(
        event_id=event_id, event_type=EventType(event_type), actor_id=actor_id,
        actor_login=actor_login, repo_id=repo_id, repo_name=repo_name,
        created_at=parse_utc(created_at), action=action, org_id=org_id,
        org_login=org_login, issue_number=issue_number, issue_is_pr=issue_is_pr,
        pr_merged=pr_merged, pr_additions=pr_additions, pr_deletions=pr_deletions,
        comment_author_association=association,
    )


@dataclass(frozen=True)
class StoreIngestResult:
    added: int
    duplicates: int
    months: tuple[str, ...]

    def to_jsonable(self) -> dict:
        return {"added": self.added, "duplicates": self.duplicates,
                "months": list(self.months)}


def _atomic_write(path: Path, data: bytes):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


class EventStore:
    def __init__(self, data_dir: Union[str, Path]):
        self.data_dir = Path(data_dir)
        self.events_dir = self.data_dir / "events"
        self._manifest = self._load_manifest()
        self._names = self._load_names()

    # -- layout ------------------------------------------------------------

    def _manifest_path(self) -> Path:
        return self.data_dir / "manifest.json"

    def _names_path(self) -> Path:
        return self.data_dir / "names.json"

    def _month_path(self, month: str) -> Path:
        return self.events_dir / f"{month}.json.gz"

    def _load_manifest(self) -> dict:
        path = self._manifest_path()
        if not path.exists():
            return {"version": STORE_VERSION, "months": {}}
        try:
            manifest = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise StoreError(f"corrupt manifest {path}: {exc}") from exc
        version = manifest.get("version")
        if version != STORE_VERSION:
            raise StoreError(f"unsupported store version {version} at {path}")
        return manifest

    def _load_names(self) -> dict:
        path = self._names_path()
        if not path.exists():
            return {"repos": {}, "orgs": {}, "users": {}, "repo_orgs": {}}
        try:
            return json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise StoreError(f"corrupt names file {path}: {exc}") from exc

    def _read_month(self, month: str) -> dict[str, tuple]:
        path = self._month_path(month)
        if not path.exists():
            return {}
        try:
            with gzip.open(path, "rt", encoding="utf-8") as f:
                blob = json.load(f)
        except (OSError, EOFError, json.JSONDecodeError) as exc:
            raise StoreError(f"corrupt month file {path}: {exc}") from exc
        columns = blob.get("columns", {})
        missing = [c for c in _COLUMNS if c not in columns]
        if missing:
            raise StoreError(f"month file {path} lacks columns {missing}")
        rows = zip(*(columns[c] for c in _COLUMNS))
        return {row[0]: row for row in rows}

    def _write_month(self, month: str, rows: dict[str, tuple]):
        ordered = sorted(rows.values(), key=lambda r: (r[6], r[0]))  # created_at, id
        columns = {c: [row[i] for row in ordered] for i, c in enumerate(_COLUMNS)}
        payload = json.dumps({"columns": columns}, separators=(",", ":")).encode()
        self.events_dir.mkdir(parents=True, exist_ok=True)
        _atomic_write(self._month_path(month), gzip.compress(payload))
        self._manifest["months"][month] = {"events": len(ordered)}

    def _flush_meta(self):
        self.data_dir.mkdir(parents=True, exist_ok=True)
        _atomic_write(self._manifest_path(),
                      json.dumps(self._manifest, indent=1, sort_keys=True).encode())
        _atomic_write(self._names_path(),
                      json.dumps(self._names, indent=1, sort_keys=True).encode())

    # -- writes ------------------------------------------------------------

    def ingest(self, events: Iterable[CollabEvent]) -> StoreIngestResult:
        by_month: dict[str, list[CollabEvent]] = {}
        for event in events:
            month = f"{event.created_at.year:04d}-{event.created_at.month:02d}"
            by_month.setdefault(month, []).append(event)
            self._observe_names(event)
        added = duplicates = 0
        for month in sorted(by_month):
            rows = self._read_month(month)
            for event in by_month[month]:
                if event.event_id in rows:
                    duplicates += 1
                else:
                    rows[event.event_id] = _event_to_row(event)
                    added += 1
            self._write_month(month, rows)
        self._flush_meta()
        return StoreIngestResult(added=added, duplicates=duplicates,
                                 months=tuple(sorted(by_month)))

    def _observe_names(self, event: CollabEvent):
        at = event.created_at.isoformat()
        self._observe(self._names["repos"], event.repo_id, event.repo_name, at)
        self._observe(self._names["users"], event.actor_id, event.actor_login, at)
        if event.org_id is not None and event.org_login:
            self._observe(self._names["orgs"], event.org_id, event.org_login, at)
        if event.org_id is not None:
            self._names["repo_orgs"][str(event.repo_id)] = event.org_id

    @staticmethod
    def _observe(table: dict, entity_id: int, name: str, at: str):
        key = str(entity_id)
        current = table.get(key)
        if current is None or current[1] <= at:
            table[key] = [name, at]

    # -- reads -------------------------------------------------------------

    def months(self) -> list[str]:
        return sorted(self._manifest["months"])

    def total_events(self) -> int:
        return sum(entry["events"] for entry in self._manifest["months"].values())

    def iter_events(self, window: Optional[TimeWindow] = None,
                    repo_ids: Optional[Iterable[int]] = None) -> Iterator[CollabEvent]:
        """Events ordered by (created_at, event_id), month files pruned
        against the window before decompression."""
        wanted = frozenset(repo_ids) if repo_ids is not None else None
        for month in self.months():
            if window is not None and not _month_overlaps(month, window):
                continue
            for row in sorted(self._read_month(month).values(), key=lambda r: (r[6], r[0])):
                event = _row_to_event(row)
                if window is not None and not window.contains(event.created_at):
                    continue
                if wanted is not None and event.repo_id not in wanted:
                    continue
                yield event

    def repo_ids(self) -> list[int]:
        return sorted(int(k) for k in self._names["repos"])

    def repo_name(self, repo_id: int) -> Optional[str]:
        entry = self._names["repos"].get(str(repo_id))
        return entry[0] if entry else None

    def org_name(self, org_id: int) -> Optional[str]:
        entry = self._names["orgs"].get(str(org_id))
        return entry[0] if entry else None

    def user_name(self, user_id: int) -> Optional[str]:
        entry = self._names["users"].get(str(user_id))
        return entry[0] if entry else None

    def org_of_repo(self, repo_id: int) -> Optional[int]:
        return self._names["repo_orgs"].get(str(repo_id))

    def _id_by_name(self, table: dict, name: str) -> Optional[int]:
        best: Optional[tuple[str, int]] = None
        for key, (candidate, at) in table.items():
            if candidate == name and (best is None or at > best[0]):
                best = (at, int(key))
        return best[1] if best else None

    def repo_id_by_name(self, name: str) -> Optional[int]:
        return self._id_by_name(self._names["repos"], name)

    def org_id_by_name(self, name: str) -> Optional[int]:
        return self._id_by_name(self._names["orgs"], name)

    def user_id_by_name(self, name: str) -> Optional[int]:
        return self._id_by_name(self._names["users"], name)


def _month_overlaps(month: str, window: TimeWindow) -> bool:
    try:
        year, mon = int(month[:4]), int(month[5:7])
    except ValueError:
        return True
    bucket = TimeWindow.months(year, mon, year, mon)
    return bucket.start < window.end and window.start < bucket.end
