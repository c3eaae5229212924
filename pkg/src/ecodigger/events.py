"""GHArchive ingestion: stream gzipped JSONL hour files into normalized events.

GHArchive packages the public GitHub event firehose as one gzip file per
UTC hour, one JSON event object per line. This module parses the
post-2015 payload schema; older lines missing required fields are counted
as skips. Parsing never raises on malformed input: every line ends up as
exactly one of {event emitted, filtered (well-formed but not a
collaboration-relevant type), skipped (structurally unusable)}.
"""

from __future__ import annotations

import glob as globlib
import gzip
import json
import logging
import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Optional, Union

from .windows import UTC, parse_utc

log = logging.getLogger(__name__)

_ARCHIVE_NAME = re.compile(r"^(\d{4})-(\d{2})-(\d{2})-(\d{1,2})\.json\.gz$")


class EventType(str, Enum):
    """The GitHub public event types consumed downstream."""

    ISSUES = "IssuesEvent"
    ISSUE_COMMENT = "IssueCommentEvent"
    PULL_REQUEST = "PullRequestEvent"
    PR_REVIEW_COMMENT = "PullRequestReviewCommentEvent"
    FORK = "ForkEvent"
    WATCH = "WatchEvent"
    PUSH = "PushEvent"


_CONSUMED_TYPES = {t.value: t for t in EventType}


class Behavior(Enum):
    """The five weighted collaboration behaviors."""

    COMMENT = "comment"
    OPEN_ISSUE = "open_issue"
    OPEN_PR = "open_pr"
    REVIEW_PR = "review_pr"
    PR_MERGED = "pr_merged"


@dataclass(frozen=True)
class RawArchive:
    """One GHArchive hour file; ``hour`` is parsed from the filename."""

    path: Path
    hour: Optional[datetime] = None

    @classmethod
    def from_path(cls, path: Union[str, Path]) -> "RawArchive":
        path = Path(path)
        m = _ARCHIVE_NAME.match(path.name)
        if not m:
            raise ValueError(
                f"{path.name!r} does not match the YYYY-MM-DD-H.json.gz "
                f"archive naming scheme")
        y, mo, d, h = (int(g) for g in m.groups())
        return cls(path=path, hour=datetime(y, mo, d, h, tzinfo=UTC))


@dataclass(frozen=True, slots=True)
class CollabEvent:
    """One normalized GitHub event."""

    event_id: str
    event_type: EventType
    actor_id: int
    actor_login: str
    repo_id: int
    repo_name: str
    created_at: datetime
    action: Optional[str] = None
    org_id: Optional[int] = None
    org_login: Optional[str] = None
    issue_number: Optional[int] = None
    issue_is_pr: Optional[bool] = None
    pr_merged: Optional[bool] = None
    pr_additions: Optional[int] = None
    pr_deletions: Optional[int] = None
    comment_author_association: Optional[str] = None

    @property
    def actor_is_bot(self) -> bool:
        """Login-suffix bot flag, for reporting only (not used to filter)."""
        return self.actor_login.endswith("[bot]")


@dataclass
class FileError:
    path: str
    error: str


@dataclass
class IngestReport:
    """Counters for one ingest run; merging reports is associative."""

    lines_read: int = 0
    events_emitted: int = 0
    lines_filtered: int = 0
    lines_skipped: int = 0
    bytes_decompressed: int = 0
    hour_mismatches: int = 0
    file_errors: list[FileError] = field(default_factory=list)

    def merge(self, other: "IngestReport") -> "IngestReport":
        return IngestReport(
            lines_read=self.lines_read + other.lines_read,
            events_emitted=self.events_emitted + other.events_emitted,
            lines_filtered=self.lines_filtered + other.lines_filtered,
            lines_skipped=self.lines_skipped + other.lines_skipped,
            bytes_decompressed=self.bytes_decompressed + other.bytes_decompressed,
            hour_mismatches=self.hour_mismatches + other.hour_mismatches,
            file_errors=self.file_errors + other.file_errors,
        )

    def to_jsonable(self) -> dict:
        return {
            "lines_read": self.lines_read,
            "events_emitted": self.events_emitted,
            "lines_filtered": self.lines_filtered,
            "lines_skipped": self.lines_skipped,
            "bytes_decompressed": self.bytes_decompressed,
            "hour_mismatches": self.hour_mismatches,
            "file_errors": [{"path": e.path, "error": e.error} for e in self.file_errors],
        }


def _opt_int(value) -> Optional[int]:
    if isinstance(value, bool) or value is None:
        return None
    if isinstance(value, int):
        return value
    try:
        return int(value)
    except (TypeError, ValueError):
        return None


def parse_event_line(line: Union[str, bytes],
                     report: Optional[IngestReport] = None) -> Optional[CollabEvent]:
    """Parse one archive line into a CollabEvent, or None.

    Never raises on malformed input. When ``report`` is given, the line is
    tallied: emitted, filtered (valid event of an unconsumed type), or
    skipped (structural failure).
    """
    def skip() -> None:
        if report is not None:
            report.lines_skipped += 1

    try:
        obj = json.loads(line)
    except (json.JSONDecodeError, UnicodeDecodeError):
        skip()
        return None
    if not isinstance(obj, dict):
        skip()
        return None

    type_name = obj.get("type")
    actor = obj.get("actor")
    repo = obj.get("repo")
    created_raw = obj.get("created_at")
    if (obj.get("id") is None or type_name is None or not isinstance(actor, dict)
            or not isinstance(repo, dict) or not isinstance(created_raw, str)):
        skip()
        return None

    event_type = _CONSUMED_TYPES.get(type_name)
    if event_type is None:
        # Well-formed event of a type nothing downstream consumes.
        if isinstance(type_name, str) and report is not None:
            report.lines_filtered += 1
            return None
        skip()
        return None

    actor_id = _opt_int(actor.get("id"))
    repo_id = _opt_int(repo.get("id"))
    actor_login = actor.get("login")
    repo_name = repo.get("name")
    if (actor_id is None or actor_id <= 0 or repo_id is None or repo_id <= 0
            or not isinstance(actor_login, str) or not isinstance(repo_name, str)):
        skip()
        return None
    try:
        created_at = parse_utc(created_raw)
    except ValueError:
        skip()
        return None

    payload = obj.get("payload")
    if not isinstance(payload, dict):
        payload = {}
    action = payload.get("action")
    if not isinstance(action, str):
        action = None

    issue_number = None
    issue_is_pr = None
    pr_merged = None
    pr_additions = None
    pr_deletions = None
    association = None

    if event_type is EventType.ISSUES:
        issue = payload.get("issue")
        if isinstance(issue, dict):
            issue_number = _opt_int(issue.get("number"))
            issue_is_pr = False
    elif event_type is EventType.ISSUE_COMMENT:
        issue = payload.get("issue")
        if isinstance(issue, dict):
            issue_number = _opt_int(issue.get("number"))
            # IssueCommentEvent fires for PR threads too; the payload marks those.
            issue_is_pr = "pull_request" in issue
        comment = payload.get("comment")
        if isinstance(comment, dict) and isinstance(comment.get("author_association"), str):
            association = comment["author_association"]
    elif event_type is EventType.PULL_REQUEST:
        pr = payload.get("pull_request")
        if not isinstance(pr, dict):
            pr = {}
        issue_number = _opt_int(payload.get("number"))
        if issue_number is None:
            issue_number = _opt_int(pr.get("number"))
        issue_is_pr = True
        if action == "closed":
            pr_merged = bool(pr.get("merged", False))
        pr_additions = _opt_int(pr.get("additions"))
        pr_deletions = _opt_int(pr.get("deletions"))
    elif event_type is EventType.PR_REVIEW_COMMENT:
        pr = payload.get("pull_request")
        if isinstance(pr, dict):
            issue_number = _opt_int(pr.get("number"))
        issue_is_pr = True
        comment = payload.get("comment")
        if isinstance(comment, dict) and isinstance(comment.get("author_association"), str):
            association = comment["author_association"]

    event = CollabEvent(
        event_id=str(obj["id"]),
        event_type=event_type,
        actor_id=actor_id,
        actor_login=actor_login,
        repo_id=repo_id,
        repo_name=repo_name,
        created_at=created_at,
        action=action,
        org_id=_opt_int(obj["org"].get("id")) if isinstance(obj.get("org"), dict) else None,
        org_login=obj["org"].get("login") if isinstance(obj.get("org"), dict) else None,
        issue_number=issue_number,
        issue_is_pr=issue_is_pr,
        pr_merged=pr_merged,
        pr_additions=pr_additions,
        pr_deletions=pr_deletions,
        comment_author_association=association,
    )
    if report is not None:
        report.events_emitted += 1
    return event


def classify_behavior(event: CollabEvent) -> Optional[Behavior]:
    """Map an event to its collaboration behavior, or None.

    Pure function of (event_type, action, pr_merged). Fork, watch and push
    events carry no behavior weight.
    """
    t = event.event_type
    if t is EventType.ISSUE_COMMENT:
        return Behavior.COMMENT
    if t is EventType.ISSUES and event.action == "opened":
        return Behavior.OPEN_ISSUE
    if t is EventType.PULL_REQUEST:
        if event.action == "opened":
            return Behavior.OPEN_PR
        if event.action == "closed" and event.pr_merged:
            return Behavior.PR_MERGED
        return None
    if t is EventType.PR_REVIEW_COMMENT:
        return Behavior.REVIEW_PR
    return None


ArchiveSpec = Union[RawArchive, str, Path]


def _as_archive(spec: ArchiveSpec) -> RawArchive:
    if isinstance(spec, RawArchive):
        return spec
    try:
        return RawArchive.from_path(spec)
    except ValueError:
        # Not named like an hour file; ingest anyway, skip hour checks.
        return RawArchive(path=Path(spec), hour=None)


def read_archives(archives: Iterable[ArchiveSpec],
                  report: Optional[IngestReport] = None) -> Iterator[CollabEvent]:
    """Stream events from archive files in order, with bounded memory.

    ``report`` (if given) is filled in while the stream is consumed. An
    unreadable file or a corrupt gzip stream aborts that file only; events
    already decoded from it are kept.
    """
    for spec in archives:
        archive = _as_archive(spec)
        path = archive.path
        mismatch_logged = False
        try:
            stream = gzip.open(path, "rb")
        except OSError as exc:
            if report is not None:
                report.file_errors.append(FileError(str(path), str(exc)))
            continue
        with stream:
            try:
                for line in stream:
                    if report is not None:
                        report.lines_read += 1
                        report.bytes_decompressed += len(line)
                    event = parse_event_line(line, report)
                    if event is None:
                        continue
                    if archive.hour is not None and report is not None:
                        if not (archive.hour <= event.created_at
                                < archive.hour + timedelta(hours=1)):
                            report.hour_mismatches += 1
                            if not mismatch_logged:
                                log.warning("%s: event %s timestamped %s outside archive hour",
                                            path.name, event.event_id, event.created_at)
                                mismatch_logged = True
                    yield event
            except (EOFError, OSError) as exc:
                if report is not None:
                    report.file_errors.append(FileError(str(path), f"corrupt gzip: {exc}"))
                continue


def expand_archive_args(paths: Iterable[str], pattern: Optional[str] = None) -> list[Path]:
    """Resolve explicit paths plus an optional glob, deduplicated, sorted."""
    found: set[Path] = {Path(p) for p in paths}
    if pattern:
        found.update(Path(p) for p in globlib.glob(pattern))
    return sorted(found)
