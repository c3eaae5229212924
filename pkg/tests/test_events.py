import gzip
import json
from datetime import datetime, timezone

from conftest import make_event, write_archive

from ecodigger.events import (Behavior, EventType, IngestReport, RawArchive,
                              classify_behavior, expand_archive_args,
                              parse_event_line, read_archives)


def ev(type_, payload=None, created="2019-03-01T10:00:00Z", **kw):
    obj = make_event(kw.get("event_id", "1"), type_, kw.get("actor_id", 7),
                     kw.get("login", "alice"), kw.get("repo_id", 500),
                     kw.get("repo_name", "acme/widget"), created, payload)
    return json.dumps(obj)


def test_parse_minimal_issue_open():
    e = parse_event_line(ev("IssuesEvent", {"action": "opened", "issue": {"number": 3}}))
    assert e.event_type is EventType.ISSUES
    assert e.action == "opened"
    assert e.issue_number == 3
    assert e.issue_is_pr is False
    assert e.created_at == datetime(2019, 3, 1, 10, tzinfo=timezone.utc)


def test_parse_accepts_bytes():
    line = ev("WatchEvent", {"action": "started"}).encode()
    assert parse_event_line(line).event_type is EventType.WATCH


def test_pr_merge_fields():
    e = parse_event_line(ev("PullRequestEvent", {
        "action": "closed", "number": 10,
        "pull_request": {"number": 10, "merged": True, "additions": 5, "deletions": 2}}))
    assert e.pr_merged is True
    assert (e.pr_additions, e.pr_deletions) == (5, 2)
    assert e.issue_is_pr is True


def test_pr_open_has_no_merge_flag():
    e = parse_event_line(ev("PullRequestEvent",
                            {"action": "opened", "number": 10,
                             "pull_request": {"number": 10}}))
    assert e.pr_merged is None


def test_comment_on_pr_is_marked():
    e = parse_event_line(ev("IssueCommentEvent", {
        "action": "created", "issue": {"number": 11, "pull_request": {"url": "x"}},
        "comment": {"author_association": "NONE"}}))
    assert e.issue_is_pr is True
    assert e.comment_author_association == "NONE"


def test_malformed_lines_are_skipped_not_raised():
    report = IngestReport()
    for line in ["{not json", "[1,2]", '{"id": "1"}',
                 '{"id":"1","type":"IssuesEvent","actor":{},"repo":{},"created_at":"x"}']:
        assert parse_event_line(line, report) is None
    assert report.lines_skipped == 4
    assert report.events_emitted == 0


def test_unconsumed_type_counts_as_filtered():
    report = IngestReport()
    assert parse_event_line(ev("GollumEvent", {}), report) is None
    assert report.lines_filtered == 1
    assert report.lines_skipped == 0


def test_bot_login_flag():
    e = parse_event_line(ev("WatchEvent", {"action": "started"},
                            login="dependabot[bot]"))
    assert e.actor_is_bot
    assert not parse_event_line(ev("WatchEvent", {"action": "started"})).actor_is_bot


def test_classify_behavior_table():
    cases = [
        (ev("IssueCommentEvent", {"action": "created", "issue": {"number": 1}}),
         Behavior.COMMENT),
        (ev("IssuesEvent", {"action": "opened", "issue": {"number": 1}}),
         Behavior.OPEN_ISSUE),
        (ev("IssuesEvent", {"action": "closed", "issue": {"number": 1}}), None),
        (ev("PullRequestEvent", {"action": "opened", "number": 2,
                                 "pull_request": {"number": 2}}), Behavior.OPEN_PR),
        (ev("PullRequestEvent", {"action": "closed", "number": 2,
                                 "pull_request": {"number": 2, "merged": True}}),
         Behavior.PR_MERGED),
        (ev("PullRequestEvent", {"action": "closed", "number": 2,
                                 "pull_request": {"number": 2, "merged": False}}), None),
        (ev("PullRequestReviewCommentEvent",
            {"action": "created", "pull_request": {"number": 2},
             "comment": {"author_association": "MEMBER"}}), Behavior.REVIEW_PR),
        (ev("ForkEvent", {"forkee": {}}), None),
        (ev("WatchEvent", {"action": "started"}), None),
        (ev("PushEvent", {"push_id": 1}), None),
    ]
    for line, expected in cases:
        event = parse_event_line(line)
        assert classify_behavior(event) is expected
        assert classify_behavior(event) is expected  # pure: stable on repeat


def test_three_line_file_with_one_malformed(tmp_path):
    path = write_archive(tmp_path / "2019-03-01-10.json.gz", [
        ev("IssuesEvent", {"action": "opened", "issue": {"number": 1}},
           created="2019-03-01T10:00:00Z", event_id="1"),
        "this is not json",
        ev("WatchEvent", {"action": "started"},
           created="2019-03-01T10:30:00Z", event_id="2"),
    ])
    report = IngestReport()
    events = list(read_archives([path], report))
    assert len(events) == 2
    assert report.lines_read == 3
    assert report.lines_skipped == 1
    assert report.events_emitted == 2
    assert report.lines_read == report.events_emitted + report.lines_filtered \
        + report.lines_skipped


def test_empty_gzip_file(tmp_path):
    path = write_archive(tmp_path / "2019-03-01-0.json.gz", [])
    report = IngestReport()
    assert list(read_archives([path], report)) == []
    assert report.lines_read == 0


def test_corrupt_gzip_aborts_file_only(tmp_path):
    good = write_archive(tmp_path / "2019-03-01-1.json.gz", [
        ev("WatchEvent", {"action": "started"}, event_id="1",
           created="2019-03-01T01:10:00Z")])
    bad = tmp_path / "2019-03-01-2.json.gz"
    bad.write_bytes(b"\x1f\x8b" + b"garbage-after-magic")
    report = IngestReport()
    events = list(read_archives([bad, good], report))
    assert len(events) == 1
    assert len(report.file_errors) == 1
    assert "2019-03-01-2" in report.file_errors[0].path


def test_truncated_gzip_keeps_decoded_events(tmp_path):
    path = write_archive(tmp_path / "2019-03-01-3.json.gz", [
        ev("WatchEvent", {"action": "started"}, event_id=str(i),
           created="2019-03-01T03:00:00Z") for i in range(50)])
    data = path.read_bytes()
    truncated = tmp_path / "trunc.json.gz"
    truncated.write_bytes(data[:len(data) - 8])  # drop the gzip trailer
    report = IngestReport()
    events = list(read_archives([truncated], report))
    assert events, "events decoded before the corruption point are kept"
    assert report.file_errors


def test_hour_mismatch_counted(tmp_path):
    path = write_archive(tmp_path / "2019-03-01-10.json.gz", [
        ev("WatchEvent", {"action": "started"}, event_id="1",
           created="2019-03-01T10:15:00Z"),
        ev("WatchEvent", {"action": "started"}, event_id="2",
           created="2019-03-01T11:15:00Z"),  # outside the file's hour
    ])
    report = IngestReport()
    events = list(read_archives([path], report))
    assert len(events) == 2  # mismatch is reported, not dropped
    assert report.hour_mismatches == 1


def test_raw_archive_from_path():
    archive = RawArchive.from_path("2019-03-01-9.json.gz")
    assert archive.hour == datetime(2019, 3, 1, 9, tzinfo=timezone.utc)


def test_non_hour_filename_still_readable(tmp_path):
    path = write_archive(tmp_path / "events.json.gz", [
        ev("WatchEvent", {"action": "started"})])
    report = IngestReport()
    assert len(list(read_archives([path], report))) == 1
    assert report.hour_mismatches == 0


def test_report_merge_is_associative():
    a = IngestReport(lines_read=3, events_emitted=2, lines_skipped=1)
    b = IngestReport(lines_read=5, events_emitted=5)
    c = IngestReport(lines_filtered=2, lines_read=2)
    left = a.merge(b).merge(c)
    right = a.merge(b.merge(c))
    assert left.to_jsonable() == right.to_jsonable()
    assert left.lines_read == 10


def test_expand_archive_args(tmp_path):
    for name in ["2019-01-01-0.json.gz", "2019-01-01-1.json.gz", "other.gz"]:
        write_archive(tmp_path / name, [])
    found = expand_archive_args([str(tmp_path / "other.gz")],
                                str(tmp_path / "2019-01-01-*.json.gz"))
    assert [p.name for p in found] == ["2019-01-01-0.json.gz",
                                       "2019-01-01-1.json.gz", "other.gz"]
    # explicit path also matching the glob is not duplicated
    found = expand_archive_args([str(tmp_path / "2019-01-01-0.json.gz")],
                                str(tmp_path / "*.json.gz"))
    assert len(found) == 2
