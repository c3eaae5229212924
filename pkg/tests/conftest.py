import csv
import gzip
import json
from pathlib import Path

import pytest

from ecodigger.events import parse_event_line

DATA_DIR = Path(__file__).parent / "data"


def load_fixture_events(name="chaoss_fixture.jsonl"):
    events = []
    with open(DATA_DIR / name) as f:
        for line in f:
            event = parse_event_line(line)
            assert event is not None, f"fixture line failed to parse: {line[:100]}"
            events.append(event)
    return events


def parse_events(objects):
    """Parse GHArchive-style dicts (from make_event) into CollabEvents."""
    events = []
    for obj in objects:
        event = parse_event_line(json.dumps(obj))
        assert event is not None, f"object failed to parse: {obj}"
        events.append(event)
    return events


def load_expected(name="chaoss_expected.csv"):
    """Frozen oracle rows as {(metric, key): value-string}."""
    table = {}
    with open(DATA_DIR / name, newline="") as f:
        for row in csv.DictReader(f):
            table[(row["metric"], row["key"])] = row["value"]
    return table


def make_event(event_id, type_, actor_id, actor_login, repo_id, repo_name,
               created_at, payload=None, org=None):
    """One GHArchive-style event object."""
    obj = {
        "id": str(event_id),
        "type": type_,
        "actor": {"id": actor_id, "login": actor_login},
        "repo": {"id": repo_id, "name": repo_name},
        "payload": payload or {},
        "public": True,
        "created_at": created_at,
    }
    if org is not None:
        obj["org"] = org
    return obj


def write_archive(path, objects):
    """Gzip newline-delimited JSON; dict entries are serialized, strings kept."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with gzip.open(path, "wt", encoding="utf-8") as f:
        for obj in objects:
            if isinstance(obj, str):
                f.write(obj.rstrip("\n") + "\n")
            else:
                f.write(json.dumps(obj, separators=(",", ":")) + "\n")
    return path


@pytest.fixture
def chaoss_events():
    return load_fixture_events()


@pytest.fixture
def labels_root():
    return Path(__file__).parent.parent / "labels"
