import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from conftest import DATA_DIR, make_event, write_archive

from ecodigger.service import create_app

LABELS_DIR = Path(__file__).parent.parent / "labels"


def worked_example_objects():
    """One developer on two projects: activities 1 and 7, edge 0.875."""
    return [
        make_event("7001", "IssueCommentEvent", 1, "alice", 10, "w/a",
                   created_at="2020-01-05T10:00:00Z",
                   payload={"action": "created", "issue": {"number": 1}}),
        make_event("7002", "PullRequestEvent", 1, "alice", 20, "w/b",
                   created_at="2020-01-06T10:00:00Z",
                   payload={"action": "opened", "pull_request": {"number": 2}}),
        make_event("7003", "PullRequestReviewCommentEvent", 1, "alice", 20, "w/b",
                   created_at="2020-01-07T10:00:00Z",
                   payload={"action": "created", "pull_request": {"number": 2}}),
    ]


@pytest.fixture(scope="module")
def client(tmp_path_factory):
    root = tmp_path_factory.mktemp("svc")
    arch_dir = root / "archives"
    write_archive(arch_dir / "fixture.json.gz",
                  (DATA_DIR / "chaoss_fixture.jsonl").read_text().splitlines())
    write_archive(arch_dir / "worked.json.gz", worked_example_objects())
    app = create_app(data_dir=root / "data", labels_dir=LABELS_DIR)
    with TestClient(app) as c:
        r = c.post("/ingest", json={"glob": str(arch_dir / "*.json.gz")})
        assert r.status_code == 200, r.text
        yield c


def test_health(client):
    body = client.get("/health").json()
    assert body["status"] == "ok"
    assert body["version"]


def test_ingest_report(client, tmp_path):
    # dedupe across requests: everything is already stored
    r = client.post("/ingest", json={"glob": str(tmp_path / "*.gz"),
                                     "paths": []})
    assert r.status_code == 422
    assert "no archive files matched" in r.json()["detail"]


def test_ingest_counts(tmp_path):
    write_archive(tmp_path / "a.json.gz", worked_example_objects())
    app = create_app(data_dir=tmp_path / "data")
    with TestClient(app) as c:
        body = c.post("/ingest", json={"paths": [str(tmp_path / "a.json.gz")]}).json()
        assert body["report"]["lines_read"] == 3
        assert body["report"]["events_emitted"] == 3
        assert body["store"]["added"] == 3
        again = c.post("/ingest", json={"paths": [str(tmp_path / "a.json.gz")]}).json()
        assert again["store"]["added"] == 0
        assert again["store"]["duplicates"] == 3


def test_env_var_data_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("ECODIGGER_DATA_DIR", str(tmp_path / "envdata"))
    app = create_app()
    assert app.state.data_dir == tmp_path / "envdata"


def test_activity_developer_scope(client):
    body = client.post("/activity", json={"window": "2019-03"}).json()
    top = body["rows"][0]
    assert top["entity"] == {"developer": 1, "login": "alice"}
    assert top["score"] == 18.0
    assert [r["score"] for r in body["rows"]] == [18.0, 11.0, 7.0, 4.0, 1.0]


def test_activity_repo_scope(client):
    body = client.post("/activity", json={"window": "2019-03", "scope": "repo"}).json()
    assert body["rows"][0]["entity"] == {"repo": 500, "name": "acme/widget"}
    assert body["rows"][0]["score"] == 41.0


def test_activity_custom_weights(client):
    flat = {"comment": 1, "open_issue": 1, "open_pr": 1, "review_pr": 1, "pr_merged": 1}
    body = client.post("/activity", json={"window": "2019-03", "weights": flat}).json()
    assert body["rows"][0]["score"] == 7.0


def test_activity_errors(client):
    assert client.post("/activity", json={"window": "2019-03",
                                          "scope": "galaxy"}).status_code == 422
    assert client.post("/activity", json={"window": "not-a-window"}).status_code == 422
    bad = client.post("/activity", json={"window": "2019-03",
                                         "weights": {"bogus": 1}})
    assert bad.status_code == 422


def test_network_export(client):
    r = client.post("/network/export", json={"window": "2020-01"})
    assert r.status_code == 200
    assert r.text == "10\t20\t0.875\n"


def test_network_components(client):
    body = client.post("/network/components", json={"window": "2020-01"}).json()
    assert body["total_nodes"] == 2
    assert body["component_count"] == 1
    assert body["giant_size"] == 2
    assert body["giant_share"] == 1.0
    assert body["removed_bots"] == []
    assert body["sizes"] == [2]


def test_network_related(client):
    body = client.post("/network/related",
                       json={"window": "2020-01", "project": "w/a"}).json()
    assert body["project"] == 10
    assert body["rows"] == [{"project": 20, "name": "w/b", "relatedness": 0.875}]
    missing = client.post("/network/related",
                          json={"window": "2020-01", "project": "no/pe"})
    assert missing.status_code == 404


def test_influence_from_window(client):
    body = client.post("/influence", json={"window": "2020-01",
                                           "scale": "raw"}).json()
    scores = {r["project"]: r["score"] for r in body["rows"]}
    assert scores[10] == pytest.approx(0.5, abs=1e-9)
    assert scores[20] == pytest.approx(0.5, abs=1e-9)
    assert body["converged"] is True
    assert body["rows"][0]["rank"] == 1
    assert body["rows"][0]["name"] == "w/a"


def test_influence_from_edges_text(client):
    exported = client.post("/network/export", json={"window": "2020-01"}).text
    body = client.post("/influence", json={"edgesText": exported}).json()
    scores = {r["project"]: r["score"] for r in body["rows"]}
    assert scores[10] == pytest.approx(1.0, abs=1e-7)  # times_n default
    assert scores[20] == pytest.approx(1.0, abs=1e-7)


def test_influence_needs_input(client):
    r = client.post("/influence", json={})
    assert r.status_code == 422
    assert "window or edgesText" in r.json()["detail"]
    assert client.post("/influence", json={"window": "2020-01",
                                           "damping": 2.0}).status_code == 422


def test_metric_list(client):
    body = client.get("/metrics").json()
    assert len(body["metrics"]) == 17
    names = [m["name"] for m in body["metrics"]]
    assert "bus_factor" in names and "activity_dates_and_times" in names


def test_metric_endpoint(client):
    body = client.post("/metrics/issues_new",
                       json={"repo": 500, "window": "2019-03"}).json()
    assert body["value"] == 4
    assert body["repo"] == 500
    by_name = client.post("/metrics/issues_new",
                          json={"repo": "acme/widget", "window": "2019-03"}).json()
    assert by_name == body


def test_metric_with_options(client):
    body = client.post("/metrics/issue_response_time",
                       json={"repo": 500, "window": "2019-03",
                             "options": {"stat": "p90"}}).json()
    assert body["value"]["p90"] == 7200.0
    assert body["value"]["count"] == 2


def test_metric_errors(client):
    assert client.post("/metrics/nope",
                       json={"repo": 500, "window": "2019-03"}).status_code == 404
    assert client.post("/metrics/issues_new",
                       json={"repo": "no/pe", "window": "2019-03"}).status_code == 404
    # unknown numeric id: empty event stream, zero counts, not an error
    body = client.post("/metrics/issues_new",
                       json={"repo": 999, "window": "2019-03"})
    assert body.status_code == 200 and body.json()["value"] == 0


def test_labels_endpoints(client):
    listing = client.get("/labels").json()
    assert len(listing["labels"]) == 8
    assert {"id": ":regions/CN", "name": "China", "type": "Region"} in listing["labels"]

    resolved = client.post("/labels/resolve", json={"ref": ":regions/CN"}).json()
    assert resolved == {"orgs": [9001], "repos": [501, 502, 503], "users": []}

    inter = client.post("/labels/intersect",
                        json={"refs": [":regions/CN", "Foundation"]}).json()
    assert inter == {"orgs": [], "repos": [502, 503], "users": []}

    union = client.post("/labels/union",
                        json={"refs": [":tech/sql", ":regions/US"]}).json()
    assert union == {"orgs": [9050], "repos": [601, 602, 810], "users": []}

    assert client.post("/labels/resolve", json={"ref": ":no/pe"}).status_code == 404


def test_query_json(client):
    body = {"metric": "issues_new", "startYear": 2019, "endYear": 2019,
            "endMonth": 12, "orderOption": "all"}
    r = client.post("/query", json=body)
    assert r.status_code == 200
    assert r.headers["content-type"].startswith("application/json")
    doc = r.json()
    rows = {row["id"]: row for row in doc["rows"]}
    assert rows[500]["total"] == "5.00"  # 5 issues opened across 2019
    assert rows[10]["total"] == "0.00" and rows[20]["total"] == "0.00"


def test_query_csv(client):
    body = {"metric": "issues_new", "startYear": 2019, "endYear": 2019,
            "endMonth": 12, "repoIds": [500]}
    r = client.post("/query?format=csv", json=body)
    assert r.headers["content-type"].startswith("text/csv")
    assert r.text == ("id,name,2019-01:2019-12,total\n"
                      "500,acme/widget,5.00,5.00\n")


def test_query_format_validated(client):
    r = client.post("/query?format=xml", json={"metric": "issues_new"})
    assert r.status_code == 422


def test_query_error_mapping(client):
    assert client.post("/query", json={"metric": "nope"}).status_code == 404
    assert client.post("/query", json={"metric": "issues_new",
                                       "groupBy": "Planet"}).status_code == 404
    assert client.post("/query", json={"metric": "issues_new",
                                       "order": "UP"}).status_code == 422


def test_query_with_labels(client):
    body = {"metric": "issues_new", "startYear": 2019, "endYear": 2019,
            "endMonth": 12, "labelIntersect": [":regions/CN"]}
    doc = client.post("/query", json=body).json()
    # repo 500 is org 9001 (in CN) but not in CN's repo list: scope excludes it
    assert doc["rows"] == []
