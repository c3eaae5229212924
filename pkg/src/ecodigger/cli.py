"""Command-line client for the service.

By default every command talks to an in-process application over an ASGI
transport, so no server needs to be running; `--server URL` points the
same commands at a remote instance instead. Data goes to stdout,
diagnostics to stderr. Exit codes: 0 success, 1 usage error, 2 data
error.
"""

from __future__ import annotations

import asyncio
import json
import sys
from pathlib import Path
from typing import Optional

import click
import httpx

from .errors import DataError

JSON_INDENT = 1


class ServiceClient:
    """Sync request interface over either a remote server or an in-process
    app (ASGITransport is async-only, hence the asyncio.run hop)."""

    def __init__(self, server: Optional[str], data_dir: Optional[str],
                 labels_dir: Optional[str]):
        self._server = server
        self._app = None
        if not server:
            from .service.app import create_app

            self._app = create_app(data_dir, labels_dir)

    def _send(self, method: str, path: str, body: Optional[dict],
              params: Optional[dict]) -> httpx.Response:
        if self._server:
            with httpx.Client(base_url=self._server, timeout=120.0) as client:
                return client.request(method, path, json=body, params=params)

        async def go() -> httpx.Response:
            transport = httpx.ASGITransport(app=self._app)
            async with httpx.AsyncClient(transport=transport,
                                         base_url="http://ecodigger") as client:
                return await client.request(method, path, json=body, params=params)

        return asyncio.run(go())

    def request(self, method: str, path: str, body: Optional[dict] = None,
                params: Optional[dict] = None) -> httpx.Response:
        try:
            response = self._send(method, path, body, params)
        except httpx.HTTPError as exc:
            raise DataError(f"cannot reach service: {exc}") from exc
        if response.status_code >= 400:
            try:
                detail = response.json().get("detail", response.text)
            except ValueError:
                detail = response.text
            raise DataError(f"{path}: {detail}")
        return response

    def get_json(self, path: str, params: Optional[dict] = None) -> dict:
        return self.request("GET", path, params=params).json()

    def post_json(self, path: str, body: dict, params: Optional[dict] = None) -> dict:
        return self.request("POST", path, body=body, params=params).json()


def emit(doc) -> None:
    click.echo(json.dumps(doc, indent=JSON_INDENT, sort_keys=False))


def read_weights(path: Optional[str]) -> Optional[dict]:
    if path is None:
        return None
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read weights file {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise DataError(f"weights file {path} must hold a JSON object")
    return raw


@click.group(name="ecodigger")
@click.option("--data-dir", envvar="ECODIGGER_DATA_DIR", default=None,
              help="Event store directory (env: ECODIGGER_DATA_DIR).")
@click.option("--labels-dir", envvar="ECODIGGER_LABELS_DIR", default=None,
              help="Label data directory (env: ECODIGGER_LABELS_DIR).")
@click.option("--server", default=None, metavar="URL",
              help="Remote service URL; default is an in-process service.")
@click.pass_context
def cli(ctx, data_dir, labels_dir, server):
    """Mine GitHub event archives: activity, networks, influence, metrics."""
    ctx.obj = ServiceClient(server, data_dir, labels_dir)


@cli.command()
@click.argument("paths", nargs=-1)
@click.option("--glob", "pattern", default=None,
              help="Glob pattern for archive files.")
@click.pass_obj
def ingest(client: ServiceClient, paths, pattern):
    """Ingest GHArchive hour files into the event store."""
    if not paths and not pattern:
        raise click.UsageError("give archive paths or --glob")
    doc = client.post_json("/ingest", {"paths": list(paths), "glob": pattern})
    emit(doc)


@cli.command()
@click.option("--window", required=True, help="YYYY, YYYY-MM or YYYY-MM:YYYY-MM.")
@click.option("--scope", default="developer",
              type=click.Choice(["developer", "developer_repo", "repo"]))
@click.option("--repo-id", "repo_ids", multiple=True, type=int)
@click.option("--limit", default=None, type=int)
@click.option("--weights", "weights_path", default=None,
              help="JSON file with behavior weights.")
@click.pass_obj
def activity(client: ServiceClient, window, scope, repo_ids, limit, weights_path):
    """Activity scores for developers or repos in a window."""
    doc = client.post_json("/activity", {
        "window": window, "scope": scope,
        "repoIds": list(repo_ids) or None, "limit": limit,
        "weights": read_weights(weights_path),
    })
    emit(doc["rows"])


@cli.group()
def network():
    """Project-relatedness network operations."""


def _network_body(window, bot_threshold, weights_path) -> dict:
    return {"window": window, "botThreshold": bot_threshold,
            "weights": read_weights(weights_path)}


@network.command()
@click.option("--window", required=True)
@click.option("--bot-threshold", default=200, type=int, show_default=True)
@click.option("--weights", "weights_path", default=None)
@click.option("--output", "-o", default=None, help="Write edge list to a file.")
@click.pass_obj
def export(client: ServiceClient, window, bot_threshold, weights_path, output):
    """Export the project graph as a sorted tab-separated edge list."""
    response = client.request("POST", "/network/export",
                              _network_body(window, bot_threshold, weights_path))
    if output:
        Path(output).write_text(response.text)
        click.echo(f"wrote {output}", err=True)
    else:
        click.echo(response.text, nl=False)


@network.command()
@click.option("--window", required=True)
@click.option("--bot-threshold", default=200, type=int, show_default=True)
@click.option("--weights", "weights_path", default=None)
@click.pass_obj
def components(client: ServiceClient, window, bot_threshold, weights_path):
    """Connected components and giant-component share."""
    emit(client.post_json("/network/components",
                          _network_body(window, bot_threshold, weights_path)))


@network.command()
@click.option("--window", required=True)
@click.option("--project", required=True,
              help="Repo id or full name to find related projects for.")
@click.option("--k", default=10, type=int, show_default=True)
@click.option("--bot-threshold", default=200, type=int, show_default=True)
@click.option("--weights", "weights_path", default=None)
@click.pass_obj
def related(client: ServiceClient, window, project, k, bot_threshold, weights_path):
    """Most related projects by shared-contributor relatedness."""
    body = _network_body(window, bot_threshold, weights_path)
    body["project"] = int(project) if project.isdigit() else project
    body["k"] = k
    emit(client.post_json("/network/related", body))


@cli.command()
@click.option("--window", default=None, help="Compute end-to-end from the store.")
@click.option("--edges", "edges_path", default=None,
              help="Edge-list file, or - for stdin.")
@click.option("--damping", default=0.85, show_default=True)
@click.option("--tol", default=1e-8, show_default=True)
@click.option("--max-iter", default=100, show_default=True)
@click.option("--scale", default="times_n", type=click.Choice(["raw", "times_n"]),
              show_default=True)
@click.option("--bot-threshold", default=200, type=int, show_default=True)
@click.option("--limit", default=None, type=int)
@click.option("--weights", "weights_path", default=None)
@click.pass_obj
def influence(client: ServiceClient, window, edges_path, damping, tol, max_iter,
              scale, bot_threshold, limit, weights_path):
    """Project influence via weighted PageRank."""
    if window is None and edges_path is None:
        raise click.UsageError("give --window or --edges")
    edges_text = None
    if edges_path is not None:
        if edges_path == "-":
            edges_text = sys.stdin.read()
        else:
            try:
                edges_text = Path(edges_path).read_text()
            except OSError as exc:
                raise DataError(f"cannot read edge list {edges_path}: {exc}") from exc
    doc = client.post_json("/influence", {
        "window": window, "edgesText": edges_text,
        "damping": damping, "tolerance": tol, "maxIterations": max_iter,
        "scale": scale, "botThreshold": bot_threshold, "limit": limit,
        "weights": read_weights(weights_path),
    })
    emit(doc)


@cli.command()
@click.argument("name", required=False)
@click.option("--list", "list_all", is_flag=True, help="List available metrics.")
@click.option("--repo", default=None, help="Repo id or full name.")
@click.option("--window", default=None)
@click.option("--options", "options_json", default="{}",
              help="Metric-specific options as inline JSON.")
@click.pass_obj
def metric(client: ServiceClient, name, list_all, repo, window, options_json):
    """Compute one community-health metric for a repo and window."""
    if list_all:
        emit(client.get_json("/metrics"))
        return
    if not name:
        raise click.UsageError("give a metric name or --list")
    if repo is None or window is None:
        raise click.UsageError("--repo and --window are required")
    try:
        options = json.loads(options_json)
    except json.JSONDecodeError as exc:
        raise click.UsageError(f"bad --options JSON: {exc}")
    emit(client.post_json(f"/metrics/{name}", {
        "repo": int(repo) if repo.isdigit() else repo,
        "window": window, "options": options,
    }))


@cli.group()
def labels():
    """Label (entity-set) operations."""


@labels.command(name="list")
@click.pass_obj
def labels_list(client: ServiceClient):
    """List loaded labels."""
    emit(client.get_json("/labels"))


@labels.command(name="resolve")
@click.argument("ref")
@click.pass_obj
def labels_resolve(client: ServiceClient, ref):
    """Resolve a label id or type name to its entity sets."""
    emit(client.post_json("/labels/resolve", {"ref": ref}))


@labels.command(name="intersect")
@click.argument("refs", nargs=-1, required=True)
@click.pass_obj
def labels_intersect(client: ServiceClient, refs):
    """Per-axis intersection of resolved label refs."""
    emit(client.post_json("/labels/intersect", {"refs": list(refs)}))


@labels.command(name="union")
@click.argument("refs", nargs=-1, required=True)
@click.pass_obj
def labels_union(client: ServiceClient, refs):
    """Per-axis union of resolved label refs."""
    emit(client.post_json("/labels/union", {"refs": list(refs)}))


@cli.command()
@click.option("--file", "request_file", default=None,
              help="JSON file holding a full query request.")
@click.option("--metric", default=None)
@click.option("--startYear", "startYear", default=None, type=int)
@click.option("--endYear", "endYear", default=None, type=int)
@click.option("--startMonth", "startMonth", default=None, type=int)
@click.option("--endMonth", "endMonth", default=None, type=int)
@click.option("--repoIds", "repoIds", multiple=True, type=int)
@click.option("--repoNames", "repoNames", multiple=True)
@click.option("--orgIds", "orgIds", multiple=True, type=int)
@click.option("--orgNames", "orgNames", multiple=True)
@click.option("--userIds", "userIds", multiple=True, type=int)
@click.option("--userNames", "userNames", multiple=True)
@click.option("--labelUnion", "labelUnion", multiple=True)
@click.option("--labelIntersect", "labelIntersect", multiple=True)
@click.option("--order", default=None, type=click.Choice(["ASC", "DESC"]))
@click.option("--orderOption", "orderOption", default=None,
              type=click.Choice(["latest", "all"]))
@click.option("--limit", default=None, type=int)
@click.option("--limitOption", "limitOption", default=None,
              type=click.Choice(["all", "each"]))
@click.option("--groupBy", "groupBy", default=None)
@click.option("--groupTimeRange", "groupTimeRange", default=None,
              type=click.Choice(["year", "quarter", "month"]))
@click.option("--precision", default=None, type=int)
@click.option("--injectLabelData", "inject_path", default=None,
              help="JSON file with custom labels to inject.")
@click.option("--options", "options_json", default=None,
              help="Metric-specific options as inline JSON.")
@click.option("--format", "format_", default="json",
              type=click.Choice(["json", "csv"]), show_default=True)
@click.pass_obj
def query(client: ServiceClient, request_file, inject_path, options_json,
          format_, **flags):
    """Run a metric query; flags mirror the public parameter names."""
    body: dict = {}
    if request_file:
        try:
            body = json.loads(Path(request_file).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read query file {request_file}: {exc}") from exc
        if not isinstance(body, dict):
            raise DataError(f"query file {request_file} must hold a JSON object")
    for key, value in flags.items():
        if value is None or (isinstance(value, tuple) and not value):
            continue
        body[key] = list(value) if isinstance(value, tuple) else value
    if inject_path:
        try:
            body["injectLabelData"] = json.loads(Path(inject_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read label file {inject_path}: {exc}") from exc
    if options_json:
        try:
            body["options"] = json.loads(options_json)
        except json.JSONDecodeError as exc:
            raise click.UsageError(f"bad --options JSON: {exc}")
    if "metric" not in body:
        raise click.UsageError("give --metric or a --file with a metric")
    response = client.request("POST", "/query", body, params={"format": format_})
    sys.stdout.write(response.text)
    sys.stdout.flush()


def main(argv: Optional[list[str]] = None) -> int:
    """Entry point with the documented exit-code contract."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        exc.show(file=sys.stderr)
        return 1
    except click.ClickException as exc:
        exc.show(file=sys.stderr)
        return 1
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except DataError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
