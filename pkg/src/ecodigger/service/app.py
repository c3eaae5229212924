"""FastAPI application exposing the mining pipeline.

Every endpoint re-opens the store from disk, so ingests are visible to
later requests without shared mutable state. Unknown entities map to 404,
bad data or parameters to 422.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Optional, Union

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse, PlainTextResponse, Response

from .. import __version__
from ..activity import DEFAULT_WEIGHTS, BehaviorCounts, BehaviorWeights, \
    activity_records, rank_developers
from ..errors import DataError, EcodiggerError, UnknownLabelError, UnknownMetricError, \
    UnknownProjectError
from ..events import IngestReport, expand_archive_args, read_archives
from ..influence import InfluenceScores, WprConfig, rank_influence, weighted_pagerank
from ..labels import LabelStore, label_intersect, label_union, load_labels, resolve
from ..metrics import REGISTRY, compute_metric
from ..network import ProjectGraph, build_bipartite, connected_components, edge_list_text, \
    filter_bots, project_graph, read_edge_list, top_related
from ..query import render, run_query
from ..store import EventStore
from ..windows import TimeWindow
from . import schemas

DATA_DIR_ENV = "ECODIGGER_DATA_DIR"
LABELS_DIR_ENV = "ECODIGGER_LABELS_DIR"


def create_app(data_dir: Optional[Union[str, Path]] = None,
               labels_dir: Optional[Union[str, Path]] = None) -> FastAPI:
    app = FastAPI(title="ecodigger", version=__version__)
    app.state.data_dir = Path(data_dir or os.environ.get(DATA_DIR_ENV, "data"))
    app.state.labels_dir = Path(labels_dir) if labels_dir else (
        Path(os.environ[LABELS_DIR_ENV]) if LABELS_DIR_ENV in os.environ else None)

    def store() -> EventStore:
        return EventStore(app.state.data_dir)

    def labels() -> LabelStore:
        root = app.state.labels_dir
        if root is None or not Path(root).is_dir():
            return LabelStore([])
        return load_labels(root)

    def weights_of(raw: Optional[dict]) -> BehaviorWeights:
        return BehaviorWeights.from_dict(raw) if raw else DEFAULT_WEIGHTS

    def graph_for(window: TimeWindow, threshold: int,
                  weights: BehaviorWeights) -> tuple[ProjectGraph, set[int]]:
        records = activity_records(store().iter_events(window=window), window, weights)
        bipartite, removed = filter_bots(build_bipartite(records), threshold)
        return project_graph(bipartite), removed

    def repo_ref_to_id(st: EventStore, ref: Union[int, str]) -> int:
        if isinstance(ref, int):
            return ref
        found = st.repo_id_by_name(ref)
        if found is None:
            raise UnknownProjectError(f"unknown repo name {ref!r}")
        return found

    @app.exception_handler(EcodiggerError)
    async def on_error(request: Request, exc: EcodiggerError):
        status = 404 if isinstance(
            exc, (UnknownProjectError, UnknownMetricError, UnknownLabelError)) else 422
        return JSONResponse(status_code=status, content={"detail": str(exc)})

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/ingest", response_model=schemas.IngestResponse)
    def ingest(body: schemas.IngestBody):
        archives = expand_archive_args(body.paths, body.glob)
        if not archives:
            raise DataError("no archive files matched")
        report = IngestReport()
        result = store().ingest(read_archives(archives, report))
        return schemas.IngestResponse(report=report.to_jsonable(),
                                      store=result.to_jsonable())

    @app.post("/activity", response_model=schemas.ActivityResponse)
    def activity_endpoint(body: schemas.ActivityBody):
        window = TimeWindow.parse(body.window)
        st = store()
        events = st.iter_events(window=window, repo_ids=body.repoIds)
        records = activity_records(events, window, weights_of(body.weights))
        rows = []
        if body.scope == "developer":
            for rank in rank_developers(records, body.limit):
                rows.append(schemas.ActivityRow(
                    entity={"developer": rank.developer_id,
                            "login": st.user_name(rank.developer_id)},
                    window=body.window, counts=rank.counts.as_dict(),
                    score=rank.score))
        elif body.scope == "developer_repo":
            records = records if body.limit is None else records[:body.limit]
            for r in records:
                rows.append(schemas.ActivityRow(
                    entity={"developer": r.developer_id, "repo": r.repo_id},
                    window=body.window, counts=r.counts.as_dict(), score=r.score))
        elif body.scope == "repo":
            by_repo: dict[int, list] = {}
            for r in records:
                by_repo.setdefault(r.repo_id, []).append(r)
            ranked = sorted(((sum(r.score for r in rs), repo)
                             for repo, rs in by_repo.items()),
                            key=lambda t: (-t[0], t[1]))
            if body.limit is not None:
                ranked = ranked[:body.limit]
            for score, repo in ranked:
                counts = sum((r.counts for r in by_repo[repo]), start=BehaviorCounts())
                rows.append(schemas.ActivityRow(
                    entity={"repo": repo, "name": st.repo_name(repo)},
                    window=body.window, counts=counts.as_dict(), score=score))
        else:
            raise DataError(f"unknown scope {body.scope!r}")
        return schemas.ActivityResponse(rows=rows)

    @app.post("/network/export")
    def network_export(body: schemas.NetworkBody):
        window = TimeWindow.parse(body.window)
        pg, _removed = graph_for(window, body.botThreshold, weights_of(body.weights))
        return PlainTextResponse(edge_list_text(pg))

    @app.post("/network/components", response_model=schemas.ComponentsResponse)
    def network_components(body: schemas.NetworkBody):
        window = TimeWindow.parse(body.window)
        pg, removed = graph_for(window, body.botThreshold, weights_of(body.weights))
        report = connected_components(pg)
        return schemas.ComponentsResponse(
            total_nodes=report.total_nodes,
            component_count=len(report.components),
            giant_size=report.giant_size,
            giant_share=report.giant_share,
            removed_bots=sorted(removed),
            sizes=[c.size for c in report.components],
        )

    @app.post("/network/related", response_model=schemas.RelatedResponse)
    def network_related(body: schemas.RelatedBody):
        window = TimeWindow.parse(body.window)
        st = store()
        project = repo_ref_to_id(st, body.project)
        pg, _removed = graph_for(window, body.botThreshold, weights_of(body.weights))
        rows = [schemas.RelatedRow(project=neighbor, name=st.repo_name(neighbor),
                                   relatedness=r)
                for neighbor, r in top_related(pg, project, body.k)]
        return schemas.RelatedResponse(project=project, rows=rows)

    @app.post("/influence", response_model=schemas.InfluenceResponse)
    def influence_endpoint(body: schemas.InfluenceBody):
        cfg = WprConfig(damping=body.damping, tolerance=body.tolerance,
                        max_iterations=body.maxIterations, scale_mode=body.scale)
        if body.edgesText is not None:
            pg = read_edge_list(body.edgesText.splitlines())
            names = {}
        elif body.window is not None:
            window = TimeWindow.parse(body.window)
            pg, _removed = graph_for(window, body.botThreshold,
                                     weights_of(body.weights))
            st = store()
            names = {node: st.repo_name(node) for node in pg.nodes}
        else:
            raise DataError("influence needs either a window or edgesText")
        scores: InfluenceScores = weighted_pagerank(pg, cfg)
        rows = [schemas.InfluenceRow(project=node, name=names.get(node),
                                     score=score, rank=i + 1)
                for i, (node, score) in enumerate(rank_influence(scores, body.limit))]
        return schemas.InfluenceResponse(rows=rows,
                                         iterations_used=scores.iterations_used,
                                         converged=scores.converged,
                                         scale_mode=scores.scale_mode)

    @app.get("/metrics", response_model=schemas.MetricListResponse)
    def metric_list():
        return schemas.MetricListResponse(metrics=[
            {"name": spec.name, "kind": spec.kind, "description": spec.description}
            for spec in REGISTRY.values()
        ])

    @app.post("/metrics/{name}", response_model=schemas.MetricResponse)
    def metric_endpoint(name: str, body: schemas.MetricBody):
        st = store()
        repo = repo_ref_to_id(st, body.repo)
        window = TimeWindow.parse(body.window)
        events = st.iter_events(repo_ids=[repo])
        result = compute_metric(name, events, window, body.options)
        doc = result.to_jsonable()
        doc["repo"] = repo  # stable even when the repo has no events yet
        return schemas.MetricResponse(**doc)

    @app.get("/labels", response_model=schemas.LabelListResponse)
    def label_list():
        st = labels()
        return schemas.LabelListResponse(labels=[
            {"id": label.id, "name": label.name, "type": label.type}
            for _id, label in sorted(st.labels.items())
        ])

    @app.post("/labels/resolve", response_model=schemas.EntitySetResponse)
    def labels_resolve(body: schemas.LabelRefBody):
        return schemas.EntitySetResponse(**resolve(labels(), body.ref).to_jsonable())

    @app.post("/labels/intersect", response_model=schemas.EntitySetResponse)
    def labels_intersect(body: schemas.LabelRefsBody):
        return schemas.EntitySetResponse(
            **label_intersect(labels(), body.refs).to_jsonable())

    @app.post("/labels/union", response_model=schemas.EntitySetResponse)
    def labels_union(body: schemas.LabelRefsBody):
        return schemas.EntitySetResponse(
            **label_union(labels(), body.refs).to_jsonable())

    @app.post("/query")
    def query_endpoint(body: schemas.QueryBody,
                       format: str = Query("json", pattern="^(json|csv)$")):
        request = body.to_core()
        table = run_query(request, store(), labels())
        payload = render(table, format=format, precision=request.precision)
        media = "application/json" if format == "json" else "text/csv"
        return Response(content=payload, media_type=media)

    return app
