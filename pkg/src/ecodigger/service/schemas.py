"""Request and response models for the service endpoints.

Query fields keep the public parameter names verbatim (camelCase), the
same spelling the CLI flags use.
"""

from __future__ import annotations

from typing import Any, Optional, Union

from pydantic import BaseModel, Field

from ..query import QueryRequest


class HealthResponse(BaseModel):
    status: str
    version: str


class IngestBody(BaseModel):
    paths: list[str] = Field(default_factory=list)
    glob: Optional[str] = None


class IngestResponse(BaseModel):
    report: dict
    store: dict


class ActivityBody(BaseModel):
    window: str
    scope: str = "developer"  # developer | developer_repo | repo
    repoIds: Optional[list[int]] = None
    limit: Optional[int] = None
    weights: Optional[dict[str, float]] = None


class ActivityRow(BaseModel):
    entity: dict
    window: str
    counts: dict[str, int]
    score: float


class ActivityResponse(BaseModel):
    rows: list[ActivityRow]


class NetworkBody(BaseModel):
    window: str
    botThreshold: int = 200
    weights: Optional[dict[str, float]] = None


class ComponentsResponse(BaseModel):
    total_nodes: int
    component_count: int
    giant_size: int
    giant_share: float
    removed_bots: list[int]
    sizes: list[int]


class RelatedBody(NetworkBody):
    project: Union[int, str]
    k: int = 10


class RelatedRow(BaseModel):
    project: int
    name: Optional[str] = None
    relatedness: float


class RelatedResponse(BaseModel):
    project: int
    rows: list[RelatedRow]


class InfluenceBody(BaseModel):
    window: Optional[str] = None
    edgesText: Optional[str] = None
    botThreshold: int = 200
    damping: float = 0.85
    tolerance: float = 1e-8
    maxIterations: int = 100
    scale: str = "times_n"
    limit: Optional[int] = None
    weights: Optional[dict[str, float]] = None


class InfluenceRow(BaseModel):
    project: int
    name: Optional[str] = None
    score: float
    rank: int


class InfluenceResponse(BaseModel):
    rows: list[InfluenceRow]
    iterations_used: int
    converged: bool
    scale_mode: str


class MetricBody(BaseModel):
    repo: Union[int, str]
    window: str
    options: dict = Field(default_factory=dict)


class MetricResponse(BaseModel):
    repo: int
    window: dict
    metric: str
    value: Any


class MetricListResponse(BaseModel):
    metrics: list[dict]


class LabelRefBody(BaseModel):
    ref: str


class LabelRefsBody(BaseModel):
    refs: list[str]


class EntitySetResponse(BaseModel):
    orgs: list[int]
    repos: list[int]
    users: list[int]


class LabelListResponse(BaseModel):
    labels: list[dict]


class QueryBody(BaseModel):
    metric: str
    startYear: int = 2015
    endYear: Optional[int] = None
    startMonth: int = 1
    endMonth: Optional[int] = None
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
    options: dict = Field(default_factory=dict)

    def to_core(self) -> QueryRequest:
        return QueryRequest(**self.model_dump())
