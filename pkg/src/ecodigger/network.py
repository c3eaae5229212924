"""Developer-project collaboration network and its project projection.

The heterogeneous network is reduced in two steps: every dev-project edge
type collapses into a single Active edge weighted by the developer's
activity score, then developer nodes are eliminated by converting shared
activity into project-project relatedness. For one developer with scores
a_p and a_q on two projects, their contribution to the pair is
a_p*a_q/(a_p+a_q); a developer active in a single project contributes
nothing, which is what makes the relatedness immune to self-inflation.

Bot accounts are filtered structurally: any developer active in more than
`threshold` distinct projects in the window is removed before projection.
Filtering first is also what keeps the per-developer pair enumeration
(deg^2 terms) tractable.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Optional, TextIO, Union

from .activity import ActivityRecord
from .errors import DataError, UnknownProjectError


@dataclass(frozen=True)
class BipartiteGraph:
    dev_nodes: frozenset[int]
    proj_nodes: frozenset[int]
    edges: dict[tuple[int, int], float]  # (developer, project) -> weight > 0

    def dev_projects(self, dev: int) -> dict[int, float]:
        return {p: w for (d, p), w in self.edges.items() if d == dev}

    def degree(self, dev: int) -> int:
        return sum(1 for (d, _p) in self.edges if d == dev)


def build_bipartite(records: Iterable[ActivityRecord]) -> BipartiteGraph:
    """One Active edge per (developer, project) with positive score.

    Zero-score records produce no edge; nodes are edge endpoints only.
    """
    edges: dict[tuple[int, int], float] = {}
    for record in records:
        if record.score <= 0:
            continue
        key = (record.developer_id, record.repo_id)
        edges[key] = edges.get(key, 0.0) + record.score
    return BipartiteGraph(
        dev_nodes=frozenset(d for d, _ in edges),
        proj_nodes=frozenset(p for _, p in edges),
        edges=edges,
    )


def filter_bots(g: BipartiteGraph, threshold: int = 200) -> tuple[BipartiteGraph, set[int]]:
    """Drop developers active in strictly more than `threshold` projects.

    Projects left edgeless stay in proj_nodes as isolated nodes; they
    re-enter influence computation as dangling nodes.
    """
    if threshold < 0:
        raise DataError(f"bot threshold must be >= 0, got {threshold}")
    degree: dict[int, int] = defaultdict(int)
    for dev, _proj in g.edges:
        degree[dev] += 1
    removed = {dev for dev, deg in degree.items() if deg > threshold}
    if not removed:
        return g, set()
    edges = {(d, p): w for (d, p), w in g.edges.items() if d not in removed}
    return BipartiteGraph(
        dev_nodes=frozenset(g.dev_nodes - removed),
        proj_nodes=g.proj_nodes,
        edges=edges,
    ), removed


@dataclass(frozen=True)
class ProjectGraph:
    nodes: frozenset[int]
    edges: dict[tuple[int, int], float]  # (a, b) with a < b -> relatedness > 0

    def weight(self, p: int, q: int) -> Optional[float]:
        if p == q:
            return None
        return self.edges.get((p, q) if p < q else (q, p))

    def neighbors(self, p: int) -> dict[int, float]:
        out: dict[int, float] = {}
        for (a, b), w in self.edges.items():
            if a == p:
                out[b] = w
            elif b == p:
                out[a] = w
        return out

    def adjacency(self) -> dict[int, dict[int, float]]:
        adj: dict[int, dict[int, float]] = {n: {} for n in self.nodes}
        for (a, b), w in self.edges.items():
            adj[a][b] = w
            adj[b][a] = w
        return adj


def project_graph(g: BipartiteGraph) -> ProjectGraph:
    """Eliminate developer nodes, keeping pairwise relatedness.

    The caller is expected to have bot-filtered g first. Per-pair terms
    are reduced with math.fsum so the result does not depend on developer
    iteration order.
    """
    by_dev: dict[int, list[tuple[int, float]]] = defaultdict(list)
    for (dev, proj), w in g.edges.items():
        by_dev[dev].append((proj, w))
    terms: dict[tuple[int, int], list[float]] = defaultdict(list)
    for dev in sorted(by_dev):
        projects = sorted(by_dev[dev])
        for (p, a_p), (q, a_q) in combinations(projects, 2):
            denom = a_p + a_q
            if denom > 0:
                terms[(p, q)].append(a_p * a_q / denom)
    edges = {pair: math.fsum(parts) for pair, parts in terms.items()}
    edges = {pair: w for pair, w in edges.items() if w > 0}
    return ProjectGraph(nodes=g.proj_nodes, edges=edges)


@dataclass(frozen=True)
class Component:
    nodes: frozenset[int]

    @property
    def size(self) -> int:
        return len(self.nodes)


@dataclass(frozen=True)
class ComponentReport:
    components: tuple[Component, ...]
    total_nodes: int
    giant_size: int = field(init=False)
    giant_share: float = field(init=False)

    def __post_init__(self):
        giant = self.components[0].size if self.components else 0
        object.__setattr__(self, "giant_size", giant)
        share = giant / self.total_nodes if self.total_nodes else 0.0
        object.__setattr__(self, "giant_share", share)


class _UnionFind:
    def __init__(self, items: Iterable[int]):
        self.parent = {x: x for x in items}
        self.rank = {x: 0 for x in self.parent}

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1


def connected_components(pg: ProjectGraph) -> ComponentReport:
    """Union-find components, largest first; isolated nodes are size-1.

    Mutual directed edges make strong connectivity coincide with the
    undirected notion, so union-find suffices. Ties in size break by
    smallest member id for a deterministic order.
    """
    uf = _UnionFind(pg.nodes)
    for a, b in pg.edges:
        uf.union(a, b)
    groups: dict[int, set[int]] = defaultdict(set)
    for node in pg.nodes:
        groups[uf.find(node)].add(node)
    components = sorted((frozenset(g) for g in groups.values()),
                        key=lambda c: (-len(c), min(c)))
    return ComponentReport(
        components=tuple(Component(c) for c in components),
        total_nodes=len(pg.nodes),
    )


def top_related(pg: ProjectGraph, p: int, k: int = 10) -> list[tuple[int, float]]:
    """p's neighbors by descending relatedness, ties by ascending id."""
    if p not in pg.nodes:
        raise UnknownProjectError(f"project {p} is not in the graph")
    if k < 0:
        raise DataError(f"k must be >= 0, got {k}")
    ranked = sorted(pg.neighbors(p).items(), key=lambda item: (-item[1], item[0]))
    return ranked[:k]


def write_edge_list(pg: ProjectGraph, out: TextIO):
    """Sorted `a<TAB>b<TAB>R` lines; isolated nodes as `# isolated` headers."""
    isolated = pg.nodes - {n for pair in pg.edges for n in pair}
    for node in sorted(isolated):
        out.write(f"# isolated\t{node}\n")
    for (a, b) in sorted(pg.edges):
        out.write(f"{a}\t{b}\t{pg.edges[(a, b)]!r}\n")


def edge_list_text(pg: ProjectGraph) -> str:
    import io

    buf = io.StringIO()
    write_edge_list(pg, buf)
    return buf.getvalue()


def read_edge_list(lines: Union[TextIO, Iterable[str]]) -> ProjectGraph:
    """Inverse of write_edge_list; raises DataError on malformed lines."""
    nodes: set[int] = set()
    edges: dict[tuple[int, int], float] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line.split("\t")
            if len(parts) == 2 and parts[0] == "# isolated":
                try:
                    nodes.add(int(parts[1]))
                except ValueError as exc:
                    raise DataError(f"edge list line {lineno}: bad node id") from exc
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise DataError(f"edge list line {lineno}: expected 3 tab-separated fields")
        try:
            a, b, w = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError as exc:
            raise DataError(f"edge list line {lineno}: {exc}") from exc
        if a == b:
            raise DataError(f"edge list line {lineno}: self-loop {a}")
        if w <= 0:
            raise DataError(f"edge list line {lineno}: non-positive weight {w}")
        pair = (a, b) if a < b else (b, a)
        edges[pair] = w
        nodes.update(pair)
    return ProjectGraph(nodes=frozenset(nodes), edges=edges)
