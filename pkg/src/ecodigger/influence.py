"""Project influence via weighted PageRank over the project graph.

Each undirected relatedness edge acts as two directed edges of equal
weight. A node's outgoing mass is split proportionally to edge weights
rather than uniformly; nodes without edges are dangling and spread their
mass over all nodes. Scores are computed by power iteration with an L1
stopping rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .errors import DataError
from .network import ProjectGraph

SCALE_MODES = ("raw", "times_n")


@dataclass(frozen=True)
class WprConfig:
    damping: float = 0.85
    tolerance: float = 1e-8
    max_iterations: int = 100
    scale_mode: str = "times_n"

    def __post_init__(self):
        if not 0 < self.damping < 1:
            raise DataError(f"damping must be in (0, 1), got {self.damping}")
        if self.tolerance <= 0:
            raise DataError(f"tolerance must be > 0, got {self.tolerance}")
        if self.max_iterations < 1:
            raise DataError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.scale_mode not in SCALE_MODES:
            raise DataError(f"scale_mode must be one of {SCALE_MODES}, got {self.scale_mode!r}")


@dataclass(frozen=True)
class InfluenceScores:
    scores: dict[int, float]
    iterations_used: int
    converged: bool
    scale_mode: str = "times_n"


def weighted_pagerank(pg: ProjectGraph, cfg: WprConfig = WprConfig()) -> InfluenceScores:
    """Power-iterate s'(u) = (1-d)/N + d*(weighted in-mass + dangling share).

    Per-node sums use math.fsum so results do not depend on neighbor
    iteration order.
    """
    nodes = sorted(pg.nodes)
    n = len(nodes)
    if n == 0:
        return InfluenceScores(scores={}, iterations_used=0, converged=True,
                               scale_mode=cfg.scale_mode)

    adj = pg.adjacency()
    w_out = {u: math.fsum(adj[u].values()) for u in nodes}
    dangling = [u for u in nodes if not adj[u]]

    d = cfg.damping
    base = (1.0 - d) / n
    scores = {u: 1.0 / n for u in nodes}
    iterations = 0
    converged = False
    for iterations in range(1, cfg.max_iterations + 1):
        dangling_mass = math.fsum(scores[u] for u in dangling)
        nxt = {}
        for u in nodes:
            in_mass = math.fsum(scores[v] * w / w_out[v] for v, w in adj[u].items())
            nxt[u] = base + d * (in_mass + dangling_mass / n)
        delta = math.fsum(abs(nxt[u] - scores[u]) for u in nodes)
        scores = nxt
        if delta < cfg.tolerance:
            converged = True
            break

    if cfg.scale_mode == "times_n":
        scores = {u: s * n for u, s in scores.items()}
    return InfluenceScores(scores=scores, iterations_used=iterations,
                           converged=converged, scale_mode=cfg.scale_mode)


def rank_influence(scores: InfluenceScores,
                   limit: Optional[int] = None) -> list[tuple[int, float]]:
    """Projects by descending score, ties by ascending id."""
    ranked = sorted(scores.scores.items(), key=lambda item: (-item[1], item[0]))
    if limit is not None:
        if limit < 0:
            raise DataError(f"limit must be >= 0, got {limit}")
        ranked = ranked[:limit]
    return ranked
