import io
import random
from collections import defaultdict

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecodigger.activity import ActivityRecord, BehaviorCounts
from ecodigger.errors import DataError, UnknownProjectError
from ecodigger.network import (BipartiteGraph, build_bipartite, connected_components,
                               edge_list_text, filter_bots, project_graph,
                               read_edge_list, top_related, write_edge_list)
from ecodigger.windows import TimeWindow

WINDOW = TimeWindow.months(2019, 3, 2019, 3)


def record(dev, repo, score):
    return ActivityRecord(developer_id=dev, repo_id=repo, window=WINDOW,
                          counts=BehaviorCounts(), score=score)


def bipartite(edges):
    return BipartiteGraph(
        dev_nodes=frozenset(d for d, _ in edges),
        proj_nodes=frozenset(p for _, p in edges),
        edges=dict(edges),
    )


def brute_force_projection(g):
    """Straight double loop over developer pairs of projects."""
    by_dev = defaultdict(dict)
    for (dev, proj), w in g.edges.items():
        by_dev[dev][proj] = w
    weights = defaultdict(float)
    for projects in by_dev.values():
        items = sorted(projects.items())
        for i in range(len(items)):
            for j in range(i + 1, len(items)):
                (p, a_p), (q, a_q) = items[i], items[j]
                weights[(p, q)] += a_p * a_q / (a_p + a_q)
    return {pair: w for pair, w in weights.items() if w > 0}


def test_worked_example():
    g = build_bipartite([record(1, 10, 1.0), record(1, 20, 7.0)])
    pg = project_graph(g)
    assert pg.edges == {(10, 20): pytest.approx(0.875, abs=0)}
    assert pg.weight(20, 10) == 0.875
    assert pg.weight(10, 10) is None


def test_build_bipartite_drops_zero_scores():
    g = build_bipartite([record(1, 10, 0.0), record(2, 10, 3.0)])
    assert g.dev_nodes == {2}
    assert g.proj_nodes == {10}
    assert g.edges == {(2, 10): 3.0}


def test_build_bipartite_merges_duplicate_keys():
    g = build_bipartite([record(1, 10, 2.0), record(1, 10, 3.0)])
    assert g.edges == {(1, 10): 5.0}


def test_bot_boundary():
    edges = {(1, p): 1.0 for p in range(201)}
    edges.update({(2, p): 1.0 for p in range(200)})
    g = bipartite(edges)
    filtered, removed = filter_bots(g)
    assert removed == {1}
    assert 2 in filtered.dev_nodes
    assert filtered.proj_nodes == g.proj_nodes  # project 200 stays, now isolated
    assert all(d == 2 for d, _ in filtered.edges)


def test_bot_threshold_validation():
    with pytest.raises(DataError):
        filter_bots(bipartite({(1, 10): 1.0}), threshold=-1)


def test_single_project_dev_immunity():
    base = bipartite({(1, 10): 2.0, (1, 20): 5.0, (2, 20): 1.0, (2, 30): 4.0})
    with_loner = bipartite({**base.edges, (99, 20): 100.0})
    assert project_graph(base).edges == project_graph(with_loner).edges


def test_projection_matches_brute_force_random():
    rng = random.Random(7)
    for _ in range(50):
        n_dev, n_proj = rng.randint(1, 12), rng.randint(1, 8)
        edges = {}
        for d in range(n_dev):
            for p in rng.sample(range(n_proj), rng.randint(0, n_proj)):
                edges[(d, p)] = rng.uniform(0.5, 20.0)
        g = bipartite(edges)
        got = project_graph(g).edges
        want = brute_force_projection(g)
        assert set(got) == set(want)
        for pair in want:
            assert got[pair] == pytest.approx(want[pair], abs=1e-12)


def test_projection_order_independence():
    edges = {(d, p): float(d + p + 1) for d in range(5) for p in range(4)}
    g1 = bipartite(edges)
    shuffled = list(edges.items())
    random.Random(3).shuffle(shuffled)
    g2 = bipartite(dict(shuffled))
    assert project_graph(g1).edges == project_graph(g2).edges


def bfs_components(pg):
    adj = pg.adjacency()
    seen, out = set(), []
    for start in sorted(adj):
        if start in seen:
            continue
        queue, comp = [start], set()
        while queue:
            node = queue.pop()
            if node in comp:
                continue
            comp.add(node)
            queue.extend(adj[node])
        seen |= comp
        out.append(frozenset(comp))
    return sorted(out, key=lambda c: (-len(c), min(c)))


def test_components_vs_bfs_random():
    rng = random.Random(11)
    for _ in range(30):
        n = rng.randint(1, 40)
        edges = {}
        for _ in range(rng.randint(0, 2 * n)):
            a, b = rng.sample(range(n), 2)
            edges[(min(a, b), max(a, b))] = rng.uniform(0.1, 5.0)
        from ecodigger.network import ProjectGraph
        pg = ProjectGraph(nodes=frozenset(range(n)), edges=edges)
        report = connected_components(pg)
        assert [c.nodes for c in report.components] == bfs_components(pg)
        assert report.total_nodes == n
        assert report.giant_size == max(len(c.nodes) for c in report.components)
        assert report.giant_share == pytest.approx(report.giant_size / n)


def test_components_counts_isolated_nodes():
    from ecodigger.network import ProjectGraph
    pg = ProjectGraph(nodes=frozenset({1, 2, 3}), edges={(1, 2): 1.0})
    report = connected_components(pg)
    assert [set(c.nodes) for c in report.components] == [{1, 2}, {3}]
    assert report.giant_share == pytest.approx(2 / 3)


def test_top_related():
    g = bipartite({(1, 10): 1.0, (1, 20): 7.0, (2, 10): 2.0, (2, 30): 2.0})
    pg = project_graph(g)
    got = top_related(pg, 10, k=5)
    assert got == [(30, 1.0), (20, 0.875)]
    assert top_related(pg, 10, k=1) == [(30, 1.0)]
    with pytest.raises(UnknownProjectError):
        top_related(pg, 999)
    with pytest.raises(DataError):
        top_related(pg, 10, k=-1)


def test_top_related_tie_breaks_by_id():
    from ecodigger.network import ProjectGraph
    pg = ProjectGraph(nodes=frozenset({1, 2, 3}), edges={(1, 2): 0.5, (1, 3): 0.5})
    assert top_related(pg, 1, k=5) == [(2, 0.5), (3, 0.5)]


def test_edge_list_round_trip():
    g = bipartite({(1, 10): 1.0, (1, 20): 7.0, (2, 30): 3.0})
    pg = project_graph(g)
    buf = io.StringIO()
    write_edge_list(pg, buf)
    text = buf.getvalue()
    assert text == edge_list_text(pg)
    assert "# isolated\t30" in text
    back = read_edge_list(io.StringIO(text))
    assert back.nodes == pg.nodes
    assert back.edges == pg.edges


def test_read_edge_list_rejects_bad_lines():
    for bad in ("10\t20", "10\t20\tx", "10\t10\t1.0", "10\t20\t0.0", "10\t20\t-1.0"):
        with pytest.raises(DataError):
            read_edge_list(io.StringIO(bad + "\n"))


@given(st.dictionaries(
    st.tuples(st.integers(0, 6), st.integers(100, 105)),
    st.floats(min_value=0.25, max_value=32.0, allow_nan=False),
    min_size=1, max_size=20,
))
@settings(max_examples=60, deadline=None)
def test_projection_weight_conservation(edges):
    """Every projected weight is positive and bounded by min(a_p, a_q) summed."""
    g = bipartite(edges)
    pg = project_graph(g)
    by_dev = defaultdict(dict)
    for (dev, proj), w in g.edges.items():
        by_dev[dev][proj] = w
    for (p, q), w in pg.edges.items():
        bound = sum(min(projects[p], projects[q])
                    for projects in by_dev.values()
                    if p in projects and q in projects)
        assert 0 < w <= bound + 1e-9
