"""Shortest-path DAGs, uniform shortest-path sampling, exact edge betweenness."""

from __future__ import annotations

import math
from collections import OrderedDict, deque
from dataclasses import dataclass

from .graph import ChannelGraph
from .rng import Rng

INF = math.inf


@dataclass
class ShortestPathDag:
    """Single-source BFS result on hop distances.

    ``sigma[w]`` counts all distinct shortest source→w paths (exact, unbounded
    Python ints); ``preds[w]`` lists exactly the neighbors of w at distance
    ``dist[w] - 1``.  Unreachable nodes carry ``dist = inf`` and ``sigma = 0``.
    """

    source: int
    dist: list
    sigma: list[int]
    preds: list[list[int]]


def sssp_dag(g: ChannelGraph, source: int) -> ShortestPathDag:
    if not (0 <= source < g.node_count):
        raise ValueError(f"source {source} outside [0,{g.node_count})")
    n = g.node_count
    dist = [INF] * n
    sigma = [0] * n
    preds: list[list[int]] = [[] for _ in range(n)]
    dist[source] = 0
    sigma[source] = 1
    q = deque([source])
    adjacency = g.adjacency
    while q:
        v = q.popleft()
        nd = dist[v] + 1
        sv = sigma[v]
        for w, _eid in adjacency[v]:
            dw = dist[w]
            if dw > nd:  # only INF can exceed nd in BFS order
                dist[w] = nd
                sigma[w] = sv
                preds[w] = [v]
                q.append(w)
            elif dw == nd:
                sigma[w] += sv
                preds[w].append(v)
    return ShortestPathDag(source=source, dist=dist, sigma=sigma, preds=preds)


def sample_shortest_path(dag: ShortestPathDag, target: int, rng: Rng) -> list[int]:
    """One shortest source→target path, exactly uniform over all of them.

    Walks backward from the target choosing predecessor p with probability
    sigma(p) / sigma(current); the product telescopes to 1/sigma(target), so
    every shortest path is equally likely.  Integer draws are exact.
    """
    if target == dag.source:
        raise ValueError("target equals source")
    if target < 0 or target >= len(dag.sigma) or dag.sigma[target] == 0:
        raise ValueError(f"target {target} unreachable from source {dag.source}")
    sigma = dag.sigma
    preds = dag.preds
    path = [target]
    node = target
    src = dag.source
    while node != src:
        ps = preds[node]
        if len(ps) == 1:
            node = ps[0]
        else:
            r = rng.randrange(sigma[node])
            acc = 0
            for p in ps:
                acc += sigma[p]
                if r < acc:
                    node = p
                    break
        path.append(node)
    path.reverse()
    return path


@dataclass
class BetweennessMap:
    """Exact edge-betweenness g(e) over unordered distinct node pairs."""

    values: list[float]

    def __getitem__(self, eid: int) -> float:
        return self.values[eid]

    def __len__(self) -> int:
        return len(self.values)


def edge_betweenness(g: ChannelGraph) -> BetweennessMap:
    """Brandes-style dependency accumulation from every source.

    Each unordered pair {s,t} contributes sigma(s,t|e)/sigma(s,t) once;
    disconnected pairs contribute nothing.
    """
    n = g.node_count
    acc = [0.0] * g.edge_count
    adjacency = g.adjacency
    for s in range(n):
        dist = [INF] * n
        sigma = [0] * n
        pred_edges: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        dist[s] = 0
        sigma[s] = 1
        order: list[int] = []
        q = deque([s])
        while q:
            v = q.popleft()
            order.append(v)
            nd = dist[v] + 1
            sv = sigma[v]
            for w, eid in adjacency[v]:
                dw = dist[w]
                if dw > nd:
                    dist[w] = nd
                    sigma[w] = sv
                    pred_edges[w] = [(v, eid)]
                    q.append(w)
                elif dw == nd:
                    sigma[w] += sv
                    pred_edges[w].append((v, eid))
        delta = [0.0] * n
        for w in reversed(order):
            coeff = (1.0 + delta[w]) / sigma[w]
            for v, eid in pred_edges[w]:
                c = sigma[v] * coeff
                acc[eid] += c
                delta[v] += c
    # every unordered pair was counted from both endpoints
    return BetweennessMap([x / 2.0 for x in acc])


def edge_selection_probability(g: ChannelGraph, bmap: BetweennessMap, eid: int) -> float:
    """Probability that edge eid lies on one uniformly sampled payment path."""
    n = g.node_count
    return 2.0 * bmap.values[eid] / (n * (n - 1))


class DagCache:
    """Bounded LRU cache of per-source BFS DAGs.

    Topology never changes during a campaign, so cached DAGs stay valid; the
    cache only trades memory for speed and cannot alter sampling distribution.
    Not thread-safe: one instance per worker.
    """

    def __init__(self, g: ChannelGraph, max_sources: int | None = None):
        if max_sources is None:
            # every source fits comfortably on small graphs; snapshots get LRU
            max_sources = g.node_count if g.node_count <= 2048 else 256
        if max_sources < 1:
            raise ValueError("max_sources must be >= 1")
        self._g = g
        self._max = max_sources
        self._dags: OrderedDict[int, ShortestPathDag] = OrderedDict()
        self.misses = 0

    def get(self, source: int) -> ShortestPathDag:
        dag = self._dags.get(source)
        if dag is None:
            self.misses += 1
            dag = sssp_dag(self._g, source)
            if len(self._dags) >= self._max:
                self._dags.popitem(last=False)
            self._dags[source] = dag
        else:
            self._dags.move_to_end(source)
        return dag


def betweenness_rows(g: ChannelGraph, bmap: BetweennessMap):
    """Rows for the betweenness CSV export (see results.write_csv)."""
    n = g.node_count
    norm = 2.0 / (n * (n - 1))
    for eid in range(g.edge_count):
        yield (eid, g.edge_u[eid], g.edge_v[eid], g.capacity[eid],
               bmap.values[eid], norm * bmap.values[eid])


BETWEENNESS_COLUMNS = ["edge_id", "u", "v", "capacity", "betweenness",
                       "selection_probability"]
