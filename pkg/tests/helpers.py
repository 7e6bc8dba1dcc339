"""Shared test fixtures: independent brute-force oracles and graph generators.

Everything here is deliberately written from scratch (plain dict/BFS code) so
it stays independent of the package implementations it checks.
"""

from __future__ import annotations

import math
import random
from collections import deque

from pcnsim import ChannelGraph


def adjacency_of(edges, n):
    adj = {v: [] for v in range(n)}
    for u, v, _cap in edges:
        adj[u].append(v)
        adj[v].append(u)
    return adj


def bfs_dist(adj, source):
    dist = {source: 0}
    q = deque([source])
    while q:
        v = q.popleft()
        for w in adj[v]:
            if w not in dist:
                dist[w] = dist[v] + 1
                q.append(w)
    return dist


def enumerate_shortest_paths(edges, n, s, t):
    """All shortest s→t paths as node tuples, by exhaustive DFS over BFS layers."""
    adj = adjacency_of(edges, n)
    dist = bfs_dist(adj, s)
    if t not in dist:
        return []
    target_len = dist[t]
    out = []

    def extend(path):
        v = path[-1]
        if v == t:
            out.append(tuple(path))
            return
        for w in adj[v]:
            if dist.get(w, math.inf) == dist[v] + 1 and dist[w] <= target_len:
                extend(path + [w])

    extend([s])
    return [p for p in out if len(p) - 1 == target_len]


def brute_edge_betweenness(edges, n):
    """g(e) over unordered distinct pairs by explicit path enumeration."""
    index = {}
    for eid, (u, v, _cap) in enumerate(edges):
        index[(min(u, v), max(u, v))] = eid
    values = [0.0] * len(edges)
    for s in range(n):
        for t in range(s + 1, n):
            paths = enumerate_shortest_paths(edges, n, s, t)
            if not paths:
                continue
            frac = 1.0 / len(paths)
            for path in paths:
                for a, b in zip(path, path[1:]):
                    values[index[(min(a, b), max(a, b))]] += frac
    return values


def mean_pair_distance(edges, n):
    """Average hop distance over unordered distinct reachable pairs."""
    adj = adjacency_of(edges, n)
    total = 0
    for s in range(n):
        dist = bfs_dist(adj, s)
        total += sum(d for v, d in dist.items() if v > s)
    return total / (n * (n - 1) / 2)


def random_connected_edges(rng: random.Random, n, extra_prob=0.3, caps=(2, 4, 6, 8)):
    """Random spanning tree plus extra edges; random even capacities."""
    edges = []
    seen = set()
    nodes = list(range(n))
    rng.shuffle(nodes)
    for i in range(1, n):
        u = nodes[rng.randrange(i)]
        v = nodes[i]
        key = (min(u, v), max(u, v))
        seen.add(key)
        edges.append((key[0], key[1], rng.choice(caps)))
    for u in range(n):
        for v in range(u + 1, n):
            if (u, v) not in seen and rng.random() < extra_prob:
                seen.add((u, v))
                edges.append((u, v, rng.choice(caps)))
    return edges


def random_connected_graph(rng: random.Random, n, extra_prob=0.3, caps=(2, 4, 6, 8)):
    return ChannelGraph(n, random_connected_edges(rng, n, extra_prob, caps))


def small_world_edges(rng: random.Random, n, radius=2, rewire_prob=0.1):
    """Ring lattice with random rewiring; returns a connected simple edge set."""
    while True:
        seen = set()
        for i in range(n):
            for j in range(1, radius + 1):
                u, v = i, (i + j) % n
                key = (min(u, v), max(u, v))
                if key in seen:
                    continue
                if rng.random() < rewire_prob:
                    for _ in range(20):
                        w = rng.randrange(n)
                        cand = (min(i, w), max(i, w))
                        if w != i and cand not in seen:
                            key = cand
                            break
                seen.add(key)
        edges = sorted(seen)
        adj = adjacency_of([(u, v, 1) for u, v in edges], n)
        if len(bfs_dist(adj, 0)) == n:
            return edges


def log_uniform_capacities(rng: random.Random, count, lo=1000.0, hi=100000.0):
    caps = []
    for _ in range(count):
        c = math.exp(rng.uniform(math.log(lo), math.log(hi)))
        caps.append(max(2, 2 * int(c / 2)))  # even, at least 2
    return caps
