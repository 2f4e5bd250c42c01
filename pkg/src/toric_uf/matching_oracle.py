"""Exact minimum-weight perfect matching by exhaustive pairing.

Only practical for a handful of excitations (at most 12, i.e. 10395
pairings); used as an accuracy reference and test oracle for the
union-find decoder.
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .decoder_graph import DecoderGraph
from .errors import OddSyndromeError, TooManyEvents
from .uf_decoder import Correction, as_event_indices

MAX_EVENTS = 12


@dataclass(frozen=True, eq=False)
class DistanceTable:
    """Single-source shortest paths with predecessor edges."""

    source: int
    distance: np.ndarray
    pred_edge: np.ndarray  # -1 at the source and at unreachable nodes
    endpoint_xor: np.ndarray  # eu ^ ev per edge, for walking back along predecessors

    def path_to(self, target: int) -> list[int]:
        edges = []
        v = int(target)
        while v != self.source:
            e = int(self.pred_edge[v])
            if e < 0:
                raise ValueError(f"node {target} unreachable from {self.source}")
            edges.append(e)
            v = int(self.endpoint_xor[e] ^ v)
        return edges[::-1]


class _PathGraph:
    def __init__(self, graph: DecoderGraph):
        self.graph = graph
        n = graph.num_nodes
        w = np.asarray(graph.weight, dtype=np.float64)
        if np.any(w < 0):
            raise ValueError("shortest paths need nonnegative weights")
        rows = np.concatenate([graph.eu, graph.ev])
        cols = np.concatenate([graph.ev, graph.eu])
        # scipy drops explicit zeros; a tiny floor keeps zero-weight edges traversable
        data = np.maximum(np.concatenate([w, w]), 1e-300)
        self.matrix = csr_matrix((data, (rows, cols)), shape=(n, n))
        self.edge_of = {}
        for e, (a, b) in enumerate(zip(graph.eu.tolist(), graph.ev.tolist())):
            self.edge_of[(a, b)] = e
            self.edge_of[(b, a)] = e
        self.other = (graph.eu ^ graph.ev).astype(np.int64)

    def tables(self, sources) -> list[DistanceTable]:
        sources = [int(s) for s in sources]
        if not sources:
            return []
        dist, pred = dijkstra(self.matrix, directed=False, indices=sources, return_predecessors=True)
        out = []
        for k, s in enumerate(sources):
            pe = np.full(self.graph.num_nodes, -1, dtype=np.int64)
            ok = pred[k] >= 0
            nodes = np.flatnonzero(ok)
            pe[nodes] = [self.edge_of[(int(v), int(u))] for v, u in zip(nodes, pred[k][ok])]
            d = dist[k].copy()
            d[s] = 0.0
            out.append(DistanceTable(s, d, pe, self.other))
        return out


_cache: dict[int, _PathGraph] = {}


def _path_graph(graph: DecoderGraph) -> _PathGraph:
    pg = _cache.get(id(graph))
    if pg is None or pg.graph is not graph:
        pg = _cache[id(graph)] = _PathGraph(graph)
    return pg


def shortest_paths(graph: DecoderGraph, source: int) -> DistanceTable:
    return _path_graph(graph).tables([source])[0]


def enumerate_pairings(items):
    """All perfect pairings of ``items`` in lexicographic order."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for k, partner in enumerate(rest):
        for tail in enumerate_pairings(rest[:k] + rest[k + 1:]):
            yield [(first, partner)] + tail


def _best_pairing(dist: np.ndarray) -> tuple[list[tuple[int, int]], float]:
    """Exhaustive minimum over all pairings of ``range(len(dist))``; first minimum wins."""
    n = len(dist)
    best = [None, np.inf]
    chosen = []

    def rec(remaining, acc):
        if not remaining:
            if acc < best[1]:
                best[0], best[1] = list(chosen), acc
            return
        a = remaining[0]
        for k in range(1, len(remaining)):
            b = remaining[k]
            chosen.append((a, b))
            rec(remaining[1:k] + remaining[k + 1:], acc + dist[a, b])
            chosen.pop()

    rec(list(range(n)), 0.0)
    return best[0], best[1]


@dataclass(frozen=True, eq=False)
class MatchingResult:
    correction: Correction
    pairs: list
    pairing_weight: float


def exact_mwpm(graph: DecoderGraph, events, max_events: int = MAX_EVENTS) -> Correction:
    """Minimum-weight perfect matching correction for at most ``max_events`` events."""
    return match(graph, events, max_events).correction


def match(graph: DecoderGraph, events, max_events: int = MAX_EVENTS) -> MatchingResult:
    idx = as_event_indices(events, graph.num_nodes)
    k = len(idx)
    if k & 1:
        raise OddSyndromeError(f"{k} detection events")
    if k > max_events:
        raise TooManyEvents(f"{k} events exceed the exhaustive-matching cap of {max_events}")
    if k == 0:
        return MatchingResult(Correction.from_edges(graph, []), [], 0.0)
    tables = _path_graph(graph).tables(idx)
    dist = np.array([[t.distance[v] for v in idx] for t in tables])
    pairs, total = _best_pairing(dist)
    parity: dict[int, int] = {}
    node_pairs = []
    for a, b in pairs:
        node_pairs.append((int(idx[a]), int(idx[b])))
        for e in tables[a].path_to(idx[b]):
            parity[e] = parity.get(e, 0) ^ 1
    edges = [e for e, bit in parity.items() if bit]
    return MatchingResult(Correction.from_edges(graph, edges), node_pairs, float(total))


def distance_matrix(graph: DecoderGraph, events) -> np.ndarray:
    """Pairwise shortest-path distances between the given detectors."""
    idx = [int(v) for v in events]
    tables = _path_graph(graph).tables(idx)
    return np.array([[t.distance[v] for v in idx] for t in tables]).reshape(len(idx), len(idx))


def pairing_weight(graph: DecoderGraph, pairs) -> float:
    """Summed shortest-path distance of a pairing given as node pairs."""
    pg = _path_graph(graph)
    total = 0.0
    for a, b in pairs:
        total += float(pg.tables([a])[0].distance[b])
    return total
