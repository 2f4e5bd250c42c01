from collections import deque

import numpy as np
import pytest

from toric_uf.circuit_sim import inject_fault
from toric_uf.errors import OddSyndromeError, TooManyEvents
from toric_uf.lattice import LatticeParams, enumerate_fault_sites
from toric_uf.matching_oracle import enumerate_pairings, exact_mwpm, match, pairing_weight, shortest_paths
from toric_uf.uf_decoder import decode

from conftest import graphs_for, sampler_for


def bfs_hops(graph, source):
    dist = np.full(graph.num_nodes, -1)
    dist[source] = 0
    adj = [[] for _ in range(graph.num_nodes)]
    for a, b in zip(graph.eu.tolist(), graph.ev.tolist()):
        adj[a].append(b)
        adj[b].append(a)
    q = deque([source])
    while q:
        v = q.popleft()
        for u in adj[v]:
            if dist[u] < 0:
                dist[u] = dist[v] + 1
                q.append(u)
    return dist


def test_distance_to_self_is_zero():
    g = graphs_for(3, 3, 0.001)[0]
    assert shortest_paths(g, 4).distance[4] == 0.0


def test_direct_edge_distance_and_path():
    g = graphs_for(3, 3, 0.001)[0]
    e = int(np.argmin(g.weight))
    a, b = int(g.eu[e]), int(g.ev[e])
    t = shortest_paths(g, a)
    assert t.distance[b] == pytest.approx(g.weight[e])
    assert t.path_to(b) == [e]


def test_unweighted_distance_equals_hop_count():
    g = graphs_for(3, 3, 0.001, "unweighted")[0]
    assert np.all(g.weight == g.weight[0])
    t = shortest_paths(g, 0)
    np.testing.assert_allclose(t.distance / g.weight[0], bfs_hops(g, 0))


def test_pairing_enumeration_counts():
    assert [len(list(enumerate_pairings(range(n)))) for n in (0, 2, 4, 6, 8)] == [1, 1, 3, 15, 105]


def test_two_events_use_shortest_path():
    g = graphs_for(3, 3, 0.001)[0]
    res = match(g, [0, 13])
    assert res.pairs == [(0, 13)]
    assert res.pairing_weight == pytest.approx(shortest_paths(g, 0).distance[13])
    assert res.correction.flips.tolist() == [0, 13]


def test_four_events_pick_the_cheapest_pairing():
    g = graphs_for(5, 5, 0.001)[0]
    events = [0, 2, 60, 87]
    res = match(g, events)
    alternatives = [pairing_weight(g, pr) for pr in enumerate_pairings(events)]
    assert res.pairing_weight == pytest.approx(min(alternatives))
    assert res.correction.flips.tolist() == sorted(events)


def test_empty_events():
    g = graphs_for(3, 3, 0.001)[0]
    c = exact_mwpm(g, [])
    assert len(c) == 0 and c.logical == 0


def test_odd_and_too_many_events():
    g = graphs_for(5, 5, 0.001)[0]
    with pytest.raises(OddSyndromeError):
        exact_mwpm(g, [1, 2, 3])
    with pytest.raises(TooManyEvents):
        exact_mwpm(g, list(range(14)))
    assert exact_mwpm(g, list(range(4)), max_events=4).flips.tolist() == [0, 1, 2, 3]
    with pytest.raises(TooManyEvents):
        exact_mwpm(g, list(range(6)), max_events=4)


def test_valid_and_no_heavier_than_union_find():
    d, p = 5, 0.004
    graphs = graphs_for(d, d, p)
    sampler = sampler_for(d, d, p)
    checked = 0
    for shot in range(300):
        ev_p, ev_d, _ = sampler.sample(11, shot)
        for g, ev in zip(graphs, (ev_p, ev_d)):
            if len(ev) > 10:
                continue
            res = match(g, ev)
            assert res.correction.flips.tolist() == [int(v) for v in ev]
            uf = decode(g, ev)
            assert res.pairing_weight <= float(np.sum(g.weight[uf.edges])) + 1e-9
            checked += 1
    assert checked > 100


def test_single_faults_corrected_at_d3():
    params = LatticeParams(3, 3, 0.005)
    primal, dual = graphs_for(3, 3, 0.005)
    for site in enumerate_fault_sites(params):
        rec = inject_fault(params, site)
        cp, cd = exact_mwpm(primal, rec.primal_indices()), exact_mwpm(dual, rec.dual_indices())
        assert cp.logical == rec.true_logical & 3
        assert cd.logical == rec.true_logical >> 2
