import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from toric_uf import _backend, _fallback
from toric_uf.circuit_sim import inject_fault
from toric_uf.decoder_graph import DecoderGraph, WeightMode
from toric_uf.errors import NonTerminationGuard, OddSyndromeError, ParityError
from toric_uf.lattice import LatticeParams, enumerate_fault_sites
from toric_uf.uf_decoder import ClusterForest, Erasure, UnionFindDecoder, decode, make_kernel, peel

from conftest import BACKENDS, graphs_for, sampler_for, table_for

TRUNC1 = WeightMode.truncated(1.0)


def graph(n, edges, weights, mode=TRUNC1):
    return DecoderGraph.from_edges(n, edges, weights, mode)


def fallback_kernel(g):
    return make_kernel(g, "python")


# hand-built graphs ---------------------------------------------------------

def test_four_node_cheapest_edge(backend):
    g = graph(4, [(0, 1), (1, 2), (2, 3), (3, 0)], [1.0, 3.0, 3.0, 3.0], WeightMode.weighted())
    corr = decode(g, [0, 1], backend)
    assert list(corr.edges) == [0]
    assert list(corr.flips) == [0, 1]
    assert corr.growth_steps == 1


def test_six_node_trace():
    # events 0, 1 share an edge of weight 2; every other edge is >= 3
    edges = [(0, 1), (0, 2), (0, 3), (1, 4), (1, 5), (2, 3)]
    g = graph(6, edges, [2.0, 3.0, 4.0, 3.0, 5.0, 3.0])
    k = fallback_kernel(g)
    grown = k.validate([0, 1])
    # cluster 0 (lower root, equal boundary size) grows first by w_min = 2
    assert grown == [0]
    assert k.steps == 1
    assert k.remaining == [0, 1, 2, 3, 5, 3]
    f = k.forest
    assert f.find(0) == f.find(1)
    assert f.parity[f.find(0)] == 0


def test_corner_event_growth():
    # centre 0; cardinal neighbours 1 (north), 2 (west), 3 (up) at weight 4;
    # diagonal neighbours 4, 5 at weight 5; the partner event 9 has a long
    # boundary list so the centre cluster is always selected first
    edges = [(0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (1, 6), (2, 7), (3, 8), (4, 9), (5, 9), (6, 7)]
    w = [4.0, 4.0, 4.0, 5.0, 5.0, 4.0, 4.0, 5.0, 4.0, 4.0, 4.0]
    edges += [(9, v) for v in range(10, 24)]
    w += [4.0] * 14
    g = graph(24, edges, w)
    k = fallback_kernel(g)
    k.validate([0, 9], max_steps=1)
    f = k.forest
    assert [f.find(v) == f.find(0) for v in range(1, 6)] == [True, True, True, False, False]
    assert k.remaining[3] == k.remaining[4] == 1
    before = list(k.remaining)
    k2 = fallback_kernel(g)
    k2.validate([0, 9], max_steps=2)
    # the second step of the centre cluster advances by w_min = 1, absorbing the diagonals
    f2 = k2.forest
    assert f2.find(4) == f2.find(0) and f2.find(5) == f2.find(0)
    assert [b - a for a, b in zip(k2.remaining, before) if b != a][:2] == [1, 1]


def test_empty_events(backend):
    g = graphs_for(3, 3, 0.005)[0]
    corr = decode(g, [], backend)
    assert len(corr) == 0 and corr.logical == 0 and corr.growth_steps == 0


def test_odd_events_rejected(backend):
    g = graphs_for(3, 3, 0.005)[0]
    with pytest.raises(OddSyndromeError):
        decode(g, [0, 1, 2], backend)
    with pytest.raises(OddSyndromeError):
        UnionFindDecoder(g, backend).syndrome_validation([4])


def test_bitset_input():
    g = graphs_for(3, 3, 0.005)[0]
    bits = np.zeros(g.num_nodes, dtype=bool)
    bits[[2, 11]] = True
    a = decode(g, bits)
    b = decode(g, [11, 2])
    assert list(a.edges) == list(b.edges)


def test_all_detectors_excited(backend):
    g = graphs_for(3, 1, 0.005)[1]
    events = list(range(g.num_nodes))
    dec = UnionFindDecoder(g, backend)
    erasure = dec.syndrome_validation(events)
    covered = set(g.eu[list(erasure.edges)]) | set(g.ev[list(erasure.edges)])
    assert covered == set(events)
    corr = dec.peel(erasure, events)
    assert list(corr.flips) == events


# peeling ---------------------------------------------------------------------

def test_peel_single_edge(backend):
    g = graph(2, [(0, 1)], [1.0])
    assert list(peel(g, Erasure((0,)), [0, 1], backend).edges) == [0]


def test_peel_path_of_three(backend):
    g = graph(4, [(0, 1), (1, 2), (2, 3)], [1.0, 1.0, 1.0])
    assert list(peel(g, Erasure((0, 1, 2)), [0, 3], backend).edges) == [0, 1, 2]


def test_peel_quiet_component(backend):
    g = graph(6, [(0, 1), (2, 3), (3, 4), (4, 5)], [1.0] * 4)
    corr = peel(g, Erasure((0, 1, 2, 3)), [0, 1], backend)
    assert list(corr.edges) == [0]


def test_peel_uses_minimum_spanning_forest(backend):
    # triangle: the heavy edge 0-2 is left out of the forest
    g = graph(3, [(0, 1), (1, 2), (0, 2)], [1.0, 1.0, 5.0])
    assert list(peel(g, Erasure((0, 1, 2)), [0, 2], backend).edges) == [0, 1]


def test_peel_odd_component(backend):
    g = graph(3, [(0, 1), (1, 2)], [1.0, 1.0])
    with pytest.raises(ParityError):
        peel(g, Erasure((0, 1)), [0], backend)


# cluster forest ------------------------------------------------------------------

def test_forest_contract():
    n = 8
    indptr = np.zeros(n + 1, dtype=np.int32)
    f = ClusterForest(n, list(indptr), [])
    assert all(f.find(v) == v for v in range(n))
    root = f.union(2, 5)
    assert f.find(2) == f.find(5) == root == 2
    f.parity[0] = 1
    f.parity[7] = 1
    for v in range(n - 1):
        f.union(f.find(v), f.find(v + 1))
    assert len({f.find(v) for v in range(n)}) == 1
    assert f.parity[f.find(0)] == 0
    assert f.size[f.find(0)] == n


def test_guard_raises():
    g = graph(4, [(0, 1), (1, 2), (2, 3)], [3.0, 1.0, 3.0])
    indptr, adj = g.csr
    for kernels in {_backend.get(b) for b in BACKENDS}:
        k = kernels.UFKernel(g.num_nodes, indptr, adj, g.eu, g.ev, g.weight_int, g.rank, 0)
        with pytest.raises(NonTerminationGuard):
            k.decode(np.array([0, 3], dtype=np.int32))


# properties over sampled shots -------------------------------------------------


def _check_shots(d, p, shots, seed=1):
    primal, dual = graphs_for(d, d, p, "truncated", 0.1)
    sampler = sampler_for(d, d, p)
    dp, dd = UnionFindDecoder(primal), UnionFindDecoder(dual)
    for shot in range(shots):
        ev_p, ev_d, _ = sampler.sample(seed, shot)
        for dec, ev in ((dp, ev_p), (dd, ev_d)):
            if not len(ev):
                continue
            corr = dec.decode(ev)
            assert np.array_equal(corr.flips, ev), (d, p, shot)


@pytest.mark.parametrize("d", [3, 5, 7])
@pytest.mark.parametrize("p", [0.002, 0.005, 0.01])
def test_validity_random_shots(d, p):
    _check_shots(d, p, 100_000)


def test_growth_touch_bound():
    d, p = 5, 0.008
    for g in graphs_for(d, d, p, "truncated", 0.1):
        k = fallback_kernel(g)
        k.instrument()
        sampler = _fallback.ShotSampler(d, d, p, **table_for(d, d, p).kernel_arrays())
        for shot in range(150):
            events = sampler.sample(3, shot)[0 if g.kind == "primal" else 1]
            k.validate(events)
            for e, count in k.decrements.items():
                assert count <= 2 * math.ceil(int(g.weight_int[e]))


def test_unweighted_steps_grow_whole_boundary():
    d, p = 5, 0.008
    g = graphs_for(d, d, p, "unweighted")[0]
    k = fallback_kernel(g)
    k.instrument()
    sampler = _fallback.ShotSampler(d, d, p, **table_for(d, d, p).kernel_arrays())
    for shot in range(100):
        grown = set(k.validate(sampler.sample(5, shot)[0]))
        assert set(k.decrements) <= grown
        assert all(c == 1 for c in k.decrements.values())


def test_erasure_only_grows():
    d, p = 5, 0.01
    g = graphs_for(d, d, p)[0]
    sampler = sampler_for(d, d, p, "python")
    events = sampler.sample(8, 4)[0]
    k = fallback_kernel(g)
    full = k.validate(events)
    prev = []
    for s in range(1, k.steps + 1):
        cur = fallback_kernel(g).validate(events, max_steps=s)
        assert cur[: len(prev)] == prev
        prev = cur
    assert prev == full


@pytest.mark.parametrize("mode,eps", [("weighted", None), ("truncated", 0.1), ("unweighted", None)])
def test_backends_agree(mode, eps):
    if "cython" not in BACKENDS:
        pytest.skip("compiled extension not built")
    d, p = 5, 0.006
    primal, _ = graphs_for(d, d, p, mode, eps)
    sampler = sampler_for(d, d, p)
    a, b = UnionFindDecoder(primal, "python"), UnionFindDecoder(primal, "cython")
    for shot in range(300):
        ev = sampler.sample(12, shot)[0]
        ca, cb = a.decode(ev), b.decode(ev)
        assert list(ca.edges) == list(cb.edges)
        assert ca.growth_steps == cb.growth_steps and ca.erasure_size == cb.erasure_size


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32))
def test_decode_deterministic(seed):
    d, p = 5, 0.01
    primal, _ = graphs_for(d, d, p)
    ev = sampler_for(d, d, p).sample(seed, 0)[0]
    dec = UnionFindDecoder(primal)
    first = dec.decode(ev)
    again = UnionFindDecoder(primal).decode(ev)
    assert list(first.edges) == list(again.edges) == list(dec.decode(ev).edges)


def test_single_faults_d3(backend):
    params = LatticeParams(3, 3, 0.005)
    primal, dual = graphs_for(3, 3, 0.005, "truncated", 0.1)
    dp, dd = UnionFindDecoder(primal, backend), UnionFindDecoder(dual, backend)
    for site in enumerate_fault_sites(params):
        rec = inject_fault(params, site)
        cp, cd = dp.decode(rec.primal_indices()), dd.decode(rec.dual_indices())
        assert np.array_equal(cp.flips, rec.primal_indices())
        assert np.array_equal(cd.flips, rec.dual_indices())
        assert cp.logical == rec.true_logical & 3
        assert cd.logical == rec.true_logical >> 2
