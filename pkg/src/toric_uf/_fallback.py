"""Pure-Python kernels: shot sampler and union-find decoder.

These are the reference implementations of the compiled kernels in
``_kernels.pyx``; both follow the same operation order and produce
bit-identical results.
"""

from __future__ import annotations

import heapq
import time

from .errors import NonTerminationGuard, OddSyndromeError, ParityError
from .rng import ShotStream, geometric_hits

NAME = "python"
_P_CLASSES = 12
_NUM_CLASSES = 16


class ShotSampler:
    """Samples detection events by XOR-ing translated fault templates."""

    def __init__(self, d, rounds, p, offsets, ncomp, counts, dets, logical):
        self.d, self.rounds, self.p = int(d), int(rounds), float(p)
        self.offsets = [int(x) for x in offsets]
        self.ncomp = [int(x) for x in ncomp]
        self.counts = [int(x) for x in counts]
        self.dets = [int(x) for x in dets]
        self.logical = bytes(int(x) for x in logical)

    def _faults(self, stream):
        d, nd = self.d, self.d * self.d
        per = _P_CLASSES * nd
        for idx in geometric_hits(stream, self.rounds * per, self.p):
            r, rem = divmod(idx, per)
            k, pos = divmod(rem, nd)
            nc = self.ncomp[k]
            comp = stream.below(nc) + 1 if nc > 1 else 1
            yield r, k, pos, comp
        per = (_NUM_CLASSES - _P_CLASSES) * nd
        for idx in geometric_hits(stream, self.rounds * per, 2.0 * self.p / 3.0):
            r, rem = divmod(idx, per)
            k, pos = divmod(rem, nd)
            yield r, _P_CLASSES + k, pos, 1

    def sample(self, seed, shot_index):
        """``(primal_events, dual_events, logical_mask)`` of one shot."""
        d, nd = self.d, self.d * self.d
        nsites = nd
        toggles = ([], [])
        mask = 0
        for r, k, pos, comp in self._faults(ShotStream(seed, shot_index)):
            tau = self.offsets[k] + comp - 1
            i0, j0 = divmod(pos, d)
            for g in (0, 1):
                for a in range(self.counts[2 * tau + g]):
                    base = ((tau * 2 + g) * 2 + a) * 3
                    dt, di, dj = self.dets[base], self.dets[base + 1], self.dets[base + 2]
                    toggles[g].append((r + dt) * nd + ((i0 + di) % d) * d + (j0 + dj) % d)
            mask ^= self.logical[tau * nsites + pos]
        return _odd_sorted(toggles[0]), _odd_sorted(toggles[1]), mask

    def count_hits(self, seed, start, count):
        """Per-channel-class fault counts summed over a range of shots."""
        hits = [0] * _NUM_CLASSES
        for shot in range(start, start + count):
            for _, k, _, _ in self._faults(ShotStream(seed, shot)):
                hits[k] += 1
        return hits


def _odd_sorted(items):
    items.sort()
    out = []
    n = len(items)
    a = 0
    while a < n:
        b = a
        while b < n and items[b] == items[a]:
            b += 1
        if (b - a) & 1:
            out.append(items[a])
        a = b
    return out


class ClusterForest:
    """Disjoint sets over detectors with per-root parity and boundary lists.

    Untouched vertices are implicit singletons whose boundary is their
    incident-edge list; ``touch`` materializes them.
    """

    def __init__(self, n, indptr, adj):
        self.indptr, self.adj = indptr, adj
        self.parent = list(range(n))
        self.size = [1] * n
        self.parity = [0] * n
        self.boundary = [None] * n
        self.touched = []

    def touch(self, v):
        if self.boundary[v] is None:
            self.boundary[v] = self.adj[self.indptr[v]:self.indptr[v + 1]]
            self.touched.append(v)

    def find(self, v):
        parent = self.parent
        root = v
        while parent[root] != root:
            root = parent[root]
        while parent[v] != root:
            parent[v], v = root, parent[v]
        return root

    def union(self, a, b):
        """Merge two roots; the larger (then lower-index) root survives."""
        if a == b:
            return a
        self.touch(a)
        self.touch(b)
        size = self.size
        if size[a] < size[b] or (size[a] == size[b] and b < a):
            a, b = b, a
        self.parent[b] = a
        size[a] += size[b]
        self.parity[a] ^= self.parity[b]
        ba, bb = self.boundary[a], self.boundary[b]
        if len(ba) >= len(bb):
            ba.extend(bb)
        else:
            bb.extend(ba)
            self.boundary[a] = bb
        self.boundary[b] = []
        return a

    def reset(self):
        for v in self.touched:
            self.parent[v] = v
            self.size[v] = 1
            self.parity[v] = 0
            self.boundary[v] = None
        self.touched = []


class UFKernel:
    """Weighted union-find decoder on integer edge weights."""

    def __init__(self, num_nodes, indptr, adj, eu, ev, weights, rank, guard):
        self.n = int(num_nodes)
        self.indptr = [int(x) for x in indptr]
        self.adj = [int(x) for x in adj]
        self.eu = [int(x) for x in eu]
        self.ev = [int(x) for x in ev]
        self.w = [int(x) for x in weights]
        self.rank = [int(x) for x in rank]
        self.guard = int(guard)
        m = len(self.eu)
        self.forest = ClusterForest(self.n, self.indptr, self.adj)
        self.remaining = list(self.w)
        self.grown = [0] * m
        self.touched_edges = []
        self.grown_list = []
        self.decrements = None  # per-edge decrement counts when instrumented
        self.steps = 0

    def instrument(self, on=True):
        self.decrements = {} if on else None

    def reset(self):
        self.forest.reset()
        for e in self.touched_edges:
            self.remaining[e] = self.w[e]
            self.grown[e] = 0
        self.touched_edges = []
        self.grown_list = []
        self.steps = 0
        if self.decrements is not None:
            self.decrements = {}

    # syndrome validation ---------------------------------------------------
    def validate(self, events, max_steps=None):
        """Grow clusters until every cluster has even parity; return grown edges.

        ``max_steps`` stops early so tests can inspect intermediate growth.
        """
        self.reset()
        events = [int(v) for v in events]
        if len(events) & 1:
            raise OddSyndromeError(f"{len(events)} detection events")
        forest = self.forest
        heap = []
        for v in events:
            forest.touch(v)
            forest.parity[v] = 1
            heapq.heappush(heap, (len(forest.boundary[v]) << 32) | v)
        while heap and (max_steps is None or self.steps < max_steps):
            key = heapq.heappop(heap)
            root = key & 0xFFFFFFFF
            if forest.parent[root] != root or not forest.parity[root] or len(forest.boundary[root]) != key >> 32:
                continue
            self._grow(root)
            self.steps += 1
            if self.steps > self.guard:
                raise NonTerminationGuard(f"{self.steps} growth steps")
            r = forest.find(root)
            if forest.parity[r]:
                heapq.heappush(heap, (len(forest.boundary[r]) << 32) | r)
        return list(self.grown_list)

    def _grow(self, c):
        forest, eu, ev = self.forest, self.eu, self.ev
        grown, remaining = self.grown, self.remaining
        bnd = forest.boundary[c]
        find = forest.find
        k = 0
        wmin = -1
        for e in bnd:
            if grown[e] or find(eu[e]) == find(ev[e]):
                continue
            bnd[k] = e
            k += 1
            if wmin < 0 or remaining[e] < wmin:
                wmin = remaining[e]
        del bnd[k:]
        if k == 0:
            raise ParityError(f"odd cluster {c} has no boundary")
        newly = []
        for e in bnd:
            if remaining[e] == self.w[e]:
                self.touched_edges.append(e)
            remaining[e] -= wmin
            if self.decrements is not None:
                self.decrements[e] = self.decrements.get(e, 0) + 1
            if remaining[e] == 0:
                grown[e] = 1
                self.grown_list.append(e)
                newly.append(e)
        for e in newly:
            forest.union(find(eu[e]), find(ev[e]))

    # peeling ---------------------------------------------------------------
    def peel(self, erasure, events):
        """Peel a minimum-weight spanning forest of ``erasure``; return correction edges."""
        eu, ev, rank = self.eu, self.ev, self.rank
        events = [int(v) for v in events]
        order = sorted((int(e) for e in erasure), key=rank.__getitem__)
        parent = {}

        def find(v):
            root = v
            while parent.setdefault(root, root) != root:
                root = parent[root]
            while parent[v] != root:
                parent[v], v = root, parent[v]
            return root

        deg, xe, verts = {}, {}, []
        for e in order:
            a, b = find(eu[e]), find(ev[e])
            if a == b:
                continue
            parent[b] = a
            for v in (eu[e], ev[e]):
                if v not in deg:
                    deg[v] = 0
                    xe[v] = 0
                    verts.append(v)
                deg[v] += 1
                xe[v] ^= e
        excited = {v: 1 for v in events}
        stack = [v for v in verts if deg[v] == 1]
        correction = []
        while stack:
            v = stack.pop()
            if deg[v] != 1:
                continue
            e = xe[v]
            w = eu[e] ^ ev[e] ^ v
            deg[v] = 0
            deg[w] -= 1
            xe[w] ^= e
            if excited.get(v):
                correction.append(e)
                excited[v] = 0
                excited[w] = excited.get(w, 0) ^ 1
            if deg[w] == 1:
                stack.append(w)
        if any(excited.values()):
            raise ParityError("erasure component with odd excitation parity")
        correction.sort()
        return correction

    def decode(self, events):
        """``(correction_edges, growth_steps, erasure_size)``."""
        erasure = self.validate(events)
        return self.peel(erasure, events), self.steps, len(erasure)


def run_batch(sampler, primal, dual, le_primal, le_dual, seed, start, count, ns_out=None):
    """Sample and decode ``count`` shots; return ``(failures, decode_ns, growth_steps)``."""
    failures = 0
    total_ns = 0
    steps = 0
    for k in range(count):
        ev_p, ev_d, mask = sampler.sample(seed, start + k)
        t0 = time.perf_counter_ns()
        corr_p, sp, _ = primal.decode(ev_p)
        corr_d, sd, _ = dual.decode(ev_d)
        dt = time.perf_counter_ns() - t0
        total_ns += dt
        if ns_out is not None:
            ns_out[k] = dt
        steps += sp + sd
        lp = 0
        for e in corr_p:
            lp ^= le_primal[e]
        ld = 0
        for e in corr_d:
            ld ^= le_dual[e]
        if (lp ^ (mask & 3)) or (ld ^ (mask >> 2)):
            failures += 1
    return failures, total_ns, steps

