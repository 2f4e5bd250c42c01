# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled shot sampler and union-find decoder.

Mirrors ``_fallback.py`` operation for operation; see that module for the
reference semantics. All hot loops run without the GIL.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int32_t, int64_t, uint64_t, uint8_t
from libc.stdlib cimport malloc, realloc, free, qsort
from libc.string cimport memcpy
from posix.stdlib cimport posix_memalign
from posix.mman cimport madvise
from libc.math cimport log, log1p
from posix.time cimport clock_gettime, timespec, CLOCK_MONOTONIC

from .errors import NonTerminationGuard, OddSyndromeError, ParityError

cnp.import_array()

NAME = "cython"

DEF P_CLASSES = 12
DEF NUM_CLASSES = 16

cdef enum:
    OK = 0
    ERR_ODD = 1
    ERR_GUARD = 2
    ERR_PARITY = 3
    ERR_NOMEM = 4
    ERR_NOBOUNDARY = 5

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL


# ---------------------------------------------------------------------------
# random stream

cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)

cdef inline uint64_t next_u64(uint64_t* s) noexcept nogil:
    s[0] += GOLDEN
    return mix64(s[0])

cdef inline double uniform(uint64_t* s) noexcept nogil:
    return <double>((next_u64(s) >> 11) + 1) * (1.0 / 9007199254740992.0)

cdef inline int64_t below(uint64_t* s, int64_t n) noexcept nogil:
    return <int64_t>(((next_u64(s) >> 32) * <uint64_t>n) >> 32)

cdef inline uint64_t stream_init(uint64_t seed, uint64_t shot) noexcept nogil:
    return mix64(seed ^ mix64(shot + GOLDEN))


cdef int cmp_i64(const void* a, const void* b) noexcept nogil:
    cdef int64_t x = (<int64_t*>a)[0]
    cdef int64_t y = (<int64_t*>b)[0]
    return (x > y) - (x < y)

cdef int cmp_i32(const void* a, const void* b) noexcept nogil:
    cdef int32_t x = (<int32_t*>a)[0]
    cdef int32_t y = (<int32_t*>b)[0]
    return (x > y) - (x < y)


cdef inline int64_t now_ns() noexcept nogil:
    cdef timespec ts
    clock_gettime(CLOCK_MONOTONIC, &ts)
    return <int64_t>ts.tv_sec * 1000000000 + ts.tv_nsec


# ---------------------------------------------------------------------------
# growable int64 buffer

cdef struct Buf:
    int64_t* data
    int64_t n
    int64_t cap

cdef inline int buf_push(Buf* b, int64_t x) noexcept nogil:
    cdef int64_t* nd
    if b.n == b.cap:
        nd = <int64_t*>realloc(b.data, (2 * b.cap + 16) * sizeof(int64_t))
        if nd == NULL:
            return ERR_NOMEM
        b.data = nd
        b.cap = 2 * b.cap + 16
    b.data[b.n] = x
    b.n += 1
    return OK


cdef int64_t odd_sorted(Buf* b) noexcept nogil:
    """Sort and keep values occurring an odd number of times (in place)."""
    cdef int64_t a = 0, c, k = 0, n = b.n
    qsort(b.data, n, sizeof(int64_t), cmp_i64)
    while a < n:
        c = a
        while c < n and b.data[c] == b.data[a]:
            c += 1
        if (c - a) & 1:
            b.data[k] = b.data[a]
            k += 1
        a = c
    b.n = k
    return k


# ---------------------------------------------------------------------------
# shot sampler

cdef class ShotSampler:
    cdef public int d, rounds
    cdef public double p
    cdef int32_t offsets[NUM_CLASSES]
    cdef int32_t ncomp[NUM_CLASSES]
    cdef object _counts, _dets, _logical
    cdef const int32_t* counts
    cdef const int32_t* dets
    cdef const uint8_t* logical
    cdef Buf tog[2]
    cdef int64_t hits[NUM_CLASSES]

    def __cinit__(self):
        self.tog[0].data = NULL
        self.tog[0].n = 0
        self.tog[0].cap = 0
        self.tog[1].data = NULL
        self.tog[1].n = 0
        self.tog[1].cap = 0

    def __init__(self, d, rounds, p, offsets, ncomp, counts, dets, logical):
        cdef int k
        self.d = d
        self.rounds = rounds
        self.p = p
        for k in range(NUM_CLASSES):
            self.offsets[k] = offsets[k]
            self.ncomp[k] = ncomp[k]
        self._counts = np.ascontiguousarray(counts, dtype=np.int32)
        self._dets = np.ascontiguousarray(dets, dtype=np.int32)
        self._logical = np.ascontiguousarray(logical, dtype=np.uint8)
        cdef const int32_t[::1] cv = self._counts
        cdef const int32_t[::1] dv = self._dets
        cdef const uint8_t[::1] lv = self._logical
        self.counts = &cv[0]
        self.dets = &dv[0]
        self.logical = &lv[0]

    def __dealloc__(self):
        free(self.tog[0].data)
        free(self.tog[1].data)

    cdef int apply(self, int64_t r, int k, int64_t pos, int64_t comp, int* mask) noexcept nogil:
        cdef int64_t d = self.d, nd = self.d * self.d
        cdef int64_t tau = self.offsets[k] + comp - 1
        cdef int64_t i0 = pos // d, j0 = pos % d
        cdef int g, a
        cdef int64_t base
        cdef const int32_t* q
        for g in range(2):
            for a in range(self.counts[2 * tau + g]):
                base = ((tau * 2 + g) * 2 + a) * 3
                q = self.dets + base
                if buf_push(&self.tog[g], (r + q[0]) * nd + ((i0 + q[1]) % d) * d + (j0 + q[2]) % d) != OK:
                    return ERR_NOMEM
        mask[0] ^= self.logical[tau * nd + pos]
        return OK

    cdef int run(self, uint64_t seed, int64_t shot, int* mask, bint count_only) noexcept nogil:
        """Draw one shot's faults; events land in ``tog`` (unsorted) unless counting."""
        cdef uint64_t s = stream_init(seed, <uint64_t>shot)
        cdef int64_t nd = self.d * self.d
        cdef int64_t per, n, pos, idx, r, rem, comp
        cdef int k, nc, phase
        cdef double skip, log1mq, q
        self.tog[0].n = 0
        self.tog[1].n = 0
        mask[0] = 0
        for phase in range(2):
            if phase == 0:
                per = P_CLASSES * nd
                q = self.p
            else:
                per = (NUM_CLASSES - P_CLASSES) * nd
                q = 2.0 * self.p / 3.0
            n = self.rounds * per
            if q <= 0.0 or n <= 0:
                continue
            log1mq = log1p(-q)
            pos = 0
            while True:
                skip = log(uniform(&s)) / log1mq
                if skip >= <double>(n - pos):
                    break
                pos += <int64_t>skip
                idx = pos
                pos += 1
                r = idx // per
                rem = idx % per
                k = <int>(rem // nd)
                if phase == 0:
                    nc = self.ncomp[k]
                    comp = below(&s, nc) + 1 if nc > 1 else 1
                else:
                    k += P_CLASSES
                    comp = 1
                if count_only:
                    self.hits[k] += 1
                elif self.apply(r, k, rem % nd, comp, mask) != OK:
                    return ERR_NOMEM
        return OK

    cdef int sample_c(self, uint64_t seed, int64_t shot, int* mask) noexcept nogil:
        if self.run(seed, shot, mask, False) != OK:
            return ERR_NOMEM
        odd_sorted(&self.tog[0])
        odd_sorted(&self.tog[1])
        return OK

    def sample(self, seed, shot_index):
        """``(primal_events, dual_events, logical_mask)`` of one shot."""
        cdef int mask = 0
        cdef uint64_t sd = <uint64_t>seed
        cdef int64_t sh = shot_index
        cdef int rc
        with nogil:
            rc = self.sample_c(sd, sh, &mask)
        if rc != OK:
            raise MemoryError()
        out = []
        for g in range(2):
            out.append([self.tog[g].data[k] for k in range(self.tog[g].n)])
        return out[0], out[1], mask

    def count_hits(self, seed, start, count):
        """Per-channel-class fault counts summed over a range of shots."""
        cdef int mask = 0, k
        cdef int64_t sh, st = start, cnt = count
        cdef uint64_t sd = <uint64_t>seed
        for k in range(NUM_CLASSES):
            self.hits[k] = 0
        with nogil:
            for sh in range(st, st + cnt):
                self.run(sd, sh, &mask, True)
        return [self.hits[k] for k in range(NUM_CLASSES)]


# ---------------------------------------------------------------------------
# union-find decoder

cdef extern from *:
    void prefetch "__builtin_prefetch"(const void*) noexcept nogil


cdef extern from "<sys/mman.h>":
    int MADV_HUGEPAGE


cdef void* big_alloc(size_t nbytes) noexcept nogil:
    """malloc, with large blocks 2 MiB aligned and backed by huge pages when possible."""
    cdef void* p = NULL
    if nbytes < (1 << 20):
        return malloc(nbytes if nbytes else 1)
    if posix_memalign(&p, 1 << 21, nbytes) != 0:
        return NULL
    madvise(p, nbytes, MADV_HUGEPAGE)  # advisory; failure is harmless
    return p


# Per-edge and per-vertex state is packed into records so that one cache
# line serves every field a growth or peeling step reads.

cdef struct EdgeRec:
    int32_t u
    int32_t v
    int32_t rank  # position in the global (weight, index) order
    int32_t _pad
    int64_t w
    int64_t rem  # remaining growth budget; the edge is grown at 0


cdef struct VRec:
    int32_t parent
    int32_t size
    int32_t blen
    int32_t bcap
    int32_t* bnd  # boundary edges of a root (lazily purged)
    uint8_t parity
    uint8_t touched


cdef struct PRec:
    # peeling scratch: spanning-forest parent, forest degree, XOR of forest edges
    int32_t p2
    int32_t deg
    int32_t xe
    int32_t excited


cdef class UFKernel:
    cdef int32_t n, m
    cdef int32_t* indptr
    cdef int32_t* adj
    cdef EdgeRec* E
    cdef VRec* V
    cdef PRec* P
    cdef int64_t guard
    cdef int32_t* tv
    cdef int32_t ntv
    cdef int32_t* te
    cdef int32_t nte
    cdef int32_t* gl
    cdef int32_t ngl
    cdef int32_t* newly
    cdef int64_t* heap
    cdef int64_t nheap, capheap
    cdef int32_t* stack
    cdef int64_t* sortbuf
    cdef int32_t* corr
    cdef int32_t ncorr
    cdef int32_t* orig  # internal edge id -> caller's edge id
    cdef object pos  # caller's edge id -> internal edge id
    cdef public int64_t steps

    def __init__(self, num_nodes, indptr, adj, eu, ev, weights, rank, guard):
        cdef int32_t k
        # Edges are renumbered internally so that edges sharing a lower endpoint
        # are adjacent in memory; ids are translated back on output.
        eu = np.asarray(eu, dtype=np.int32)
        ev = np.asarray(ev, dtype=np.int32)
        order = np.lexsort((np.maximum(eu, ev), np.minimum(eu, ev))).astype(np.int32)
        pos = np.empty_like(order)
        pos[order] = np.arange(order.shape[0], dtype=np.int32)
        self.pos = pos
        cdef const int32_t[::1] a_ptr = np.ascontiguousarray(indptr, dtype=np.int32)
        cdef const int32_t[::1] a_adj = np.ascontiguousarray(pos[np.asarray(adj, dtype=np.int64)], dtype=np.int32)
        cdef const int32_t[::1] a_u = np.ascontiguousarray(eu[order])
        cdef const int32_t[::1] a_v = np.ascontiguousarray(ev[order])
        cdef const int64_t[::1] a_w = np.ascontiguousarray(np.asarray(weights, dtype=np.int64)[order])
        cdef const int32_t[::1] a_r = np.ascontiguousarray(np.asarray(rank, dtype=np.int32)[order])
        cdef const int32_t[::1] a_o = order
        self.n = num_nodes
        self.m = a_u.shape[0]
        self.guard = min(int(guard), (1 << 62))
        n = max(self.n, 1)
        m = max(self.m, 1)
        nadj = max(a_adj.shape[0], 1)
        self.indptr = <int32_t*>big_alloc((self.n + 1) * sizeof(int32_t))
        self.adj = <int32_t*>big_alloc(nadj * sizeof(int32_t))
        self.E = <EdgeRec*>big_alloc(m * sizeof(EdgeRec))
        self.V = <VRec*>big_alloc(n * sizeof(VRec))
        self.P = <PRec*>big_alloc(n * sizeof(PRec))
        self.tv = <int32_t*>big_alloc(n * sizeof(int32_t))
        self.te = <int32_t*>big_alloc(m * sizeof(int32_t))
        self.gl = <int32_t*>big_alloc(m * sizeof(int32_t))
        self.newly = <int32_t*>big_alloc(m * sizeof(int32_t))
        self.stack = <int32_t*>big_alloc((2 * m + n) * sizeof(int32_t))
        self.sortbuf = <int64_t*>big_alloc(m * sizeof(int64_t))
        self.corr = <int32_t*>big_alloc(m * sizeof(int32_t))
        self.orig = <int32_t*>big_alloc(m * sizeof(int32_t))
        self.capheap = 64
        self.heap = <int64_t*>malloc(self.capheap * sizeof(int64_t))
        if (self.indptr == NULL or self.adj == NULL or self.E == NULL or self.V == NULL or self.P == NULL
                or self.tv == NULL or self.te == NULL or self.gl == NULL or self.newly == NULL
                or self.stack == NULL or self.sortbuf == NULL or self.corr == NULL or self.orig == NULL or self.heap == NULL):
            raise MemoryError()
        memcpy(self.indptr, &a_ptr[0], (self.n + 1) * sizeof(int32_t))
        if a_adj.shape[0]:
            memcpy(self.adj, &a_adj[0], a_adj.shape[0] * sizeof(int32_t))
        for k in range(self.n):
            self.V[k].parent = k
            self.V[k].size = 1
            self.V[k].blen = 0
            self.V[k].bcap = 0
            self.V[k].bnd = NULL
            self.V[k].parity = 0
            self.V[k].touched = 0
            self.P[k].p2 = k
            self.P[k].deg = 0
            self.P[k].xe = 0
            self.P[k].excited = 0
        for k in range(self.m):
            self.E[k].u = a_u[k]
            self.E[k].v = a_v[k]
            self.E[k].rank = a_r[k]
            self.E[k]._pad = 0
            self.E[k].w = a_w[k]
            self.E[k].rem = a_w[k]
            self.orig[k] = a_o[k]
        self.ntv = self.nte = self.ngl = self.ncorr = 0
        self.nheap = 0
        self.steps = 0

    def __dealloc__(self):
        cdef int32_t k
        if self.V != NULL:
            for k in range(self.n):
                free(self.V[k].bnd)
        free(self.indptr); free(self.adj); free(self.E); free(self.V); free(self.P)
        free(self.tv); free(self.te); free(self.gl); free(self.newly); free(self.heap)
        free(self.stack); free(self.sortbuf); free(self.corr); free(self.orig)

    # -- forest -------------------------------------------------------------
    cdef int touch(self, int32_t v) noexcept nogil:
        cdef VRec* r = &self.V[v]
        cdef int32_t deg, need
        cdef int32_t* nb
        if r.touched:
            return OK
        r.touched = 1
        self.tv[self.ntv] = v
        self.ntv += 1
        deg = self.indptr[v + 1] - self.indptr[v]
        need = deg if deg > 4 else 4
        if r.bcap < need:
            nb = <int32_t*>realloc(r.bnd, need * sizeof(int32_t))
            if nb == NULL:
                return ERR_NOMEM
            r.bnd = nb
            r.bcap = need
        if deg:
            memcpy(r.bnd, self.adj + self.indptr[v], deg * sizeof(int32_t))
        r.blen = deg
        return OK

    cdef inline int32_t find(self, int32_t v) noexcept nogil:
        cdef int32_t root = v, nxt
        while self.V[root].parent != root:
            root = self.V[root].parent
        while self.V[v].parent != root:
            nxt = self.V[v].parent
            self.V[v].parent = root
            v = nxt
        return root

    cdef int extend(self, VRec* dst, VRec* src) noexcept nogil:
        """Append the boundary list of ``src`` to that of ``dst``."""
        cdef int32_t need = dst.blen + src.blen, cap
        cdef int32_t* nb
        if need > dst.bcap:
            cap = 2 * dst.bcap
            if cap < need:
                cap = need
            nb = <int32_t*>realloc(dst.bnd, cap * sizeof(int32_t))
            if nb == NULL:
                return ERR_NOMEM
            dst.bnd = nb
            dst.bcap = cap
        if src.blen:
            memcpy(dst.bnd + dst.blen, src.bnd, src.blen * sizeof(int32_t))
        dst.blen = need
        return OK

    cdef int union(self, int32_t a, int32_t b) noexcept nogil:
        cdef int32_t t
        cdef int32_t* tp
        cdef VRec* ra
        cdef VRec* rb
        if a == b:
            return OK
        if self.touch(a) != OK or self.touch(b) != OK:
            return ERR_NOMEM
        if self.V[a].size < self.V[b].size or (self.V[a].size == self.V[b].size and b < a):
            t = a; a = b; b = t
        ra = &self.V[a]
        rb = &self.V[b]
        rb.parent = a
        ra.size += rb.size
        ra.parity ^= rb.parity
        if ra.blen >= rb.blen:
            if self.extend(ra, rb) != OK:
                return ERR_NOMEM
        else:
            if self.extend(rb, ra) != OK:
                return ERR_NOMEM
            # the survivor takes b's (longer) buffer; b keeps a's for reuse
            tp = ra.bnd; ra.bnd = rb.bnd; rb.bnd = tp
            t = ra.bcap; ra.bcap = rb.bcap; rb.bcap = t
            ra.blen = rb.blen
        rb.blen = 0
        return OK

    # -- heap ---------------------------------------------------------------
    cdef int heap_push(self, int64_t key) noexcept nogil:
        cdef int64_t i, par
        cdef int64_t* nh
        if self.nheap == self.capheap:
            nh = <int64_t*>realloc(self.heap, 2 * self.capheap * sizeof(int64_t))
            if nh == NULL:
                return ERR_NOMEM
            self.heap = nh
            self.capheap *= 2
        i = self.nheap
        self.nheap += 1
        while i > 0:
            par = (i - 1) >> 1
            if self.heap[par] <= key:
                break
            self.heap[i] = self.heap[par]
            i = par
        self.heap[i] = key
        return OK

    cdef int64_t heap_pop(self) noexcept nogil:
        cdef int64_t top = self.heap[0], last, i = 0, c
        self.nheap -= 1
        last = self.heap[self.nheap]
        while True:
            c = 2 * i + 1
            if c >= self.nheap:
                break
            if c + 1 < self.nheap and self.heap[c + 1] < self.heap[c]:
                c += 1
            if self.heap[c] >= last:
                break
            self.heap[i] = self.heap[c]
            i = c
        if self.nheap > 0:
            self.heap[i] = last
        return top

    # -- decoding -----------------------------------------------------------
    cdef void reset(self) noexcept nogil:
        cdef int32_t k, v
        cdef VRec* r
        for k in range(self.ntv):
            v = self.tv[k]
            r = &self.V[v]
            r.parent = v
            r.size = 1
            r.parity = 0
            r.touched = 0
            r.blen = 0
        for k in range(self.nte):
            self.E[self.te[k]].rem = self.E[self.te[k]].w
        self.ntv = self.nte = self.ngl = self.ncorr = 0
        self.nheap = 0
        self.steps = 0

    cdef int grow(self, int32_t c) noexcept nogil:
        cdef int32_t* b = self.V[c].bnd
        cdef int32_t nb = self.V[c].blen, k = 0, idx, e, nn = 0
        cdef int64_t wmin = -1
        cdef EdgeRec* er
        # issue the scattered loads up front so their misses overlap
        for idx in range(nb):
            prefetch(&self.E[b[idx]])
        for idx in range(nb):
            er = &self.E[b[idx]]
            prefetch(&self.V[er.u])
            prefetch(&self.V[er.v])
        for idx in range(nb):
            e = b[idx]
            er = &self.E[e]
            if er.rem == 0 or self.find(er.u) == self.find(er.v):
                continue
            b[k] = e
            k += 1
            if wmin < 0 or er.rem < wmin:
                wmin = er.rem
        self.V[c].blen = k
        if k == 0:
            return ERR_NOBOUNDARY
        for idx in range(k):
            e = b[idx]
            er = &self.E[e]
            if er.rem == er.w:
                self.te[self.nte] = e
                self.nte += 1
            er.rem -= wmin
            if er.rem == 0:
                self.gl[self.ngl] = e
                self.ngl += 1
                self.newly[nn] = e
                nn += 1
        for idx in range(nn):
            e = self.newly[idx]
            if self.union(self.find(self.E[e].u), self.find(self.E[e].v)) != OK:
                return ERR_NOMEM
        return OK

    cdef int validate_c(self, const int32_t* events, int32_t nev) noexcept nogil:
        cdef int32_t k, v, root, r
        cdef int64_t key
        cdef int rc
        self.reset()
        if nev & 1:
            return ERR_ODD
        for k in range(nev):
            prefetch(&self.V[events[k]])
            prefetch(&self.indptr[events[k]])
        for k in range(nev):
            v = events[k]
            prefetch(self.adj + self.indptr[v])
            prefetch(self.V[v].bnd)
        for k in range(nev):
            v = events[k]
            if self.touch(v) != OK:
                return ERR_NOMEM
            self.V[v].parity = 1
            if self.heap_push((<int64_t>self.V[v].blen << 32) | v) != OK:
                return ERR_NOMEM
        while self.nheap > 0:
            key = self.heap_pop()
            root = <int32_t>(key & <int64_t>0xFFFFFFFF)
            if self.V[root].parent != root or not self.V[root].parity or self.V[root].blen != (key >> 32):
                continue
            rc = self.grow(root)
            if rc != OK:
                return rc
            self.steps += 1
            if self.steps > self.guard:
                return ERR_GUARD
            r = self.find(root)
            if self.V[r].parity:
                if self.heap_push((<int64_t>self.V[r].blen << 32) | r) != OK:
                    return ERR_NOMEM
        return OK

    cdef inline int32_t find2(self, int32_t v) noexcept nogil:
        cdef int32_t root = v, nxt
        while self.P[root].p2 != root:
            root = self.P[root].p2
        while self.P[v].p2 != root:
            nxt = self.P[v].p2
            self.P[v].p2 = root
            v = nxt
        return root

    cdef inline void forest_add(self, int32_t v, int32_t e) noexcept nogil:
        self.P[v].deg += 1
        self.P[v].xe ^= e

    cdef int peel_c(self, const int32_t* erasure, int32_t ner, const int32_t* events, int32_t nev) noexcept nogil:
        cdef int32_t k, e, a, b, v, x, ns = 0
        cdef bint bad = False
        cdef EdgeRec* er
        # Kruskal over the erasure in global (weight, index) order
        for k in range(ner):
            e = erasure[k]
            self.sortbuf[k] = (<int64_t>self.E[e].rank << 32) | e
        qsort(self.sortbuf, ner, sizeof(int64_t), cmp_i64)
        self.ncorr = 0
        for k in range(ner):
            if k + 8 < ner:
                er = &self.E[<int32_t>(self.sortbuf[k + 8] & <int64_t>0xFFFFFFFF)]
                prefetch(&self.P[er.u])
                prefetch(&self.P[er.v])
            e = <int32_t>(self.sortbuf[k] & <int64_t>0xFFFFFFFF)
            er = &self.E[e]
            a = self.find2(er.u)
            b = self.find2(er.v)
            if a == b:
                continue
            self.P[b].p2 = a
            self.forest_add(er.u, e)
            self.forest_add(er.v, e)
        for k in range(nev):
            self.P[events[k]].excited = 1
        # a leaf may be pushed twice; the degree check on pop skips the copy
        for k in range(ner):
            er = &self.E[erasure[k]]
            if self.P[er.u].deg == 1:
                self.stack[ns] = er.u
                ns += 1
            if self.P[er.v].deg == 1:
                self.stack[ns] = er.v
                ns += 1
        while ns > 0:
            ns -= 1
            v = self.stack[ns]
            if self.P[v].deg != 1:
                continue
            e = self.P[v].xe
            x = self.E[e].u ^ self.E[e].v ^ v
            self.P[v].deg = 0
            self.P[x].deg -= 1
            self.P[x].xe ^= e
            if self.P[v].excited:
                self.corr[self.ncorr] = self.orig[e]
                self.ncorr += 1
                self.P[v].excited = 0
                self.P[x].excited ^= 1
            if self.P[x].deg == 1:
                self.stack[ns] = x
                ns += 1
        for k in range(nev):
            if self.P[events[k]].excited:
                bad = True
        # restore scratch over erasure endpoints and events
        for k in range(ner):
            er = &self.E[erasure[k]]
            for x in range(2):
                v = er.u if x == 0 else er.v
                if self.P[v].excited:
                    bad = True
                self.P[v].p2 = v
                self.P[v].deg = 0
                self.P[v].xe = 0
                self.P[v].excited = 0
        for k in range(nev):
            self.P[events[k]].excited = 0
        qsort(self.corr, self.ncorr, sizeof(int32_t), cmp_i32)
        return ERR_PARITY if bad else OK

    cdef int decode_c(self, const int32_t* events, int32_t nev) noexcept nogil:
        cdef int rc = self.validate_c(events, nev)
        if rc != OK:
            return rc
        return self.peel_c(self.gl, self.ngl, events, nev)

    cdef object _raise(self, int rc):
        if rc == ERR_ODD:
            raise OddSyndromeError("odd number of detection events")
        if rc == ERR_GUARD:
            raise NonTerminationGuard(f"{self.steps} growth steps")
        if rc == ERR_PARITY:
            raise ParityError("erasure component with odd excitation parity")
        if rc == ERR_NOBOUNDARY:
            raise ParityError("odd cluster has no boundary")
        raise MemoryError()

    def validate(self, events):
        """Grow clusters until all are even; return the grown edges in growth order."""
        cdef int32_t[::1] ev = np.ascontiguousarray(events, dtype=np.int32)
        cdef int rc
        cdef int32_t nev = ev.shape[0]
        with nogil:
            rc = self.validate_c(&ev[0] if nev else NULL, nev)
        if rc != OK:
            self._raise(rc)
        return [self.orig[self.gl[k]] for k in range(self.ngl)]

    def peel(self, erasure, events):
        """Peel a minimum-weight spanning forest of ``erasure``; return correction edges."""
        cdef int32_t[::1] er = np.ascontiguousarray(self.pos[np.asarray(list(erasure), dtype=np.int64)], dtype=np.int32)
        cdef int32_t[::1] ev = np.ascontiguousarray(events, dtype=np.int32)
        cdef int32_t ner = er.shape[0], nev = ev.shape[0]
        cdef int rc
        with nogil:
            rc = self.peel_c(&er[0] if ner else NULL, ner, &ev[0] if nev else NULL, nev)
        if rc != OK:
            self._raise(rc)
        return [self.corr[k] for k in range(self.ncorr)]

    def decode(self, events):
        """``(correction_edges, growth_steps, erasure_size)``."""
        cdef int32_t[::1] ev = np.ascontiguousarray(events, dtype=np.int32)
        cdef int32_t nev = ev.shape[0]
        cdef int rc
        with nogil:
            rc = self.decode_c(&ev[0] if nev else NULL, nev)
        if rc != OK:
            self._raise(rc)
        return [self.corr[k] for k in range(self.ncorr)], self.steps, self.ngl


def run_batch(ShotSampler sampler, UFKernel primal, UFKernel dual, le_primal, le_dual,
              seed, start, count, ns_out=None):
    """Sample and decode ``count`` shots; return ``(failures, decode_ns, growth_steps)``."""
    cdef const uint8_t[::1] lp = np.ascontiguousarray(le_primal, dtype=np.uint8)
    cdef const uint8_t[::1] ld = np.ascontiguousarray(le_dual, dtype=np.uint8)
    cdef int64_t[::1] ns_view
    cdef bint record = ns_out is not None
    if record:
        ns_view = ns_out
    cdef uint64_t sd = <uint64_t>seed
    cdef int64_t st = start, cnt = count, k, j
    cdef int64_t failures = 0, total = 0, steps = 0, t0, dt
    cdef int mask = 0, rc = OK, xp, xd
    cdef int32_t* evp = NULL
    cdef int32_t* evd = NULL
    cdef int64_t capp = 0, capd = 0
    cdef int64_t np_, nd_
    cdef int64_t bad_shot = -1
    with nogil:
        for k in range(cnt):
            rc = sampler.sample_c(sd, st + k, &mask)
            if rc != OK:
                bad_shot = st + k
                break
            np_ = sampler.tog[0].n
            nd_ = sampler.tog[1].n
            if np_ > capp:
                free(evp)
                capp = 2 * np_
                evp = <int32_t*>malloc(capp * sizeof(int32_t))
            if nd_ > capd:
                free(evd)
                capd = 2 * nd_
                evd = <int32_t*>malloc(capd * sizeof(int32_t))
            if (np_ and evp == NULL) or (nd_ and evd == NULL):
                rc = ERR_NOMEM
                bad_shot = st + k
                break
            for j in range(np_):
                evp[j] = <int32_t>sampler.tog[0].data[j]
            for j in range(nd_):
                evd[j] = <int32_t>sampler.tog[1].data[j]
            t0 = now_ns()
            rc = primal.decode_c(evp, <int32_t>np_)
            if rc == OK:
                xp = 0
                for j in range(primal.ncorr):
                    xp ^= lp[primal.corr[j]]
                steps += primal.steps
                rc = dual.decode_c(evd, <int32_t>nd_)
            dt = now_ns() - t0
            if rc != OK:
                bad_shot = st + k
                break
            xd = 0
            for j in range(dual.ncorr):
                xd ^= ld[dual.corr[j]]
            steps += dual.steps
            total += dt
            if record:
                ns_view[k] = dt
            if (xp ^ (mask & 3)) or (xd ^ (mask >> 2)):
                failures += 1
    free(evp)
    free(evd)
    if rc != OK:
        from .errors import ShotError
        try:
            primal._raise(rc)
        except Exception as exc:
            raise ShotError(bad_shot, exc) from exc
    return failures, total, steps
