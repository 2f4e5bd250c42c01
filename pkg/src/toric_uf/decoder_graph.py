"""Weighted space-time decoder graphs built from single-fault enumeration.

Every elementary fault is propagated through the noiseless circuit and the
detectors it flips are recorded. Faults flipping two detectors of a graph
contribute their probability to the edge between them; edge weights are the
log-odds of the summed probability.

The circuit is invariant under lattice translations and every noisy round
has the same detector response (a fault in round ``r`` only touches layers
``r`` and ``r + 1``), so each fault's effect is a translate of one of the
136 *templates* obtained by injecting a fault at position ``(0, 0)`` of round
0. :class:`FaultTable` stores those templates and expands them to any site.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Optional, Sequence

import numpy as np

from .circuit_sim import simulate
from .errors import DomainError, GraphBuildError
from .lattice import (
    CHANNEL_CLASSES,
    DUAL,
    GRAPH_KINDS,
    NUM_CLASSES,
    PRIMAL,
    FaultSite,
    LatticeParams,
    component_probability,
    make_site,
)

EDGE_KINDS = ("spacelike", "timelike", "diagonal")
MAX_INT_WEIGHT = 1 << 62


def edge_weight(p_e: float) -> float:
    """Log-odds weight ``ln((1 - p_e) / p_e)``."""
    if not 0.0 < p_e < 1.0:
        raise DomainError(f"edge probability must lie in (0, 1), got {p_e}")
    return math.log((1.0 - p_e) / p_e)


@dataclass(frozen=True)
class WeightMode:
    name: str  # weighted | unweighted | truncated
    epsilon: Optional[float] = None

    def __post_init__(self):
        if self.name not in ("weighted", "unweighted", "truncated"):
            raise DomainError(f"unknown weight mode {self.name!r}")
        if self.name == "truncated" and (self.epsilon is None or not self.epsilon > 0):
            raise DomainError(f"truncated mode needs epsilon > 0, got {self.epsilon}")

    @classmethod
    def weighted(cls) -> "WeightMode":
        return cls("weighted")

    @classmethod
    def unweighted(cls) -> "WeightMode":
        return cls("unweighted")

    @classmethod
    def truncated(cls, epsilon: float = 0.1) -> "WeightMode":
        return cls("truncated", float(epsilon))

    def __str__(self):
        return f"truncated({self.epsilon:g})" if self.name == "truncated" else self.name


@dataclass(frozen=True)
class EdgeRecord:
    endpoints: tuple[tuple, tuple]
    p_sum: float
    weight: float
    kind: str
    logical_effect: tuple[int, int]


# ---------------------------------------------------------------------------
# fault templates


@dataclass(frozen=True)
class FaultTemplate:
    channel: int
    component: int
    probability: float
    primal: tuple  # ((t, i, j), ...) flipped detectors for a fault at round 0, (0, 0)
    dual: tuple
    x_data: tuple  # data qubits carrying a residual X after the round
    z_data: tuple


class FaultTable:
    """Fault templates of a lattice, expandable to every fault site."""

    def __init__(self, params: LatticeParams):
        self.params = params
        d = params.d
        probe = LatticeParams(d, 1, params.p)
        offsets = []
        templates = []
        for channel, cls in enumerate(CHANNEL_CLASSES):
            offsets.append(len(templates))
            for comp in range(1, cls.ncomp + 1):
                site = make_site(probe, 0, channel, 0, 0, comp)
                templates.append(_template_from(probe, site))
        self.templates: tuple[FaultTemplate, ...] = tuple(templates)
        self.offsets = np.array(offsets + [len(templates)], dtype=np.int32)
        self._check_templates()

    def _check_templates(self) -> None:
        for k, tmpl in enumerate(self.templates):
            name = CHANNEL_CLASSES[tmpl.channel].name
            for kind, dets in ((PRIMAL, tmpl.primal), (DUAL, tmpl.dual)):
                if len(dets) > 2:
                    raise GraphBuildError(f"{name}/{tmpl.component} excites {len(dets)} {kind} detectors")
                if len(dets) == 1:
                    raise GraphBuildError(f"{name}/{tmpl.component} excites a single {kind} detector")
            table = self.logical_table(k)
            if not tmpl.primal and np.any(table & 3):
                raise GraphBuildError(f"undetected X-type logical from {name}/{tmpl.component}")
            if not tmpl.dual and np.any(table & 12):
                raise GraphBuildError(f"undetected Z-type logical from {name}/{tmpl.component}")

    def template_index(self, channel: int, component: int) -> int:
        return int(self.offsets[channel]) + component - 1

    def logical_table(self, index: int) -> np.ndarray:
        """``(d, d)`` crossing masks of a template translated by ``(i, j)``."""
        return self._logical_tables[index]

    @cached_property
    def _logical_tables(self) -> np.ndarray:
        d = self.params.d
        nd = d * d
        out = np.zeros((len(self.templates), d, d), dtype=np.uint8)
        for k, tmpl in enumerate(self.templates):
            for bits, qubits in ((1, tmpl.x_data), (4, tmpl.z_data)):
                for q in qubits:
                    a, b = divmod(q % nd, d)
                    horizontal = q < nd
                    # X on h edges crosses the row cut, X on v edges the column cut;
                    # Z on v edges crosses the row cut, Z on h edges the column cut.
                    row_cut = horizontal if bits == 1 else not horizontal
                    if row_cut:
                        out[k, (-a) % d, :] ^= bits
                    else:
                        out[k, :, (-b) % d] ^= bits << 1
        return out

    def site_effect(self, site: FaultSite) -> tuple[np.ndarray, np.ndarray, int]:
        """Sorted primal events, sorted dual events and crossing mask of one fault."""
        d = self.params.d
        nd = d * d
        k = self.template_index(site.channel, site.component)
        tmpl = self.templates[k]
        out = []
        for dets in (tmpl.primal, tmpl.dual):
            idx = [(site.round + t) * nd + ((site.i + a) % d) * d + (site.j + b) % d for t, a, b in dets]
            out.append(np.array(sorted(idx), dtype=np.int64))
        return out[0], out[1], int(self.logical_table(k)[site.i, site.j])

    def kernel_arrays(self) -> dict:
        """Flat arrays consumed by the compiled and fallback shot samplers."""
        n = len(self.templates)
        counts = np.zeros((n, 2), dtype=np.int32)
        dets = np.zeros((n, 2, 2, 3), dtype=np.int32)
        for k, tmpl in enumerate(self.templates):
            for g, group in enumerate((tmpl.primal, tmpl.dual)):
                counts[k, g] = len(group)
                for a, det in enumerate(group):
                    dets[k, g, a] = det
        ncomp = np.array([c.ncomp for c in CHANNEL_CLASSES], dtype=np.int32)
        return {
            "offsets": np.ascontiguousarray(self.offsets[:NUM_CLASSES]),
            "ncomp": ncomp,
            "counts": counts.ravel(),
            "dets": dets.ravel(),
            "logical": np.ascontiguousarray(self._logical_tables.reshape(n, -1)).ravel(),
        }


def _template_from(probe: LatticeParams, site: FaultSite) -> FaultTemplate:
    d = probe.d
    nd = d * d
    rec, frame = simulate(d, 1, [(0, site.channel, 0, 0, site.component)], return_frame=True)
    primal = tuple((int(k) // nd, (int(k) % nd) // d, int(k) % d) for k in rec.primal_indices())
    dual = tuple((int(k) // nd, (int(k) % nd) // d, int(k) % d) for k in rec.dual_indices())
    x_data = tuple(np.flatnonzero(frame.x[: 2 * nd]).tolist())
    z_data = tuple(np.flatnonzero(frame.z[: 2 * nd]).tolist())
    return FaultTemplate(site.channel, site.component, site.probability, primal, dual, x_data, z_data)


# ---------------------------------------------------------------------------
# decoder graph


@dataclass(frozen=True, eq=False)
class DecoderGraph:
    """Weighted decoder graph of one syndrome type.

    ``weight_int`` holds the weights in integer units of ``unit`` so cluster
    growth uses exact integer arithmetic in every mode.
    """

    kind: str
    num_nodes: int
    eu: np.ndarray
    ev: np.ndarray
    p_sum: np.ndarray
    weight: np.ndarray
    weight_int: np.ndarray
    unit: float
    edge_kind: np.ndarray
    logical: np.ndarray
    mode: WeightMode
    d: Optional[int] = None
    rounds: Optional[int] = None
    p: Optional[float] = None
    _adjacency: tuple = field(default=None, repr=False)

    def __post_init__(self):
        for name in ("eu", "ev", "p_sum", "weight", "weight_int", "edge_kind", "logical"):
            arr = getattr(self, name)
            if len(arr) != len(self.eu):
                raise GraphBuildError(f"edge array {name} has wrong length")
            arr.setflags(write=False)
        if np.any(self.eu == self.ev):
            raise GraphBuildError("self-loop edge")
        if len(self.eu) and (self.eu.min() < 0 or max(self.eu.max(), self.ev.max()) >= self.num_nodes):
            raise GraphBuildError("edge endpoint out of range")
        if np.any(self.weight_int <= 0):
            raise GraphBuildError("non-positive growth weight")

    @classmethod
    def from_edges(
        cls,
        num_nodes: int,
        edges: Sequence[tuple[int, int]],
        weights: Sequence[float],
        mode: Optional[WeightMode] = None,
        logical: Optional[Sequence[int]] = None,
        kind: str = PRIMAL,
    ) -> "DecoderGraph":
        """Graph from an explicit edge list (weights taken as given)."""
        edges = np.asarray(edges, dtype=np.int32).reshape(-1, 2)
        w = np.asarray(weights, dtype=np.float64)
        m = len(edges)
        le = np.zeros(m, dtype=np.uint8) if logical is None else np.asarray(logical, dtype=np.uint8)
        p_sum = 1.0 / (1.0 + np.exp(w))
        return _finish(
            kind, num_nodes, edges[:, 0].copy(), edges[:, 1].copy(), p_sum, w,
            np.zeros(m, dtype=np.uint8), le, mode or WeightMode.weighted(),
        )

    @property
    def num_edges(self) -> int:
        return len(self.eu)

    # adjacency -----------------------------------------------------------
    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """``(indptr, incident_edges)`` sorted by edge index within each node."""
        m = self.num_edges
        ends = np.concatenate([self.eu, self.ev]).astype(np.int64)
        ids = np.concatenate([np.arange(m), np.arange(m)]).astype(np.int32)
        order = np.lexsort((ids, ends))
        indptr = np.zeros(self.num_nodes + 1, dtype=np.int32)
        np.cumsum(np.bincount(ends, minlength=self.num_nodes), out=indptr[1:])
        return indptr, np.ascontiguousarray(ids[order])

    def incident(self, v: int) -> np.ndarray:
        indptr, adj = self.csr
        return adj[indptr[v]:indptr[v + 1]]

    @cached_property
    def rank(self) -> np.ndarray:
        """Position of each edge in the global ``(weight, index)`` order."""
        order = np.lexsort((np.arange(self.num_edges), self.weight_int))
        rank = np.empty(self.num_edges, dtype=np.int32)
        rank[order] = np.arange(self.num_edges, dtype=np.int32)
        return rank

    @cached_property
    def growth_guard(self) -> int:
        return int(sum(int(w) for w in self.weight_int)) + self.num_nodes

    # detectors -----------------------------------------------------------
    def detector_coords(self, index: int) -> tuple[int, int, int]:
        d = self.d
        t, rem = divmod(int(index), d * d)
        return t, rem // d, rem % d

    def detector_index(self, t: int, i: int, j: int) -> int:
        d = self.d
        return t * d * d + (i % d) * d + (j % d)

    def detectors(self) -> np.ndarray:
        d = self.d
        idx = np.arange(self.num_nodes)
        return np.stack([idx // (d * d), (idx % (d * d)) // d, idx % d], axis=1)

    def find_edge(self, a: int, b: int) -> int:
        for e in self.incident(a):
            if b in (self.eu[e], self.ev[e]):
                return int(e)
        raise KeyError((a, b))

    # corrections ---------------------------------------------------------
    def induced_flips(self, edges) -> np.ndarray:
        """Sorted detectors touched an odd number of times by ``edges``."""
        edges = np.asarray(edges, dtype=np.int64)
        flips = np.bincount(np.concatenate([self.eu[edges], self.ev[edges]]), minlength=self.num_nodes)
        return np.flatnonzero(flips & 1)

    def logical_of(self, edges) -> int:
        edges = np.asarray(edges, dtype=np.int64)
        return int(np.bitwise_xor.reduce(self.logical[edges])) if len(edges) else 0

    def total_weight(self, edges) -> float:
        return float(np.sum(self.weight[np.asarray(edges, dtype=np.int64)]))

    def edge_record(self, e: int) -> EdgeRecord:
        le = int(self.logical[e])
        u, v = int(self.eu[e]), int(self.ev[e])
        ends = (self.detector_coords(u), self.detector_coords(v)) if self.d else (u, v)
        return EdgeRecord(ends, float(self.p_sum[e]), float(self.weight[e]), EDGE_KINDS[self.edge_kind[e]], (le & 1, le >> 1))

    def edge_records(self) -> Iterator[EdgeRecord]:
        for e in range(self.num_edges):
            yield self.edge_record(e)

    def with_weights(self, weights: np.ndarray, mode: WeightMode) -> "DecoderGraph":
        """Same edge set with new real weights, integerized for ``mode``."""
        return _finish(
            self.kind, self.num_nodes, self.eu.copy(), self.ev.copy(), self.p_sum.copy(),
            np.asarray(weights, dtype=np.float64), self.edge_kind.copy(), self.logical.copy(), mode,
            self.d, self.rounds, self.p,
        )


def dyadic_integers(weights: np.ndarray) -> tuple[np.ndarray, float]:
    """Exact integer representation of positive doubles on a common power-of-two grid.

    Returns ``(ints, unit)`` with ``weights == ints * unit`` exactly.
    """
    w = np.asarray(weights, dtype=np.float64)
    if len(w) == 0:
        return np.zeros(0, dtype=np.int64), 1.0
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise DomainError("weighted mode needs finite positive weights")
    mant, expo = np.frexp(w)
    m53 = (mant * 2.0 ** 53).astype(np.int64)  # exact: mantissa has 53 bits
    low = int(expo.min())
    shifts = (expo - low).astype(np.int64)
    tz = int(np.min([_trailing_zeros(int(x)) for x in np.unique(m53)]))
    m53 >>= tz
    if int(shifts.max()) + 53 - tz >= 62:
        raise GraphBuildError("weight range too wide for exact 64-bit growth arithmetic")
    ints = m53 << shifts
    unit = math.ldexp(1.0, low - 53 + tz)
    return ints, unit


def _trailing_zeros(x: int) -> int:
    return (x & -x).bit_length() - 1


def integer_weights(weights: np.ndarray, mode: WeightMode) -> tuple[np.ndarray, np.ndarray, float]:
    """``(real_weights, int_weights, unit)`` for a weight mode."""
    w = np.asarray(weights, dtype=np.float64)
    if mode.name == "unweighted":
        return np.ones_like(w), np.ones(len(w), dtype=np.int64), 1.0
    if mode.name == "truncated":
        eps = mode.epsilon
        ints = np.maximum(np.floor(w / eps + 0.5), 1.0).astype(np.int64)
        return ints * eps, ints, eps
    ints, unit = dyadic_integers(w)
    return w.copy(), ints, unit


def quantize_weights(graph: DecoderGraph, epsilon: float) -> DecoderGraph:
    """Round weights to the nearest multiple of ``epsilon`` (minimum one unit)."""
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    if np.any(graph.weight <= 0):
        raise DomainError("quantization needs positive weights")
    return graph.with_weights(graph.weight, WeightMode.truncated(epsilon))


def _finish(kind, num_nodes, eu, ev, p_sum, w, edge_kind, logical, mode, d=None, rounds=None, p=None):
    real, ints, unit = integer_weights(w, mode)
    return DecoderGraph(
        kind, int(num_nodes), eu.astype(np.int32), ev.astype(np.int32), np.asarray(p_sum, dtype=np.float64),
        real, ints, unit, edge_kind.astype(np.uint8), logical.astype(np.uint8), mode, d, rounds, p,
    )


def build_decoder_graphs(
    params: LatticeParams, mode: WeightMode = WeightMode.weighted(), table: Optional[FaultTable] = None
) -> tuple[DecoderGraph, DecoderGraph]:
    """Primal and dual decoder graphs of a lattice."""
    table = table or FaultTable(params)
    return tuple(_build_graph(params, table, kind, mode) for kind in GRAPH_KINDS)


def _build_graph(params: LatticeParams, table: FaultTable, kind: str, mode: WeightMode) -> DecoderGraph:
    d, rounds = params.d, params.rounds
    nd = d * d
    g = GRAPH_KINDS.index(kind)
    lbits = 0 if g == 0 else 2

    # group templates exciting the same relative detector pair
    classes: dict[tuple, list] = {}
    for k, tmpl in enumerate(table.templates):
        dets = tmpl.primal if g == 0 else tmpl.dual
        if len(dets) == 2:
            classes.setdefault(tuple(sorted(dets)), []).append(k)

    r = np.arange(rounds)[:, None, None]
    ii = np.arange(d)[None, :, None]
    jj = np.arange(d)[None, None, :]
    us, vs, ps, les = [], [], [], []
    for (a, b), members in classes.items():
        tables = [(table.logical_table(k) >> lbits) & 3 for k in members]
        for k, tab in zip(members[1:], tables[1:]):
            if not np.array_equal(tab, tables[0]):
                raise GraphBuildError(f"faults on one edge disagree on logical effect (template {k})")
        prob = sum(component_probability(table.templates[k].channel, params.p) for k in members)
        u = (r + a[0]) * nd + ((ii + a[1]) % d) * d + (jj + a[2]) % d
        v = (r + b[0]) * nd + ((ii + b[1]) % d) * d + (jj + b[2]) % d
        u, v = np.broadcast_arrays(u, v)
        us.append(u.ravel())
        vs.append(v.ravel())
        ps.append(np.full(u.size, prob))
        les.append(np.broadcast_to(tables[0][None], u.shape).ravel())
    u = np.concatenate(us).astype(np.int64)
    v = np.concatenate(vs).astype(np.int64)
    if np.any(u == v):
        raise GraphBuildError("a fault excites the same detector twice")
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    n_det = params.detectors_per_graph
    keys, inverse = np.unique(lo * n_det + hi, return_inverse=True)
    p_sum = np.bincount(inverse, weights=np.concatenate(ps))
    le = np.concatenate(les).astype(np.int16)
    le_min = np.full(len(keys), 99, dtype=np.int16)
    le_max = np.full(len(keys), -1, dtype=np.int16)
    np.minimum.at(le_min, inverse, le)
    np.maximum.at(le_max, inverse, le)
    if np.any(le_min != le_max):
        raise GraphBuildError("faults grouped on one edge disagree on logical effect")
    eu, ev = keys // n_det, keys % n_det
    if np.any(p_sum >= 0.5):
        raise GraphBuildError("edge probability >= 0.5 gives a non-positive weight")
    weights = np.log((1.0 - p_sum) / p_sum)

    tu, tv = eu // nd, ev // nd
    su, sv = eu % nd, ev % nd
    edge_kind = np.where(tu == tv, 0, np.where(su == sv, 1, 2))
    return _finish(kind, n_det, eu, ev, p_sum, weights, edge_kind, le_min, mode, d, rounds, params.p)


# ---------------------------------------------------------------------------
# serialization


def _sig9(x: float) -> float:
    return float(f"{x:.9g}")


def graphs_to_json(graphs: Sequence[DecoderGraph]) -> str:
    """Serialize graphs built from one lattice to the graph-file JSON format."""
    first = graphs[0]
    doc = {
        "d": first.d,
        "rounds": first.rounds,
        "p": first.p,
        "mode": first.mode.name,
        "epsilon": first.mode.epsilon,
        "graphs": [],
    }
    for g in graphs:
        edges = [
            [int(g.eu[e]), int(g.ev[e]), _sig9(g.p_sum[e]), _sig9(g.weight[e]), EDGE_KINDS[g.edge_kind[e]],
             int(g.logical[e] & 1), int(g.logical[e] >> 1)]
            for e in range(g.num_edges)
        ]
        doc["graphs"].append({"kind": g.kind, "detectors": g.detectors().tolist(), "edges": edges})
    return json.dumps(doc)


def graphs_from_json(text: str) -> tuple[DecoderGraph, ...]:
    doc = json.loads(text)
    mode = WeightMode(doc["mode"], doc.get("epsilon"))
    d, rounds = doc["d"], doc["rounds"]
    out = []
    for gdoc in doc["graphs"]:
        dets = [tuple(x) for x in gdoc["detectors"]]
        index = [t * d * d + i * d + j for t, i, j in dets]
        edges = gdoc["edges"]
        eu = np.array([index[e[0]] for e in edges], dtype=np.int32)
        ev = np.array([index[e[1]] for e in edges], dtype=np.int32)
        p_sum = np.array([e[2] for e in edges], dtype=np.float64)
        w = np.array([e[3] for e in edges], dtype=np.float64)
        kind = np.array([EDGE_KINDS.index(e[4]) for e in edges], dtype=np.uint8)
        le = np.array([e[5] | (e[6] << 1) for e in edges], dtype=np.uint8)
        out.append(_finish(gdoc["kind"], len(dets), eu, ev, p_sum, w, kind, le, mode, d, rounds, doc["p"]))
    return tuple(out)
