"""Weighted union-find decoding: cluster growth by the minimum boundary weight,
then peeling of a minimum-weight spanning forest of the erasure.

The heavy lifting happens in the selected kernel backend (compiled when
available); this module adapts it to :class:`DecoderGraph` objects.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _backend
from ._fallback import ClusterForest
from .decoder_graph import DecoderGraph
from .errors import OddSyndromeError

__all__ = [
    "ClusterForest",
    "Correction",
    "Erasure",
    "UnionFindDecoder",
    "decode",
    "make_kernel",
    "peel",
    "syndrome_validation",
]


@dataclass(frozen=True)
class Erasure:
    edges: tuple[int, ...]

    def __len__(self):
        return len(self.edges)


@dataclass(frozen=True, eq=False)
class Correction:
    """Edge set returned by a decoder, with its induced flips and logical effect."""

    edges: np.ndarray
    flips: np.ndarray
    logical: int
    growth_steps: int = 0
    erasure_size: int = field(default=0)

    @classmethod
    def from_edges(cls, graph: DecoderGraph, edges: Sequence[int], growth_steps: int = 0, erasure_size: int = 0):
        edges = np.asarray(sorted(int(e) for e in edges), dtype=np.int64)
        return cls(edges, graph.induced_flips(edges), graph.logical_of(edges), growth_steps, erasure_size)

    @property
    def logical_bits(self) -> tuple[int, int]:
        return self.logical & 1, self.logical >> 1

    def __len__(self):
        return len(self.edges)


def as_event_indices(events, num_nodes: int) -> np.ndarray:
    """Sorted detector indices from an index list or a boolean/0-1 bitset."""
    arr = np.asarray(events)
    if arr.dtype == bool or (arr.ndim == 1 and len(arr) == num_nodes and arr.dtype == np.uint8):
        return np.flatnonzero(arr).astype(np.int32)
    idx = np.unique(arr.astype(np.int64))
    if len(idx) != len(arr):
        raise ValueError("duplicate detection events")
    if len(idx) and (idx[0] < 0 or idx[-1] >= num_nodes):
        raise ValueError("detection event out of range")
    return idx.astype(np.int32)


def make_kernel(graph: DecoderGraph, backend: Optional[str] = None):
    """Fresh decoder kernel (owns its scratch state) for ``graph``."""
    kernels = _backend.get(backend)
    indptr, adj = graph.csr
    return kernels.UFKernel(
        graph.num_nodes, indptr, adj, graph.eu, graph.ev, graph.weight_int, graph.rank, graph.growth_guard
    )


class UnionFindDecoder:
    """Reusable decoder over one immutable graph.

    An instance serves one call at a time; give each worker thread its own.
    """

    def __init__(self, graph: DecoderGraph, backend: Optional[str] = None):
        self.graph = graph
        self.kernel = make_kernel(graph, backend)

    def decode(self, events) -> Correction:
        idx = as_event_indices(events, self.graph.num_nodes)
        edges, steps, erased = self.kernel.decode(idx)
        return Correction.from_edges(self.graph, edges, steps, erased)

    def syndrome_validation(self, events) -> Erasure:
        idx = as_event_indices(events, self.graph.num_nodes)
        if len(idx) & 1:
            raise OddSyndromeError(f"{len(idx)} detection events")
        return Erasure(tuple(int(e) for e in self.kernel.validate(idx)))

    def peel(self, erasure: Erasure, events) -> Correction:
        idx = as_event_indices(events, self.graph.num_nodes)
        edges = self.kernel.peel(list(erasure.edges), idx)
        return Correction.from_edges(self.graph, edges, 0, len(erasure))

    @property
    def growth_steps(self) -> int:
        return int(self.kernel.steps)


def decode(graph: DecoderGraph, events, backend: Optional[str] = None) -> Correction:
    return UnionFindDecoder(graph, backend).decode(events)


def syndrome_validation(graph: DecoderGraph, events, backend: Optional[str] = None) -> Erasure:
    return UnionFindDecoder(graph, backend).syndrome_validation(events)


def peel(graph: DecoderGraph, erasure: Erasure, events, backend: Optional[str] = None) -> Correction:
    return UnionFindDecoder(graph, backend).peel(erasure, events)
