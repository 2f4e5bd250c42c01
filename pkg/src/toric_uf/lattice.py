"""Toric-code lattice layout, noisy-channel classes and fault sites.

Data qubits live on the edges of a ``d x d`` torus. Horizontal edge
``h(i, j)`` joins vertex ``(i, j)`` to ``(i, j+1)`` and has index ``i*d + j``;
vertical edge ``v(i, j)`` joins ``(i, j)`` to ``(i+1, j)`` and has index
``d*d + i*d + j``. X-check ancillas sit on vertices (indices ``2d^2 ..``) and
Z-check ancillas on plaquettes (indices ``3d^2 ..``); plaquette ``(i, j)`` is
the face whose top-left vertex is ``(i, j)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

from .errors import DomainError, InvalidSite

PRIMAL = "primal"  # plaquette (Z-check) events, excited by X-type errors
DUAL = "dual"  # vertex (X-check) events, excited by Z-type errors
GRAPH_KINDS = (PRIMAL, DUAL)

# bits of a logical-crossing mask
LOGICAL_X_H = 1  # X errors crossing the horizontal cut (row-0 horizontal edges)
LOGICAL_X_V = 2  # X errors crossing the vertical cut (column-0 vertical edges)
LOGICAL_Z_H = 4  # Z errors on row-0 vertical edges
LOGICAL_Z_V = 8  # Z errors on column-0 horizontal edges

CNOT_LAYERS = ("N", "W", "E", "S")


@dataclass(frozen=True)
class LatticeParams:
    """Code distance, number of noisy rounds and physical error rate."""

    d: int
    rounds: int
    p: float

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 3:
            raise DomainError(f"distance must be an integer >= 3, got {self.d}")
        if int(self.rounds) != self.rounds or self.rounds < 1:
            raise DomainError(f"rounds must be >= 1, got {self.rounds}")
        if not 0.0 < self.p < 0.5:
            raise DomainError(f"p must lie in (0, 0.5), got {self.p}")

    @property
    def num_data(self) -> int:
        return 2 * self.d * self.d

    @property
    def num_qubits(self) -> int:
        return 4 * self.d * self.d

    @property
    def detectors_per_graph(self) -> int:
        return self.d * self.d * (self.rounds + 1)


def h_edge(d: int, i: int, j: int) -> int:
    return (i % d) * d + (j % d)


def v_edge(d: int, i: int, j: int) -> int:
    return d * d + (i % d) * d + (j % d)


def x_ancilla(d: int, i: int, j: int) -> int:
    return 2 * d * d + (i % d) * d + (j % d)


def z_ancilla(d: int, i: int, j: int) -> int:
    return 3 * d * d + (i % d) * d + (j % d)


def x_check_data(d: int, i: int, j: int) -> tuple[int, int, int, int]:
    """Data qubits of the vertex check at ``(i, j)`` in N, W, E, S order."""
    return (v_edge(d, i - 1, j), h_edge(d, i, j - 1), h_edge(d, i, j), v_edge(d, i, j))


def z_check_data(d: int, i: int, j: int) -> tuple[int, int, int, int]:
    """Data qubits of the plaquette check at ``(i, j)`` in N, W, E, S order."""
    return (h_edge(d, i, j), v_edge(d, i, j), v_edge(d, i, j + 1), h_edge(d, i + 1, j))


class ChannelClass(NamedTuple):
    name: str
    step: int  # 1..6 within a round
    kind: str  # idle | cnot | prep | meas
    ncomp: int  # number of mutually exclusive Pauli/flip components
    target: str  # "h"/"v" for data idles, "X"/"Z" for check-related channels
    layer: int  # CNOT layer index 0..3, -1 otherwise


def _classes() -> tuple[ChannelClass, ...]:
    out = [ChannelClass("idle1_h", 1, "idle", 3, "h", -1), ChannelClass("idle1_v", 1, "idle", 3, "v", -1)]
    for k, name in enumerate(CNOT_LAYERS):
        out.append(ChannelClass(f"cnot_{name}_x", 2 + k, "cnot", 15, "X", k))
        out.append(ChannelClass(f"cnot_{name}_z", 2 + k, "cnot", 15, "Z", k))
    out += [
        ChannelClass("idle6_h", 6, "idle", 3, "h", -1),
        ChannelClass("idle6_v", 6, "idle", 3, "v", -1),
        ChannelClass("prep_x", 1, "prep", 1, "X", -1),
        ChannelClass("prep_z", 1, "prep", 1, "Z", -1),
        ChannelClass("meas_x", 6, "meas", 1, "X", -1),
        ChannelClass("meas_z", 6, "meas", 1, "Z", -1),
    ]
    return tuple(out)


# Classes 0..11 fire with probability p, classes 12..15 with 2p/3.
CHANNEL_CLASSES = _classes()
NUM_CLASSES = len(CHANNEL_CLASSES)
NUM_P_CLASSES = 12
CLASS_INDEX = {c.name: k for k, c in enumerate(CHANNEL_CLASSES)}


def channel_probability(channel: int, p: float) -> float:
    return p if channel < NUM_P_CLASSES else 2.0 * p / 3.0


def component_probability(channel: int, p: float) -> float:
    cls = CHANNEL_CLASSES[channel]
    if cls.kind == "idle":
        return p / 3.0
    if cls.kind == "cnot":
        return p / 15.0
    return 2.0 * p / 3.0


def channel_location(d: int, channel: int, i: int, j: int) -> int:
    """Qubit index (idle/prep/meas) or in-layer CNOT index of a channel."""
    cls = CHANNEL_CLASSES[channel]
    if cls.kind == "idle":
        return h_edge(d, i, j) if cls.target == "h" else v_edge(d, i, j)
    if cls.kind == "cnot":
        return (i * d + j) if cls.target == "X" else (d * d + i * d + j)
    return x_ancilla(d, i, j) if cls.target == "X" else z_ancilla(d, i, j)


@dataclass(frozen=True)
class FaultSite:
    """One elementary fault component of one noisy operation.

    ``location`` is a qubit index for idle, preparation and measurement
    faults and the in-layer CNOT index for gate faults. Components are
    1..3 for X, Y, Z idles and 1..15 for two-qubit Paulis, encoded as
    ``4 * control_pauli + target_pauli`` with I, X, Y, Z = 0..3.
    """

    round: int
    step: int
    location: int
    component: int
    probability: float
    channel: int = field(compare=False)
    i: int = field(compare=False)
    j: int = field(compare=False)

    @property
    def kind(self) -> str:
        return CHANNEL_CLASSES[self.channel].kind


def make_site(params: LatticeParams, round_: int, channel: int, i: int, j: int, component: int) -> FaultSite:
    cls = CHANNEL_CLASSES[channel]
    return FaultSite(
        round=round_,
        step=cls.step,
        location=channel_location(params.d, channel, i, j),
        component=component,
        probability=component_probability(channel, params.p),
        channel=channel,
        i=i,
        j=j,
    )


def validate_site(params: LatticeParams, site: FaultSite) -> None:
    d = params.d
    if not 0 <= site.channel < NUM_CLASSES:
        raise InvalidSite(f"unknown channel class {site.channel}")
    cls = CHANNEL_CLASSES[site.channel]
    if not 0 <= site.round < params.rounds:
        raise InvalidSite(f"round {site.round} is not a noisy round")
    if not (0 <= site.i < d and 0 <= site.j < d):
        raise InvalidSite(f"position ({site.i}, {site.j}) outside the lattice")
    if not 1 <= site.component <= cls.ncomp:
        raise InvalidSite(f"component {site.component} invalid for {cls.name}")
    if site.step != cls.step or site.location != channel_location(d, site.channel, site.i, site.j):
        raise InvalidSite(f"site {site} does not match schedule")


def enumerate_fault_sites(params: LatticeParams) -> list[FaultSite]:
    """Every elementary fault component of every noisy round, in a fixed order."""
    d = params.d
    sites = []
    for r in range(params.rounds):
        for channel, cls in enumerate(CHANNEL_CLASSES):
            for i in range(d):
                for j in range(d):
                    for comp in range(1, cls.ncomp + 1):
                        sites.append(make_site(params, r, channel, i, j, comp))
    return sites
