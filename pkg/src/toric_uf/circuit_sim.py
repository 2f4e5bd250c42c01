"""Pauli-frame simulation of the six-step toric-code extraction circuit.

Each round prepares every ancilla, runs four CNOT layers (north, west, east,
south) and measures. X-check ancillas control their CNOTs, Z-check ancillas
are targets. Data qubits idle during the preparation and measurement steps;
ancillas are never idle inside a round, so they carry no idle noise.

The simulator tracks one X bit and one Z bit per qubit. Noise is drawn from
the per-shot stream of :mod:`toric_uf.rng`; the same draws drive the compiled
shot sampler, so both produce bit-identical records.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .errors import ScheduleError
from .lattice import (
    CHANNEL_CLASSES,
    CNOT_LAYERS,
    NUM_CLASSES,
    NUM_P_CLASSES,
    FaultSite,
    LatticeParams,
    channel_location,
    h_edge,
    v_edge,
    validate_site,
    x_ancilla,
    x_check_data,
    z_ancilla,
    z_check_data,
)
from .rng import ShotStream, geometric_hits


@dataclass(frozen=True)
class NoiseParams:
    p: float
    seed: int = 0
    shot_index: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p < 0.5:
            raise ValueError(f"p must lie in [0, 0.5), got {self.p}")


@dataclass
class PauliFrame:
    x: np.ndarray
    z: np.ndarray

    @classmethod
    def zeros(cls, d: int) -> "PauliFrame":
        n = 4 * d * d
        return cls(np.zeros(n, dtype=np.uint8), np.zeros(n, dtype=np.uint8))

    def copy(self) -> "PauliFrame":
        return PauliFrame(self.x.copy(), self.z.copy())


@dataclass(frozen=True)
class Timestep:
    kind: str  # prepare | cnot | measure
    name: str
    controls: Optional[np.ndarray] = None
    targets: Optional[np.ndarray] = None
    x_ancillas: Optional[np.ndarray] = None
    z_ancillas: Optional[np.ndarray] = None


@dataclass(frozen=True)
class Schedule:
    d: int
    steps: tuple

    @property
    def cnot_layers(self) -> tuple:
        return tuple(s for s in self.steps if s.kind == "cnot")


def build_schedule(d: int) -> Schedule:
    """Six timesteps of one extraction round on a ``d x d`` torus.

    CNOT ``k`` of a layer belongs to the X check at vertex ``k`` when
    ``k < d*d`` and to the Z check at plaquette ``k - d*d`` otherwise.
    """
    if d < 3:
        raise ScheduleError(f"distance must be >= 3, got {d}")
    nd = d * d
    xa = np.array([x_ancilla(d, i, j) for i in range(d) for j in range(d)], dtype=np.intp)
    za = np.array([z_ancilla(d, i, j) for i in range(d) for j in range(d)], dtype=np.intp)
    steps = [Timestep("prepare", "prepare", x_ancillas=xa, z_ancillas=za)]
    for k, name in enumerate(CNOT_LAYERS):
        ctrl = np.empty(2 * nd, dtype=np.intp)
        tgt = np.empty(2 * nd, dtype=np.intp)
        for i in range(d):
            for j in range(d):
                q = i * d + j
                ctrl[q], tgt[q] = xa[q], x_check_data(d, i, j)[k]
                ctrl[nd + q], tgt[nd + q] = z_check_data(d, i, j)[k], za[q]
        used = np.concatenate([ctrl, tgt])
        if len(np.unique(used)) != len(used):
            raise ScheduleError(f"qubit reused in CNOT layer {name}")
        data_used = np.sort(used[used < 2 * nd])
        if not np.array_equal(data_used, np.arange(2 * nd)):
            raise ScheduleError(f"layer {name} does not touch every data qubit once")
        steps.append(Timestep("cnot", name, controls=ctrl, targets=tgt))
    steps.append(Timestep("measure", "measure", x_ancillas=xa, z_ancillas=za))
    return Schedule(d, tuple(steps))


def step_frame(frame: PauliFrame, timestep: Timestep):
    """Propagate ``frame`` noiselessly through one timestep.

    Returns ``(new_frame, outcomes)``; ``outcomes`` is ``None`` except on the
    measurement step, where it is ``(x_check_flips, z_check_flips)``.
    """
    out = frame.copy()
    outcomes = None
    if timestep.kind == "prepare":
        out.x[timestep.x_ancillas] = 0
        out.z[timestep.x_ancillas] = 0
        out.x[timestep.z_ancillas] = 0
        out.z[timestep.z_ancillas] = 0
    elif timestep.kind == "cnot":
        c, t = timestep.controls, timestep.targets
        out.x[t] ^= out.x[c]
        out.z[c] ^= out.z[t]
    elif timestep.kind == "measure":
        outcomes = (out.z[timestep.x_ancillas].copy(), out.x[timestep.z_ancillas].copy())
        out.x[timestep.x_ancillas] = 0
        out.z[timestep.x_ancillas] = 0
        out.x[timestep.z_ancillas] = 0
        out.z[timestep.z_ancillas] = 0
    else:
        raise ScheduleError(f"unknown timestep kind {timestep.kind!r}")
    return out, outcomes


@dataclass(frozen=True, eq=False)
class ShotRecord:
    """Detection events of both graphs plus the true logical-crossing mask.

    Event arrays are indexed ``t*d*d + i*d + j``. ``true_logical`` packs the
    crossing parities of the residual data error (see ``lattice.LOGICAL_*``).
    """

    events_primal: np.ndarray
    events_dual: np.ndarray
    true_logical: int

    def __eq__(self, other):
        if not isinstance(other, ShotRecord):
            return NotImplemented
        return (
            self.true_logical == other.true_logical
            and np.array_equal(self.events_primal, other.events_primal)
            and np.array_equal(self.events_dual, other.events_dual)
        )

    def primal_indices(self) -> np.ndarray:
        return np.flatnonzero(self.events_primal)

    def dual_indices(self) -> np.ndarray:
        return np.flatnonzero(self.events_dual)

    @property
    def logical_bits(self) -> tuple[int, int, int, int]:
        return tuple((self.true_logical >> b) & 1 for b in range(4))


def crossing_parities(d: int, x: np.ndarray, z: np.ndarray) -> int:
    """Logical-crossing mask of a data-qubit Pauli frame."""
    row0_h = [h_edge(d, 0, j) for j in range(d)]
    col0_v = [v_edge(d, i, 0) for i in range(d)]
    row0_v = [v_edge(d, 0, j) for j in range(d)]
    col0_h = [h_edge(d, i, 0) for i in range(d)]
    mask = 0
    mask |= int(x[row0_h].sum() & 1)
    mask |= int(x[col0_v].sum() & 1) << 1
    mask |= int(z[row0_v].sum() & 1) << 2
    mask |= int(z[col0_h].sum() & 1) << 3
    return mask


def _apply_fault(frame: PauliFrame, d: int, channel: int, i: int, j: int, comp: int, meas_flip) -> None:
    cls = CHANNEL_CLASSES[channel]
    loc = channel_location(d, channel, i, j)
    if cls.kind == "idle":
        frame.x[loc] ^= comp in (1, 2)
        frame.z[loc] ^= comp in (2, 3)
    elif cls.kind == "prep":
        if cls.target == "Z":
            frame.x[loc] ^= 1
        else:
            frame.z[loc] ^= 1
    elif cls.kind == "meas":
        meas_flip[cls.target][i * d + j] ^= 1
    else:
        layer = _schedule_for(d).cnot_layers[cls.layer]
        c, t = layer.controls[loc], layer.targets[loc]
        pc, pt = comp >> 2, comp & 3
        frame.x[c] ^= pc in (1, 2)
        frame.z[c] ^= pc in (2, 3)
        frame.x[t] ^= pt in (1, 2)
        frame.z[t] ^= pt in (2, 3)


_schedules: dict[int, Schedule] = {}


def _schedule_for(d: int) -> Schedule:
    if d not in _schedules:
        _schedules[d] = build_schedule(d)
    return _schedules[d]


def simulate(d: int, rounds: int, faults: Iterable[tuple[int, int, int, int, int]], return_frame: bool = False):
    """Run ``rounds`` rounds plus a perfect terminal round with given faults.

    ``faults`` holds ``(round, channel, i, j, component)`` tuples. With
    ``return_frame`` the final Pauli frame is returned alongside the record.
    """
    schedule = _schedule_for(d)
    nd = d * d
    by_step: dict[tuple[int, int], list] = {}
    for r, channel, i, j, comp in faults:
        by_step.setdefault((r, CHANNEL_CLASSES[channel].step), []).append((channel, i, j, comp))
    frame = PauliFrame.zeros(d)
    ev_p = np.zeros((rounds + 1) * nd, dtype=np.uint8)
    ev_d = np.zeros((rounds + 1) * nd, dtype=np.uint8)
    prev_x = np.zeros(nd, dtype=np.uint8)
    prev_z = np.zeros(nd, dtype=np.uint8)
    for r in range(rounds + 1):
        meas_flip = {"X": np.zeros(nd, dtype=np.uint8), "Z": np.zeros(nd, dtype=np.uint8)}
        for s, timestep in enumerate(schedule.steps, start=1):
            frame, outcomes = step_frame(frame, timestep)
            pending = by_step.get((r, s), ())
            if s == 6:
                for f in pending:
                    if CHANNEL_CLASSES[f[0]].kind == "meas":
                        _apply_fault(frame, d, *f, meas_flip)
                xf = outcomes[0] ^ meas_flip["X"]
                zf = outcomes[1] ^ meas_flip["Z"]
                ev_d[r * nd:(r + 1) * nd] = xf ^ prev_x
                ev_p[r * nd:(r + 1) * nd] = zf ^ prev_z
                prev_x, prev_z = xf, zf
                pending = [f for f in pending if CHANNEL_CLASSES[f[0]].kind != "meas"]
            for f in pending:
                _apply_fault(frame, d, *f, meas_flip)
    record = ShotRecord(ev_p, ev_d, crossing_parities(d, frame.x, frame.z))
    return (record, frame) if return_frame else record


def draw_faults(d: int, rounds: int, p: float, seed: int, shot_index: int) -> list[tuple[int, int, int, int, int]]:
    """Faults of one shot as ``(round, channel, i, j, component)`` tuples.

    Channels firing with probability ``p`` are scanned first, ordered by
    round, class and position; the ``2p/3`` channels follow in the same order.
    """
    nd = d * d
    stream = ShotStream(seed, shot_index)
    out = []
    per_round = NUM_P_CLASSES * nd
    for idx in geometric_hits(stream, rounds * per_round, p):
        r, rem = divmod(idx, per_round)
        channel, pos = divmod(rem, nd)
        ncomp = CHANNEL_CLASSES[channel].ncomp
        comp = stream.below(ncomp) + 1 if ncomp > 1 else 1
        out.append((r, channel, pos // d, pos % d, comp))
    per_round = (NUM_CLASSES - NUM_P_CLASSES) * nd
    for idx in geometric_hits(stream, rounds * per_round, 2.0 * p / 3.0):
        r, rem = divmod(idx, per_round)
        k, pos = divmod(rem, nd)
        out.append((r, NUM_P_CLASSES + k, pos // d, pos % d, 1))
    return out


def sample_shot(params: LatticeParams, noise: NoiseParams) -> ShotRecord:
    """Sample one noisy shot by full frame simulation.

    The noise rate comes from ``noise.p``; ``params.p`` is not used, so a
    noiseless shot can be drawn on any lattice.
    """
    faults = draw_faults(params.d, params.rounds, noise.p, noise.seed, noise.shot_index)
    return simulate(params.d, params.rounds, faults)


def inject_fault(params: LatticeParams, site: FaultSite) -> ShotRecord:
    """Propagate exactly one fault, with all sampling disabled."""
    validate_site(params, site)
    return simulate(params.d, params.rounds, [(site.round, site.channel, site.i, site.j, site.component)])


def inject_faults(params: LatticeParams, sites: Iterable[FaultSite]) -> ShotRecord:
    faults = []
    for site in sites:
        validate_site(params, site)
        faults.append((site.round, site.channel, site.i, site.j, site.component))
    return simulate(params.d, params.rounds, faults)
