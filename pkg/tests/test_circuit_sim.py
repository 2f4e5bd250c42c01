import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from toric_uf.circuit_sim import (
    NoiseParams,
    PauliFrame,
    build_schedule,
    draw_faults,
    inject_fault,
    inject_faults,
    sample_shot,
    simulate,
    step_frame,
)
from toric_uf.errors import InvalidSite
from toric_uf.lattice import (
    CLASS_INDEX,
    LatticeParams,
    enumerate_fault_sites,
    h_edge,
    make_site,
    v_edge,
    x_ancilla,
    z_ancilla,
)

from conftest import sampler_for

D3 = LatticeParams(3, 1, 0.01)
D3_SITES = enumerate_fault_sites(D3)


def test_schedule_shape():
    sched = build_schedule(3)
    assert [s.kind for s in sched.steps] == ["prepare", "cnot", "cnot", "cnot", "cnot", "measure"]
    for layer in sched.cnot_layers:
        assert len(layer.controls) == 18
        # X ancillas control, Z ancillas are targets
        assert set(layer.controls[:9]) == {x_ancilla(3, i, j) for i in range(3) for j in range(3)}
        assert set(layer.targets[9:]) == {z_ancilla(3, i, j) for i in range(3) for j in range(3)}
        assert sorted(np.concatenate([layer.targets[:9], layer.controls[9:]])) == list(range(18))


def test_vertex_00_layer_order():
    sched = build_schedule(3)
    touched = [int(layer.targets[0]) for layer in sched.cnot_layers]
    assert touched == [v_edge(3, 2, 0), h_edge(3, 0, 2), h_edge(3, 0, 0), v_edge(3, 0, 0)]


def test_data_idles_per_round():
    d = 5
    sites = enumerate_fault_sites(LatticeParams(d, 1, 0.01))
    idle_locations = {(s.step, s.location) for s in sites if s.kind == "idle"}
    assert len(idle_locations) == 2 * 2 * d * d


def _single_cnot_frame(control_x=0, control_z=0):
    sched = build_schedule(3)
    layer = sched.cnot_layers[0]
    c, t = int(layer.controls[0]), int(layer.targets[0])
    frame = PauliFrame.zeros(3)
    frame.x[c] = control_x
    frame.z[c] = control_z
    return frame, layer, c, t


def test_x_on_control_spreads_to_target():
    frame, layer, c, t = _single_cnot_frame(control_x=1)
    out, outcomes = step_frame(frame, layer)
    assert outcomes is None
    assert out.x[c] == 1 and out.x[t] == 1 and out.x.sum() == 2


def test_z_on_control_stays():
    frame, layer, c, t = _single_cnot_frame(control_z=1)
    out, _ = step_frame(frame, layer)
    assert out.z[c] == 1 and out.z.sum() == 1 and out.x.sum() == 0


def test_zero_frame_full_round():
    frame = PauliFrame.zeros(3)
    for step in build_schedule(3).steps:
        frame, outcomes = step_frame(frame, step)
    assert frame.x.sum() == frame.z.sum() == 0
    assert outcomes[0].sum() == outcomes[1].sum() == 0


def test_measure_clears_ancillas():
    frame = PauliFrame.zeros(3)
    frame.x[:] = 1
    frame.z[:] = 1
    out, (xf, zf) = step_frame(frame, build_schedule(3).steps[-1])
    assert xf.all() and zf.all()
    assert out.x[18:].sum() == 0 and out.z[18:].sum() == 0
    assert out.x[:18].all()


@pytest.mark.parametrize("d,rounds", [(3, 1), (5, 3)])
def test_p_zero_gives_empty_record(d, rounds):
    rec = sample_shot(LatticeParams(d, rounds, 0.01), NoiseParams(0.0, seed=5, shot_index=3))
    assert rec.events_primal.sum() == rec.events_dual.sum() == rec.true_logical == 0
    assert len(rec.events_primal) == d * d * (rounds + 1)


def test_measurement_flip_on_z_check():
    params = LatticeParams(5, 5, 0.01)
    for t in range(params.rounds):
        rec = inject_fault(params, make_site(params, t, CLASS_INDEX["meas_z"], 2, 3, 1))
        assert list(rec.primal_indices()) == [t * 25 + 13, (t + 1) * 25 + 13]
        assert rec.events_dual.sum() == 0
        assert rec.true_logical == 0


def test_last_round_data_x_idle():
    params = LatticeParams(5, 4, 0.01)
    d, t = 5, 3
    rec = inject_fault(params, make_site(params, t, CLASS_INDEX["idle6_h"], 2, 1, 1))
    # X on h edge (2,1) anticommutes with plaquettes (2,1) and (1,1), seen by the terminal layer
    assert sorted(rec.primal_indices()) == [(t + 1) * 25 + 1 * d + 1, (t + 1) * 25 + 2 * d + 1]
    assert rec.events_dual.sum() == 0


def test_prep_flip_gives_timelike_pair():
    params = LatticeParams(3, 3, 0.01)
    rec = inject_fault(params, make_site(params, 1, CLASS_INDEX["prep_z"], 1, 2, 1))
    idx = rec.primal_indices()
    assert len(idx) == 2 and idx[1] - idx[0] == 9 and idx[0] % 9 == 5
    rec = inject_fault(params, make_site(params, 1, CLASS_INDEX["prep_x"], 0, 1, 1))
    idx = rec.dual_indices()
    assert len(idx) == 2 and idx[1] - idx[0] == 9 and rec.events_primal.sum() == 0


def test_y_idle_excites_both_graphs():
    params = LatticeParams(3, 2, 0.01)
    rec = inject_fault(params, make_site(params, 0, CLASS_INDEX["idle1_v"], 1, 1, 2))
    assert rec.events_primal.sum() == 2 and rec.events_dual.sum() == 2


def test_inject_rejects_invalid_site():
    with pytest.raises(InvalidSite):
        inject_fault(D3, make_site(D3, 1, 0, 0, 0, 1))


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(D3_SITES), st.sampled_from(D3_SITES))
def test_linearity_random_pairs(a, b):
    ra, rb = inject_fault(D3, a), inject_fault(D3, b)
    rab = inject_faults(D3, [a, b])
    assert np.array_equal(rab.events_primal, ra.events_primal ^ rb.events_primal)
    assert np.array_equal(rab.events_dual, ra.events_dual ^ rb.events_dual)
    assert rab.true_logical == ra.true_logical ^ rb.true_logical


def test_linearity_exhaustive_over_steps():
    # every pair of sites sharing a round is exercised for a fixed channel pair sweep
    subset = [s for s in D3_SITES if s.i == 0 and s.j == 0]
    single = {s: inject_fault(D3, s) for s in subset}
    for a, b in itertools.combinations(subset, 2):
        rab = inject_faults(D3, [a, b])
        assert np.array_equal(rab.events_primal, single[a].events_primal ^ single[b].events_primal)
        assert np.array_equal(rab.events_dual, single[a].events_dual ^ single[b].events_dual)
        assert rab.true_logical == single[a].true_logical ^ single[b].true_logical


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**64 - 1), st.integers(0, 10**9))
def test_sample_shot_deterministic(seed, shot):
    params = LatticeParams(3, 3, 0.02)
    noise = NoiseParams(0.02, seed, shot)
    assert sample_shot(params, noise) == sample_shot(params, noise)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.integers(0, 10**6), st.sampled_from([0.005, 0.02, 0.05]))
def test_event_parity_even(seed, shot, p):
    rec = sample_shot(LatticeParams(3, 3, 0.01), NoiseParams(p, seed, shot))
    assert rec.events_primal.sum() % 2 == 0
    assert rec.events_dual.sum() % 2 == 0


@pytest.mark.parametrize("d,rounds,p", [(3, 3, 0.02), (5, 2, 0.01)])
def test_table_sampler_matches_frame_simulation(d, rounds, p, backend):
    sampler = sampler_for(d, rounds, p, backend)
    params = LatticeParams(d, rounds, p)
    for shot in range(150):
        rec = sample_shot(params, NoiseParams(p, 99, shot))
        ev_p, ev_d, mask = sampler.sample(99, shot)
        assert list(ev_p) == list(rec.primal_indices())
        assert list(ev_d) == list(rec.dual_indices())
        assert mask == rec.true_logical


def test_draw_faults_components_in_range():
    faults = draw_faults(3, 5, 0.05, 1, 2)
    assert faults
    for r, channel, i, j, comp in faults:
        assert 0 <= r < 5 and 0 <= i < 3 and 0 <= j < 3
        assert 1 <= comp <= (15 if 2 <= channel <= 9 else 3 if channel < 12 else 1)


def test_rate_calibration_cnot_locations():
    # 10^6 shots at p = 0.3%: fraction of CNOT locations that fault is p within 3 sigma
    d, rounds, p, shots = 3, 1, 0.003, 1_000_000
    sampler = sampler_for(d, rounds, p)
    hits = sampler.count_hits(2024, 0, shots)
    n_cnot = 8 * d * d * rounds * shots  # 4 layers x 2d^2 gates
    observed = sum(hits[2:10])
    sigma = math.sqrt(n_cnot * p * (1 - p))
    assert abs(observed - n_cnot * p) <= 3 * sigma
    n_prep = 2 * d * d * rounds * shots
    q = 2 * p / 3
    assert abs(hits[12] + hits[13] - n_prep * q) <= 3 * math.sqrt(n_prep * q * (1 - q))
