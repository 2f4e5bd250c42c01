import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from toric_uf.rng import GOLDEN, MASK64, ShotStream, geometric_hits, mix64, stream_state


def test_mix64_reference_values():
    # SplitMix64 with state 0: first outputs of the reference generator
    state = 0
    out = []
    for _ in range(3):
        state = (state + GOLDEN) & MASK64
        out.append(mix64(state))
    assert out == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


@given(st.integers(0, MASK64), st.integers(0, 2**40))
def test_stream_is_pure_function_of_seed_and_shot(seed, shot):
    a, b = ShotStream(seed, shot), ShotStream(seed, shot)
    assert [a.next_u64() for _ in range(5)] == [b.next_u64() for _ in range(5)]
    assert stream_state(seed, shot) == stream_state(seed, shot)


def test_neighbouring_shots_differ():
    firsts = {ShotStream(7, k).next_u64() for k in range(1000)}
    assert len(firsts) == 1000


@given(st.integers(0, 2**32), st.integers(1, 1000))
def test_uniform_and_below_ranges(seed, n):
    s = ShotStream(seed, 0)
    for _ in range(20):
        u = s.uniform()
        assert 0.0 < u <= 1.0
        assert 0 <= s.below(n) < n


def test_geometric_hits_rate():
    n, q, shots = 5000, 0.01, 200
    total = sum(len(list(geometric_hits(ShotStream(1, k), n, q))) for k in range(shots))
    mean, sd = n * q * shots, math.sqrt(n * q * (1 - q) * shots)
    assert abs(total - mean) < 4 * sd


@settings(max_examples=30)
@given(st.integers(0, 2**32))
def test_geometric_hits_sorted_unique_in_range(seed):
    hits = list(geometric_hits(ShotStream(seed, 3), 400, 0.05))
    assert hits == sorted(set(hits))
    assert all(0 <= h < 400 for h in hits)


def test_geometric_hits_q_zero_is_empty():
    assert list(geometric_hits(ShotStream(0, 0), 100, 0.0)) == []


def test_uniform_is_roughly_uniform():
    s = ShotStream(11, 0)
    u = np.array([s.uniform() for _ in range(20000)])
    counts, _ = np.histogram(u, bins=10, range=(0, 1))
    assert counts.min() > 1800 and counts.max() < 2200
