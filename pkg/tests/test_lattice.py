from collections import Counter

import pytest

from toric_uf.errors import DomainError, InvalidSite
from toric_uf.lattice import (
    CHANNEL_CLASSES,
    LatticeParams,
    enumerate_fault_sites,
    h_edge,
    make_site,
    v_edge,
    validate_site,
    x_check_data,
    z_check_data,
)


@pytest.mark.parametrize("d,rounds", [(3, 1), (3, 3), (5, 5)])
def test_site_count(d, rounds):
    n = 2 * d * d
    per_round = 4 * n * 15 + 2 * n * 3 + n + n
    sites = enumerate_fault_sites(LatticeParams(d, rounds, 0.001))
    assert len(sites) == rounds * per_round
    assert len(set(sites)) == len(sites)


def test_d3_single_round_has_1224_sites():
    assert len(enumerate_fault_sites(LatticeParams(3, 1, 0.003))) == 1224


def test_component_probabilities():
    sites = enumerate_fault_sites(LatticeParams(3, 1, 0.003))
    by_kind = {}
    for s in sites:
        by_kind.setdefault(s.kind, set()).add(s.probability)
    expected = {"cnot": 0.0002, "prep": 0.002, "meas": 0.002, "idle": 0.001}
    for kind, value in expected.items():
        assert len(by_kind[kind]) == 1
        assert by_kind[kind].pop() == pytest.approx(value, rel=1e-12)
    assert all(0 < s.probability < 1 for s in sites)


def test_sites_per_step():
    d = 3
    counts = Counter((s.step, s.kind) for s in enumerate_fault_sites(LatticeParams(d, 1, 0.01)))
    n = 2 * d * d
    assert counts[(1, "idle")] == counts[(6, "idle")] == 3 * n
    assert counts[(1, "prep")] == counts[(6, "meas")] == n
    for step in (2, 3, 4, 5):
        assert counts[(step, "cnot")] == 15 * n


def test_params_validation():
    with pytest.raises(DomainError):
        LatticeParams(2, 1, 0.01)
    with pytest.raises(DomainError):
        LatticeParams(3, 0, 0.01)
    for p in (0.0, 0.5, -0.1):
        with pytest.raises(DomainError):
            LatticeParams(3, 1, p)


def test_x_check_neighbourhood_order():
    d = 3
    # N, W, E, S of vertex (0, 0)
    assert x_check_data(d, 0, 0) == (v_edge(d, 2, 0), h_edge(d, 0, 2), h_edge(d, 0, 0), v_edge(d, 0, 0))
    assert z_check_data(d, 0, 0) == (h_edge(d, 0, 0), v_edge(d, 0, 0), v_edge(d, 0, 1), h_edge(d, 1, 0))


def test_validate_site_rejects_bad_sites():
    params = LatticeParams(3, 2, 0.01)
    good = make_site(params, 1, 3, 2, 2, 15)
    validate_site(params, good)
    bad = [
        make_site(params, 2, 3, 0, 0, 1),  # terminal round is perfect
        make_site(params, 0, 3, 0, 0, 16),
        make_site(params, 0, 0, 3, 0, 1),
        make_site(params, 0, 12, 0, 0, 2),
    ]
    for site in bad:
        with pytest.raises(InvalidSite):
            validate_site(params, site)


def test_channel_table_shape():
    assert len(CHANNEL_CLASSES) == 16
    assert sum(c.kind == "cnot" for c in CHANNEL_CLASSES) == 8
