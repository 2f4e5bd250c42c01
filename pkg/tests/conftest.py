import functools

import pytest

from toric_uf import _backend
from toric_uf.decoder_graph import FaultTable, WeightMode, build_decoder_graphs
from toric_uf.lattice import LatticeParams

BACKENDS = ["python"] + (["cython"] if _backend.BACKEND == "cython" else [])


@functools.lru_cache(maxsize=None)
def graphs_for(d, rounds, p, mode_name="weighted", epsilon=None):
    mode = WeightMode(mode_name, epsilon)
    return build_decoder_graphs(LatticeParams(d, rounds, p), mode)


@functools.lru_cache(maxsize=None)
def table_for(d, rounds, p):
    return FaultTable(LatticeParams(d, rounds, p))


def sampler_for(d, rounds, p, backend=None):
    table = table_for(d, rounds, p if p > 0 else 1e-3)
    return _backend.get(backend).ShotSampler(d, rounds, p, **table.kernel_arrays())


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


_acceptance_lines = []


def record_acceptance(line):
    _acceptance_lines.append(line)


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
