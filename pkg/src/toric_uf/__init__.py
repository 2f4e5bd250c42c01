"""Union-find decoding of the toric code under circuit-level depolarizing noise.

Modules
-------
lattice, circuit_sim
    Toric-code layout, the six-step extraction circuit and Pauli-frame simulation.
decoder_graph
    Space-time decoder graphs built from exhaustive single-fault enumeration.
uf_decoder
    Weighted, truncated and unweighted union-find decoding with peeling.
matching_oracle
    Exact minimum-weight matching for small event sets.
harness, cli
    Monte Carlo experiments, estimators, timing and the ``toric-uf`` command.
"""

from ._backend import BACKEND
from .circuit_sim import NoiseParams, PauliFrame, ShotRecord, build_schedule, inject_fault, sample_shot, step_frame
from .decoder_graph import (
    DecoderGraph,
    FaultTable,
    WeightMode,
    build_decoder_graphs,
    edge_weight,
    graphs_from_json,
    graphs_to_json,
    quantize_weights,
)
from .errors import (
    DomainError,
    GraphBuildError,
    InsufficientData,
    InvalidSite,
    NoCrossing,
    NonTerminationGuard,
    OddSyndromeError,
    ParityError,
    ScheduleError,
    ShotError,
    TooManyEvents,
    ToricUFError,
)
from .harness import (
    ExperimentConfig,
    ExperimentStats,
    LambdaEstimate,
    benchmark_decoder,
    estimate_lambda,
    estimate_threshold,
    run_memory_experiment,
)
from .lattice import FaultSite, LatticeParams, enumerate_fault_sites
from .matching_oracle import exact_mwpm
from .uf_decoder import Correction, Erasure, UnionFindDecoder, decode, peel, syndrome_validation

__version__ = "0.1.0"
