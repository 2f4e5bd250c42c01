"""Monte Carlo memory experiments, threshold and Lambda estimation, timing.

A memory experiment runs ``rounds`` noisy extraction rounds followed by a
perfect one, decodes both graphs and counts a failure when any of the four
logical-crossing bits of (correction XOR true error) is set.

Shots are split into fixed-size chunks. Each chunk is a pure function of the
seed and its shot range, so results do not depend on the thread count.
"""

from __future__ import annotations

import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _backend
from .decoder_graph import DecoderGraph, FaultTable, WeightMode, build_decoder_graphs
from .errors import InsufficientData, NoCrossing, ShotError, TooManyEvents
from .lattice import LatticeParams
from .uf_decoder import make_kernel

DECODERS = ("uf-weighted", "uf-unweighted", "uf-truncated", "mwpm-oracle")
# graph weights for a noiseless run; no events occur, so the value is immaterial
NOMINAL_P = 1e-3


def weight_mode(decoder: str, epsilon: float = 0.1) -> WeightMode:
    if decoder in ("uf-weighted", "mwpm-oracle"):
        return WeightMode.weighted()
    if decoder == "uf-unweighted":
        return WeightMode.unweighted()
    if decoder == "uf-truncated":
        return WeightMode.truncated(epsilon)
    raise ValueError(f"unknown decoder {decoder!r}; expected one of {DECODERS}")


def is_failure(primal_logical: int, dual_logical: int, true_logical: int) -> bool:
    """True when the residual error crosses any logical cut an odd number of times."""
    return bool((primal_logical ^ (true_logical & 3)) | (dual_logical ^ (true_logical >> 2)))


@dataclass
class ExperimentConfig:
    d_list: Sequence[int]
    p_list: Sequence[float]
    decoder: str = "uf-weighted"
    epsilon: float = 0.1
    shots: int = 10_000
    seed: int = 0
    rounds: Optional[int] = None  # None: rounds = d
    threads: int = 1
    target_failures: Optional[int] = None  # stop once reached; ``shots`` is then a cap
    chunk: int = 4096
    output: Optional[str] = None
    random_weights: bool = False
    w_lo: float = 0.001
    w_hi: float = 0.005
    trials: int = 1000
    backend: Optional[str] = None

    def __post_init__(self):
        weight_mode(self.decoder, self.epsilon)
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if any(not 0.0 <= p < 0.5 for p in self.p_list):
            raise ValueError("p values must lie in [0, 0.5)")
        if self.random_weights and not 0.0 < self.w_lo < self.w_hi < 0.5:
            raise ValueError("random weights need 0 < w_lo < w_hi < 0.5")
        if self.threads < 1 or self.chunk < 1:
            raise ValueError("threads and chunk must be >= 1")

    def rounds_for(self, d: int) -> int:
        return self.rounds if self.rounds is not None else d


@dataclass
class CellStats:
    d: int
    rounds: int
    p: float
    decoder: str
    epsilon: Optional[float]
    shots: int
    failures: int
    seed: int
    wall_ns_total: int
    skipped: int = 0

    @property
    def p_logical(self) -> float:
        return self.failures / self.shots if self.shots else 0.0

    @property
    def stderr(self) -> float:
        pl = self.p_logical
        return math.sqrt(pl * (1.0 - pl) / self.shots) if self.shots else 0.0

    @property
    def wall_ns_per_cycle(self) -> float:
        """Mean decode time of one shot divided by its number of rounds."""
        return self.wall_ns_total / (self.shots * self.rounds) if self.shots else 0.0

    def binomial_interval(self, confidence: float = 0.95) -> tuple[float, float]:
        """Exact (Clopper-Pearson) interval for the logical error rate."""
        from scipy.stats import beta

        a = (1.0 - confidence) / 2.0
        k, n = self.failures, self.shots
        lo = beta.ppf(a, k, n - k + 1) if k > 0 else 0.0
        hi = beta.ppf(1.0 - a, k + 1, n - k) if k < n else 1.0
        return float(lo), float(hi)

    def to_json(self) -> dict:
        out = {
            "d": self.d,
            "rounds": self.rounds,
            "p": self.p,
            "decoder": self.decoder,
            "epsilon": self.epsilon,
            "shots": self.shots,
            "failures": self.failures,
            "p_logical": self.p_logical,
            "stderr": self.stderr,
            "seed": self.seed,
            "wall_ns_total": self.wall_ns_total,
            "wall_ns_per_cycle": self.wall_ns_per_cycle,
        }
        if self.decoder == "mwpm-oracle":
            out["skipped"] = self.skipped
        return out


@dataclass
class ExperimentStats:
    cells: list[CellStats] = field(default_factory=list)

    def get(self, d: int, p: float) -> CellStats:
        for c in self.cells:
            if c.d == d and math.isclose(c.p, p, rel_tol=1e-12, abs_tol=1e-15):
                return c
        raise KeyError((d, p))

    @property
    def distances(self) -> list[int]:
        return sorted({c.d for c in self.cells})

    @property
    def error_rates(self) -> list[float]:
        return sorted({c.p for c in self.cells})

    def to_json(self) -> list[dict]:
        return [c.to_json() for c in self.cells]


# ---------------------------------------------------------------------------
# cell setup


class Cell:
    """Graphs, fault table and kernel factory for one (d, rounds, p, decoder)."""

    def __init__(self, d: int, rounds: int, p: float, decoder: str, epsilon: float = 0.1,
                 graphs: Optional[Sequence[DecoderGraph]] = None, backend: Optional[str] = None):
        self.d, self.rounds, self.p, self.decoder = d, rounds, p, decoder
        self.mode = weight_mode(decoder, epsilon)
        params = LatticeParams(d, rounds, p if p > 0 else NOMINAL_P)
        self.table = FaultTable(params)
        self.graphs = tuple(graphs) if graphs is not None else build_decoder_graphs(params, self.mode, self.table)
        self.backend = backend
        self._arrays = self.table.kernel_arrays()
        self._local = threading.local()

    def sampler(self):
        return _backend.get(self.backend).ShotSampler(self.d, self.rounds, self.p, **self._arrays)

    def workers(self):
        """Per-thread ``(sampler, primal_kernel, dual_kernel)``."""
        w = getattr(self._local, "w", None)
        if w is None:
            w = self._local.w = (self.sampler(), make_kernel(self.graphs[0], self.backend),
                                 make_kernel(self.graphs[1], self.backend))
        return w

    def run_chunk(self, seed: int, start: int, count: int, ns_out=None) -> tuple[int, int, int]:
        """``(failures, decode_ns, skipped)`` over shots ``start .. start+count-1``."""
        if self.decoder == "mwpm-oracle":
            return self._run_oracle(seed, start, count)
        sampler, kp, kd = self.workers()
        kernels = _backend.get(self.backend)
        failures, ns, _ = kernels.run_batch(
            sampler, kp, kd, self.graphs[0].logical, self.graphs[1].logical, seed, start, count, ns_out
        )
        return failures, ns, 0

    def _run_oracle(self, seed: int, start: int, count: int) -> tuple[int, int, int]:
        from .matching_oracle import exact_mwpm

        sampler = self.workers()[0]
        failures = skipped = ns = 0
        for shot in range(start, start + count):
            ev_p, ev_d, mask = sampler.sample(seed, shot)
            t0 = time.perf_counter_ns()
            try:
                cp = exact_mwpm(self.graphs[0], ev_p)
                cd = exact_mwpm(self.graphs[1], ev_d)
            except TooManyEvents:
                skipped += 1
                continue
            except Exception as exc:
                raise ShotError(shot, exc) from exc
            ns += time.perf_counter_ns() - t0
            failures += is_failure(cp.logical, cd.logical, mask)
        return failures, ns, skipped


def run_cell(cell: Cell, shots: int, seed: int, threads: int = 1, chunk: int = 4096,
             target_failures: Optional[int] = None, epsilon: Optional[float] = None) -> CellStats:
    """Run shots for one cell; stop at the first chunk boundary reaching ``target_failures``."""
    starts = list(range(0, shots, chunk))
    failures = ns = skipped = done = 0
    wave = max(1, threads) * 2
    pool = ThreadPoolExecutor(threads) if threads > 1 else None
    try:
        for w0 in range(0, len(starts), wave):
            batch = [(s, min(chunk, shots - s)) for s in starts[w0:w0 + wave]]
            if pool is None:
                results = [cell.run_chunk(seed, s, c) for s, c in batch]
            else:
                results = list(pool.map(lambda sc: cell.run_chunk(seed, *sc), batch))
            stop = False
            for (s, c), (f, t, sk) in zip(batch, results):
                failures += f
                ns += t
                skipped += sk
                done += c
                if target_failures is not None and failures >= target_failures:
                    stop = True
                    break
            if stop:
                break
    finally:
        if pool is not None:
            pool.shutdown()
    eps = cell.mode.epsilon if epsilon is None else epsilon
    return CellStats(cell.d, cell.rounds, cell.p, cell.decoder, eps, done - skipped, failures, seed, ns, skipped)


def run_memory_experiment(config: ExperimentConfig, progress=None) -> ExperimentStats:
    """Logical error rates over the ``d_list x p_list`` grid."""
    stats = ExperimentStats()
    for d in config.d_list:
        for p in config.p_list:
            cell = Cell(d, config.rounds_for(d), p, config.decoder, config.epsilon, backend=config.backend)
            cs = run_cell(cell, config.shots, config.seed, config.threads, config.chunk, config.target_failures)
            stats.cells.append(cs)
            if progress:
                progress(cs)
    return stats


# ---------------------------------------------------------------------------
# estimators


@dataclass
class LambdaEstimate:
    p: float
    ratios: dict  # d -> p_L(d + 2) / p_L(d)
    ratio_stderr: dict
    lambda_: float
    stderr: float

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "ratios": {str(k): v for k, v in self.ratios.items()},
            "ratio_stderr": {str(k): v for k, v in self.ratio_stderr.items()},
            "lambda": self.lambda_,
            "stderr": self.stderr,
        }


def estimate_lambda(stats: ExperimentStats, p: float, distances=(5, 7, 9, 11), min_failures: int = 1000) -> LambdaEstimate:
    """Mean suppression ratio ``p_L(d+2) / p_L(d)`` over consecutive distances."""
    cells = []
    for d in distances:
        try:
            c = stats.get(d, p)
        except KeyError:
            raise InsufficientData(f"no data for d={d}, p={p}") from None
        if c.failures < max(1, min_failures):
            raise InsufficientData(f"d={d}, p={p}: {c.failures} failures < {min_failures}")
        cells.append(c)
    ratios, errs = {}, {}
    for a, b in zip(cells, cells[1:]):
        r = b.p_logical / a.p_logical
        ratios[a.d] = r
        errs[a.d] = r * math.hypot(a.stderr / a.p_logical, b.stderr / b.p_logical)
    lam = float(np.mean(list(ratios.values())))
    err = math.sqrt(sum(e * e for e in errs.values())) / len(errs)
    return LambdaEstimate(p, ratios, errs, lam, err)


@dataclass
class ThresholdEstimate:
    p_thr: float
    uncertainty: float
    crossings: dict  # (d1, d2) -> crossing p

    def to_json(self) -> dict:
        return {
            "p_thr": self.p_thr,
            "uncertainty": self.uncertainty,
            "crossings": [{"d1": a, "d2": b, "p": p} for (a, b), p in self.crossings.items()],
        }


def _fit_curves(stats: ExperimentStats) -> dict:
    fits = {}
    for d in stats.distances:
        pts = [(c.p, c.p_logical) for c in stats.cells if c.d == d and c.failures > 0 and c.p > 0]
        if len(pts) < 3:
            continue
        x = np.log([q for q, _ in pts])
        y = np.log([v for _, v in pts])
        fits[d] = np.polyfit(x, y, 2)
    return fits


def estimate_threshold(stats: ExperimentStats) -> ThresholdEstimate:
    """Crossing point of quadratic fits of ``log p_L`` against ``log p``."""
    fits = _fit_curves(stats)
    ps = [q for q in stats.error_rates if q > 0]
    if len(fits) < 2 or not ps:
        raise NoCrossing("need fitted curves for at least two distances")
    lo, hi = math.log(min(ps)), math.log(max(ps))
    crossings = {}
    ds = sorted(fits)
    for a in range(len(ds)):
        for b in range(a + 1, len(ds)):
            diff = fits[ds[a]] - fits[ds[b]]
            if np.allclose(diff, 0.0, atol=1e-12):
                continue
            roots = np.roots(np.trim_zeros(diff, "f")) if np.any(diff) else []
            inside = [float(r.real) for r in np.atleast_1d(roots)
                      if abs(r.imag) < 1e-9 and lo - 1e-12 <= r.real <= hi + 1e-12]
            if inside:
                mid = 0.5 * (lo + hi)
                crossings[(ds[a], ds[b])] = math.exp(min(inside, key=lambda r: abs(r - mid)))
    if not crossings:
        raise NoCrossing("fitted curves do not intersect inside the grid")
    vals = np.array(list(crossings.values()))
    return ThresholdEstimate(float(vals.mean()), float((vals.max() - vals.min()) / 2.0), crossings)


# ---------------------------------------------------------------------------
# timing


@dataclass
class BenchResult:
    records: list[dict]
    exponent: float
    mean_ns_per_cycle: dict  # d -> mean


def random_weight_graphs(graphs: Sequence[DecoderGraph], mode: WeightMode, w_lo: float, w_hi: float,
                         seed: int) -> tuple[DecoderGraph, ...]:
    """Same edge sets with weights ``ln((1-w)/w)``, ``w ~ U[w_lo, w_hi]`` per edge."""
    rng = np.random.default_rng(seed)
    out = []
    for g in graphs:
        w = rng.uniform(w_lo, w_hi, size=g.num_edges)
        out.append(g.with_weights(np.log((1.0 - w) / w), mode))
    return tuple(out)


def fit_exponent(ds, times) -> float:
    return float(np.polyfit(np.log(np.asarray(ds, dtype=float)), np.log(np.asarray(times, dtype=float)), 1)[0])


def benchmark_decoder(config: ExperimentConfig, progress=None) -> BenchResult:
    """Single-threaded decode timing per extraction cycle across distances."""
    records = []
    means = {}
    p = config.p_list[0]
    mode = weight_mode(config.decoder, config.epsilon)
    for d in config.d_list:
        rounds = config.rounds_for(d)
        cell = Cell(d, rounds, p, config.decoder, config.epsilon, backend=config.backend)
        if config.random_weights:
            cell.graphs = random_weight_graphs(cell.graphs, mode, config.w_lo, config.w_hi, config.seed + d)
        ns = np.zeros(config.trials, dtype=np.int64)
        cell.run_chunk(config.seed, 0, config.trials, ns)
        per_cycle = ns / rounds
        for k in range(config.trials):
            records.append({
                "d": d, "p": p, "decoder": config.decoder, "trial": k,
                "decode_ns": int(ns[k]), "ns_per_cycle": float(per_cycle[k]),
            })
        means[d] = float(per_cycle.mean())
        if progress:
            progress(d, means[d])
    exponent = fit_exponent(list(means), list(means.values())) if len(means) >= 2 else float("nan")
    return BenchResult(records, exponent, means)


def config_to_json(config: ExperimentConfig) -> dict:
    out = asdict(config)
    out["d_list"] = list(config.d_list)
    out["p_list"] = list(config.p_list)
    return out
