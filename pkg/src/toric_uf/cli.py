"""Command-line entry point: ``toric-uf <subcommand> ...``."""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import logging
import sys

import numpy as np

from . import _backend
from .decoder_graph import FaultTable, WeightMode, build_decoder_graphs, graphs_from_json, graphs_to_json
from .errors import InsufficientData, NoCrossing, ToricUFError
from .harness import (
    DECODERS,
    Cell,
    ExperimentConfig,
    benchmark_decoder,
    estimate_lambda,
    estimate_threshold,
    is_failure,
    run_cell,
    run_memory_experiment,
)
from .lattice import LatticeParams
from .uf_decoder import UnionFindDecoder

log = logging.getLogger("toric_uf")

LAMBDA_DISTANCES = (5, 7, 9, 11)
BENCH_COLUMNS = ("d", "p", "decoder", "trial", "decode_ns", "ns_per_cycle")


def int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def to_hex(indices, n: int) -> str:
    """Event index list as a hex bitset (bit k set when detector k fired)."""
    bits = np.zeros(n, dtype=np.uint8)
    bits[np.asarray(indices, dtype=np.int64)] = 1
    return "%x" % int.from_bytes(np.packbits(bits, bitorder="little").tobytes(), "little")


def from_hex(text: str) -> list[int]:
    value = int(text, 16)
    out = []
    k = 0
    while value:
        if value & 1:
            out.append(k)
        value >>= 1
        k += 1
    return out


def write_json(path, doc):
    text = json.dumps(doc, indent=2)
    if path in (None, "-"):
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


@contextlib.contextmanager
def open_out(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


# ---------------------------------------------------------------------------


def cmd_graph(args):
    mode = WeightMode(args.mode, args.epsilon if args.mode == "truncated" else None)
    graphs = build_decoder_graphs(LatticeParams(args.d, args.rounds, args.p), mode)
    with open_out(args.out) as fh:
        fh.write(graphs_to_json(graphs))
        fh.write("\n")


def cmd_sample(args):
    rounds = args.rounds if args.rounds is not None else args.d
    table = FaultTable(LatticeParams(args.d, rounds, args.p if args.p > 0 else 1e-3))
    sampler = _backend.get().ShotSampler(args.d, rounds, args.p, **table.kernel_arrays())
    n = (rounds + 1) * args.d * args.d
    with open_out(args.out) as fh:
        w = csv.writer(fh)
        w.writerow(["shot_index", "events_primal", "events_dual", "l0", "l1", "l2", "l3"])
        for shot in range(args.shots):
            ev_p, ev_d, mask = sampler.sample(args.seed, shot)
            w.writerow([shot, to_hex(ev_p, n), to_hex(ev_d, n)] + [(mask >> b) & 1 for b in range(4)])


def cmd_decode(args):
    with open(args.graph) as fh:
        primal, dual = graphs_from_json(fh.read())
    dec_p, dec_d = UnionFindDecoder(primal), UnionFindDecoder(dual)
    with open(args.shots) as fin, open_out(args.out) as fout:
        w = csv.writer(fout)
        w.writerow(["shot_index", "failure", "size_primal", "size_dual", "growth_steps", "peel_edges"])
        for row in csv.DictReader(fin):
            cp = dec_p.decode(from_hex(row["events_primal"]))
            cd = dec_d.decode(from_hex(row["events_dual"]))
            mask = sum(int(row[f"l{b}"]) << b for b in range(4))
            w.writerow([
                row["shot_index"], int(is_failure(cp.logical, cd.logical, mask)), len(cp.edges), len(cd.edges),
                cp.growth_steps + cd.growth_steps, cp.erasure_size + cd.erasure_size,
            ])


def cmd_run(args):
    cell = Cell(args.d, args.rounds if args.rounds is not None else args.d, args.p, args.decoder, args.epsilon)
    stats = run_cell(cell, args.shots, args.seed, args.threads, target_failures=args.target_failures)
    write_json(args.out, stats.to_json())


def _progress(cs):
    log.info("d=%d p=%g shots=%d failures=%d p_L=%.3e", cs.d, cs.p, cs.shots, cs.failures, cs.p_logical)


def cmd_threshold(args):
    config = ExperimentConfig(
        int_list(args.d_list), float_list(args.p_list), args.decoder, args.epsilon,
        args.shots, args.seed, threads=args.threads,
    )
    stats = run_memory_experiment(config, _progress)
    doc = {"cells": stats.to_json()}
    try:
        doc["threshold"] = estimate_threshold(stats).to_json()
    except NoCrossing as exc:
        doc["threshold"] = None
        doc["error"] = str(exc)
    write_json(args.out, doc)
    return 0 if doc["threshold"] else 1


def cmd_lambda(args):
    target = args.target_failures if args.target_failures is not None else args.min_failures
    config = ExperimentConfig(
        list(LAMBDA_DISTANCES), [args.p], args.decoder, args.epsilon, args.shots, args.seed,
        threads=args.threads, target_failures=target,
    )
    stats = run_memory_experiment(config, _progress)
    doc = {"cells": stats.to_json()}
    status = 0
    try:
        doc["lambda"] = estimate_lambda(stats, args.p, LAMBDA_DISTANCES, args.min_failures).to_json()
    except InsufficientData as exc:
        doc["lambda"] = None
        doc["error"] = str(exc)
        status = 1
    write_json(args.out, doc)
    return status


def cmd_bench(args):
    config = ExperimentConfig(
        int_list(args.d_list), [args.p], args.decoder, args.epsilon, seed=args.seed,
        random_weights=args.random_weights, w_lo=args.w_lo, w_hi=args.w_hi, trials=args.trials,
    )
    result = benchmark_decoder(config, lambda d, t: log.info("d=%d %.0f ns/cycle", d, t))
    with open_out(args.out) as fh:
        w = csv.DictWriter(fh, fieldnames=BENCH_COLUMNS)
        w.writeheader()
        w.writerows(result.records)
    log.info("fitted exponent %.3f", result.exponent)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="toric-uf", description="Toric-code memory simulation and union-find decoding.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def decoder_flags(p):
        p.add_argument("--decoder", choices=DECODERS, default="uf-weighted")
        p.add_argument("--epsilon", type=float, default=0.1, help="truncation unit for uf-truncated")

    g = sub.add_parser("graph", help="build both decoder graphs and write them as JSON")
    g.add_argument("--d", type=int, required=True)
    g.add_argument("--rounds", type=int, required=True)
    g.add_argument("--p", type=float, required=True)
    g.add_argument("--mode", choices=("weighted", "unweighted", "truncated"), default="weighted")
    g.add_argument("--epsilon", type=float, default=0.1)
    g.add_argument("--out", default="-")
    g.set_defaults(func=cmd_graph)

    s = sub.add_parser("sample", help="sample noisy shots to CSV")
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--rounds", type=int)
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--shots", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_sample)

    dc = sub.add_parser("decode", help="decode a shots CSV with a graph file")
    dc.add_argument("--graph", required=True)
    dc.add_argument("--shots", required=True)
    dc.add_argument("--out", default="-")
    dc.set_defaults(func=cmd_decode)

    r = sub.add_parser("run", help="memory experiment at one (d, p)")
    r.add_argument("--d", type=int, required=True)
    r.add_argument("--rounds", type=int)
    r.add_argument("--p", type=float, required=True)
    decoder_flags(r)
    r.add_argument("--shots", type=int, required=True)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--threads", type=int, default=1)
    r.add_argument("--target-failures", type=int)
    r.add_argument("--out", default="-")
    r.set_defaults(func=cmd_run)

    t = sub.add_parser("threshold", help="p_L grid and threshold crossing")
    t.add_argument("--d-list", required=True)
    t.add_argument("--p-list", required=True)
    decoder_flags(t)
    t.add_argument("--shots", type=int, required=True)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--threads", type=int, default=1)
    t.add_argument("--out", default="-")
    t.set_defaults(func=cmd_threshold)

    lm = sub.add_parser("lambda", help="suppression factor over d = 5, 7, 9, 11")
    lm.add_argument("--p", type=float, required=True)
    decoder_flags(lm)
    lm.add_argument("--shots", type=int, required=True, help="per-cell shot cap")
    lm.add_argument("--seed", type=int, default=0)
    lm.add_argument("--threads", type=int, default=1)
    lm.add_argument("--min-failures", type=int, default=1000,
                    help="failures required per cell; lower it for a quick, less certain estimate")
    lm.add_argument("--target-failures", type=int, help="stop a cell once reached (default: --min-failures)")
    lm.add_argument("--out", default="-")
    lm.set_defaults(func=cmd_lambda)

    b = sub.add_parser("bench", help="single-threaded decode timing")
    b.add_argument("--d-list", required=True)
    b.add_argument("--p", type=float, default=0.003)
    decoder_flags(b)
    b.add_argument("--random-weights", action="store_true")
    b.add_argument("--w-lo", type=float, default=0.001)
    b.add_argument("--w-hi", type=float, default=0.005)
    b.add_argument("--trials", type=int, default=1000)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", default="-")
    b.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args) or 0
    except (ToricUFError, ValueError) as exc:
        print(f"toric-uf: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
