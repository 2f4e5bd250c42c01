"""Compare the compiled kernels against the pure-Python fallback.

Times shot sampling plus weighted union-find decoding of both graphs for a
few distances and prints shots per second for each backend.

    python benchmarks/bench_backends.py --d-list 3,5,7 --p 0.005 --shots 2000
"""

import argparse
import time

from toric_uf import _backend
from toric_uf.harness import Cell


def shots_per_second(cell, shots, seed):
    cell.run_chunk(seed, 0, min(shots, 50))  # build per-thread kernels first
    t0 = time.perf_counter()
    failures, decode_ns, _ = cell.run_chunk(seed, 0, shots)
    wall = time.perf_counter() - t0
    return shots / wall, decode_ns / shots / 1e3, failures


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d-list", default="3,5,7")
    ap.add_argument("--p", type=float, default=0.005)
    ap.add_argument("--shots", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = ["python"] + (["cython"] if _backend.BACKEND == "cython" else [])
    if len(backends) == 1:
        print("compiled extension not built; only the fallback is timed")
    print(f"{'d':>3} {'backend':>8} {'shots/s':>10} {'decode us/shot':>15} {'failures':>9}")
    for d in (int(x) for x in args.d_list.split(",")):
        rate = {}
        results = {}
        for name in backends:
            cell = Cell(d, d, args.p, "uf-weighted", backend=name)
            rate[name], us, failures = shots_per_second(cell, args.shots, args.seed)
            results[name] = failures
            print(f"{d:>3} {name:>8} {rate[name]:>10.0f} {us:>15.1f} {failures:>9}")
        if len(backends) == 2:
            same = "same" if results["python"] == results["cython"] else "DIFFERENT"
            print(f"    speedup {rate['cython'] / rate['python']:.1f}x, {same} failure counts")


if __name__ == "__main__":
    main()
