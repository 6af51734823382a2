"""Time the numba and numpy implementations of each kernel on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--json out.json]
"""
import argparse
import json
import time

import numpy as np

from ghzrep import _accel, games, kernels


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def cases(rng):
    inst = games._game_instance(games.ghz_game().repeat(2))
    search = (inst.qidx, inst.weight, inst.win, inst.nq, inst.na)
    wht = rng.integers(-9, 10, (64, 1 << 14))
    coords = rng.integers(0, 1 << 8, (4096, 3))
    wt = rng.integers(0, 3, 4096)
    gammas = rng.integers(1, 1 << 8, (256, 2))
    return {
        "fwht 64x2^14": lambda nb: kernels.fwht(wht, use_numba=nb),
        "pruned_search GHZ^2": lambda nb: kernels.pruned_search(*search, use_numba=nb),
        "brute_search GHZ^2": lambda nb: kernels.brute_search(*search, use_numba=nb),
        "compressed_kl 4096 pts, 256 maps": lambda nb: kernels.compressed_kl(coords, wt, np.ones_like(wt), gammas, use_numba=nb),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", help="also write the timings here")
    args = ap.parse_args(argv)
    if _accel.numba is None:
        ap.error("numba is not installed; nothing to compare")

    rows = []
    for name, fn in cases(np.random.default_rng(args.seed)).items():
        fn(True)  # compile outside the timed region
        t_nb = best_of(lambda: fn(True), args.repeat)
        t_np = best_of(lambda: fn(False), args.repeat)
        rows.append({"kernel": name, "numba_s": t_nb, "numpy_s": t_np, "speedup": t_np / t_nb})
        print(f"{name:36s} numba {t_nb:9.4f}s  numpy {t_np:9.4f}s  x{t_np / t_nb:6.1f}", flush=True)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
