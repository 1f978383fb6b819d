"""Compiled kernels against the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--n 1000000]

Each row times one kernel on both backends (best of ``--repeat``) and
checks the outputs are identical.
"""

import argparse
import time

import numpy as np

from ergomet import kernels
from ergomet.measures import Markov, bernoulli, symmetric_markov
from ergomet.orbit import CoupledSource


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def chain_case(specs, rule, n):
    src = CoupledSource(specs, rule, seed=0)
    cdf, acc, rcdf, iid = src._tables
    u = np.random.default_rng(0).random((n, 2 * len(specs)))

    def call(mod):
        state = np.full(len(specs), src.alphabet, dtype=np.int64)
        return mod.coupled_chain(cdf, acc, rcdf, src.rule.code, u, state, iid)

    return call


def cases(n):
    rng = np.random.default_rng(1)
    x = rng.integers(0, 2, n + 63)
    y = np.where(rng.random(n + 63) < 0.05, 1 - x, x)
    tri = Markov.from_matrix([[0.2, 0.5, 0.3], [0.6, 0.1, 0.3], [0.3, 0.3, 0.4]])
    return [
        ("first_mismatch r=64", lambda m: m.first_mismatch(x, y, n, 64)),
        ("block_codes k=8", lambda m: m.block_codes(x, 8, 2, n)),
        ("chain bernoulli monotone", chain_case([bernoulli(0.5), bernoulli(0.6)], "monotone", n)),
        ("chain markov maximal", chain_case([symmetric_markov(0.9), symmetric_markov(0.8)], "maximal-per-step", n // 10)),
        ("chain markov3 independent", chain_case([tri, tri], "independent", n // 10)),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n", type=int, default=1_000_000)
    args = ap.parse_args(argv)

    mods = kernels.backends()
    if "cython" not in mods:
        print("compiled extension not built; only the numpy fallback is available")
    print(f"{'kernel':28s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s}  identical")
    for name, fn in cases(args.n):
        t_py, out_py = best_of(lambda: fn(mods["python"]), args.repeat)
        if "cython" in mods:
            t_cy, out_cy = best_of(lambda: fn(mods["cython"]), args.repeat)
            same = np.array_equal(out_py, out_cy)
            print(f"{name:28s} {t_py:11.4f} {t_cy:11.4f} {t_py / t_cy:8.1f}  {same}")
        else:
            print(f"{name:28s} {t_py:11.4f} {'-':>11s} {'-':>8s}  -")


if __name__ == "__main__":
    main()
