"""Time the compiled and pure-Python propagation kernels on the same closed loop.

    python benchmarks/bench_kernels.py --steps 20000 --repeat 5
"""
import argparse
import math
import timeit

import numpy as np

from harmosync import kernels
from harmosync.graph import build_laplacian, standin_graph
from harmosync.propagation import system_matrices


def make_inputs(n_steps, seed=0):
    L = build_laplacian(standin_graph())
    n = L.shape[0]
    sysm = system_matrices(math.sqrt(math.pi / 2), 0.1, L, analyze=False)
    G = sysm.F[:, n:] @ (-L)
    rng = np.random.default_rng(seed)
    x0 = rng.standard_normal(2 * n)
    mu = np.ones(n_steps)
    control = np.ones(n_steps, dtype=np.uint8)
    return (sysm.E, G, sysm.expA, x0, mu, control, 0.5, 10, 10.0, n_steps)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    inputs = make_inputs(args.steps)
    backends = kernels.available_backends()
    results = {}
    for name, fn in backends.items():
        fn(*inputs)  # warm-up
        best = min(timeit.repeat(lambda: fn(*inputs), number=1, repeat=args.repeat))
        results[name] = (best, np.asarray(fn(*inputs)[0]))
        print(f"{name:>7}: {best * 1e3:9.2f} ms for {args.steps} steps  ({best / args.steps * 1e6:.3f} us/step)")
    if "cython" in results:
        ref = results["python"][1]
        diff = np.abs(results["cython"][1] - ref).max()
        print(f"speed-up cython/python: {results['python'][0] / results['cython'][0]:.1f}x, max state difference {diff:.1e}")
    else:
        print("compiled kernel not built; only the pure-Python backend was timed")


if __name__ == "__main__":
    main()
