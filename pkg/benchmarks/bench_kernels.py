"""Compare the compiled and numpy stepping kernels.

Usage::

    python benchmarks/bench_kernels.py [--steps 100000] [--batch 1000] [--repeat 3]
"""

import argparse
import time

import numpy as np

from weakmeas.model import DensityMatrix, DetectorParams, SystemParams
from weakmeas.rng import RandomSource, stream_block
from weakmeas.trajectory import Scheme, simulate_states

SYS = SystemParams(1.0, 1.0, 1.0)
DET = DetectorParams(100.0, 3 ** 0.5, 1.0)
DT = 0.005


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def available_backends():
    names = ["python"]
    try:
        from weakmeas import _kernels  # noqa: F401

        names.insert(0, "cython")
    except ImportError:
        pass
    return names


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--steps", type=int, default=100_000, help="steps for the single-trajectory case")
    p.add_argument("--batch", type=int, default=1000, help="trajectories in the batch case")
    p.add_argument("--batch-steps", type=int, default=1000)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)

    rho = np.array([DensityMatrix(1.0).as_tuple()])
    u1, z1 = RandomSource(1).pairs(args.steps)
    ub, zb = stream_block(1, 0, args.batch, args.batch_steps)
    starts = np.repeat(rho, args.batch, axis=0)

    cases = {
        "single": (rho, u1[None], z1[None], args.steps),
        "batch": (starts, ub, zb, args.batch * args.batch_steps),
    }
    print(f"{'case':<8} {'scheme':<14} {'backend':<8} {'seconds':>10} {'ns/step':>10}")
    rows = {}
    for case, (s0, u, z, total) in cases.items():
        for scheme in Scheme:
            for backend in available_backends():
                t = best_of(lambda: simulate_states(s0, u, z, DT, SYS, DET, scheme, backend), args.repeat)
                rows[case, scheme, backend] = t
                print(f"{case:<8} {scheme.value:<14} {backend:<8} {t:>10.4f} {1e9 * t / total:>10.1f}")
    if "cython" in available_backends():
        print()
        for case in cases:
            for scheme in Scheme:
                speedup = rows[case, scheme, "python"] / rows[case, scheme, "cython"]
                print(f"speedup {case:<8} {scheme.value:<14} {speedup:8.1f}x")


if __name__ == "__main__":
    main()
