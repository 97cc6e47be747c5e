"""Timing comparison of the pure-numpy and compiled kernel backends.

Run as a script:

    python benchmarks/bench_kernels.py [--repeat 5]

Reports per-call times for the four hot kernels and an end-to-end
training run under each backend.  The compiled backend exists because
these kernels are called once per iteration on tiny arrays, where
Python and numpy call overhead dominates the arithmetic.
"""

import argparse
import time

import numpy as np

from ssam import kernels
from ssam.core import AlgoParams, StepSchedule
from ssam.dataio import synth_teacher
from ssam.optimizer import run
from ssam.relunet import NetArch, ReluSampleOracle, init_params


def best_of(repeat, fn):
    """Best wall-clock time of ``repeat`` calls of ``fn()`` (seconds)."""
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def micro_benchmarks(repeat):
    rng = np.random.default_rng(0)
    dim = 32
    lower, upper = np.full(dim, -1.0), np.full(dim, 1.0)
    x = rng.uniform(-2, 2, dim)
    z = rng.normal(size=dim)

    arch = NetArch(2, 11, 1)
    params = init_params(arch, rng)
    feat = rng.normal(size=11)
    target = rng.normal(size=1)
    out = np.empty(arch.n_params)

    n_calls = 50_000
    cases = [
        ("project_box", lambda impl: [impl["project_box"](x, lower, upper)
                                      for _ in range(n_calls)]),
        ("ybar_eta", lambda impl: [impl["ybar_eta"](x, z, 1.0, lower, upper)
                                   for _ in range(n_calls)]),
        ("relu_forward", lambda impl: [impl["relu_forward"](params.layers, feat)
                                       for _ in range(n_calls)]),
        ("relu_loss_grad", lambda impl: [impl["relu_loss_grad"](
            params.layers, feat, target, out) for _ in range(n_calls)]),
    ]

    print(f"per-call time over {n_calls} calls (best of {repeat}):")
    header = f"  {'kernel':<16} {'python':>12} {'compiled':>12} {'speedup':>9}"
    print(header)
    for name, driver in cases:
        row = {}
        for backend in kernels.available_backends():
            impl = kernels._BACKENDS[backend]
            row[backend] = best_of(repeat, lambda: driver(impl)) / n_calls
        py = row["python"]
        if "compiled" in row:
            co = row["compiled"]
            print(f"  {name:<16} {py * 1e6:>10.2f}us {co * 1e6:>10.2f}us "
                  f"{py / co:>8.1f}x")
        else:
            print(f"  {name:<16} {py * 1e6:>10.2f}us {'n/a':>12} {'':>9}")


def end_to_end(repeat):
    arch = NetArch(2, 11, 1)
    ds = synth_teacher(arch, 2000, 0.1, seed=0)
    iters = 20_000

    def one_run():
        oracle = ReluSampleOracle(arch, ds.X, ds.Y, batch_size=1,
                                  half_width=10.0)
        params = AlgoParams(a=0.1, beta=1.0,
                            schedule=StepSchedule(kind="harmonic-paper",
                                                  tau0=0.03, ramp=5.0,
                                                  horizon=iters),
                            seed=0)
        return run("ssam", oracle, oracle.box(), params, iters)

    print(f"\nfull training run, {iters} iterations (best of {repeat}):")
    previous = kernels.active_backend()
    traces = {}
    try:
        for backend in kernels.available_backends():
            kernels.use(backend)
            dt = best_of(repeat, one_run)
            traces[backend] = one_run()
            print(f"  {backend:<10} {dt:8.2f}s  ({iters / dt:,.0f} iters/s)")
    finally:
        kernels.use(previous)
    if len(traces) == 2:
        gap = float(np.max(np.abs(traces["python"].loss
                                  - traces["compiled"].loss)))
        print(f"  max |loss difference| between backends: {gap:.3g}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5,
                    help="take the best of this many repetitions")
    args = ap.parse_args()
    print(f"available backends: {', '.join(kernels.available_backends())}")
    micro_benchmarks(args.repeat)
    end_to_end(max(2, args.repeat // 2))


if __name__ == "__main__":
    main()
