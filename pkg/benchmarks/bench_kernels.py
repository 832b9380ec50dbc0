"""Benchmark the compiled kernels against the pure-numpy fallbacks.

Runs the hot operations (phase application, each mixer, and a full
objective-plus-gradient evaluation) on both backends, reports wall times
and speedups, and verifies that the two backends agree numerically.

Usage: python3 benchmarks/bench_kernels.py [--steps 10] [--depth 5] [--repeats 5]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from quditfold import (
    ABSOLUTE,
    SQUARE,
    Encoding,
    InitStrategy,
    WalkProblem,
    build_saw_cost,
    objective_and_gradient,
    qaoa_state,
    random_init,
    set_backend,
    uniform_state,
)
from quditfold.backends import warmup
from quditfold.qsim import (
    MIXER_INVERSION,
    MIXER_QUBIT_X,
    MIXER_QUDIT,
    _apply_mixer,
    apply_phase,
)


def best_of(repeats, fn):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run_backend(backend, cost, schedule, repeats):
    set_backend(backend)
    if backend == "numba":
        warmup()
    times = {}
    state = uniform_state(cost.radices)
    times["phase"] = best_of(repeats, lambda: apply_phase(state, cost, 0.3))
    for mixer in (MIXER_INVERSION, MIXER_QUDIT, MIXER_QUBIT_X):
        if mixer == MIXER_QUBIT_X and any(d & (d - 1) for d in cost.radices):
            continue
        times[f"mixer_{mixer}"] = best_of(
            repeats,
            lambda m=mixer: _apply_mixer(
                uniform_state(cost.radices).amplitudes, cost.radices, m,
                np.array([0.2, 0.1, 0.15]) if m == MIXER_QUDIT else 0.2,
            ),
        )
    times["objective_and_gradient"] = best_of(
        repeats, lambda: objective_and_gradient(cost, schedule)
    )
    grad = objective_and_gradient(cost, schedule)
    probs_tail = np.abs(qaoa_state(cost, schedule).amplitudes[:5])
    return times, grad, probs_tail


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=10,
                        help="walk steps (statevector size 4**(steps-2))")
    parser.add_argument("--depth", type=int, default=5, help="circuit depth p")
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    cost = build_saw_cost(WalkProblem(args.steps, Encoding(SQUARE, ABSOLUTE)))
    schedule = random_init(args.depth, InitStrategy(), seed=123)[0]
    print(f"statevector size {cost.size}, depth {args.depth}, "
          f"best of {args.repeats} repeats\n")

    results = {}
    for backend in ("numba", "numpy"):
        results[backend], grad, tail = run_backend(
            backend, cost, schedule, args.repeats
        )
        results[f"_check_{backend}"] = (grad, tail)

    (e_a, gb_a, gg_a), tail_a = results["_check_numba"]
    (e_b, gb_b, gg_b), tail_b = results["_check_numpy"]
    agree = (
        abs(e_a - e_b) < 1e-10
        and np.allclose(gb_a, gb_b, atol=1e-10)
        and np.allclose(gg_a, gg_b, atol=1e-10)
        and np.allclose(tail_a, tail_b, atol=1e-12)
    )

    print(f"{'operation':28s} {'numba':>12s} {'numpy':>12s} {'speedup':>9s}")
    for op in results["numba"]:
        ta, tb = results["numba"][op], results["numpy"][op]
        print(f"{op:28s} {ta * 1e3:10.3f}ms {tb * 1e3:10.3f}ms {tb / ta:8.1f}x")
    print(f"\nbackends agree: {agree}")


if __name__ == "__main__":
    main()
