"""Benchmark the compiled vs pure tape executors on training-sized programs.

Times the three operations that dominate training: a forward pass, a full
value-and-gradient pass over the 120-month unrolled plan, and the central
finite-difference sweep used by the gradient-fidelity check.

Run:  python benchmarks/bench_backends.py [--iters 200]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from payplan.neural import available_backends, init_params
from payplan.presets import base_plan
from payplan.rates import constant_trajectory
from payplan.trainer import PlanGraph, feature_spec


def timeit(fn, iters: int) -> float:
    fn()  # warm up
    start = time.perf_counter()
    for _ in range(iters):
        fn()
    return (time.perf_counter() - start) / iters


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--iters", type=int, default=200)
    args = parser.parse_args()

    plan = base_plan()
    trajectory = constant_trajectory(plan, plan.horizon_months)
    params = init_params(feature_spec(plan).length, [64, 64], plan.n_slots, seed=0)

    results: dict[str, dict[str, float]] = {}
    for backend in available_backends():
        graph = PlanGraph(plan, hidden=(64, 64), backend=backend)
        graph.bind_params(params.arrays())
        graph.bind_rates(trajectory)
        row = {
            "forward": timeit(graph.value, args.iters),
            "value+grad": timeit(graph.value_and_param_grads, args.iters),
        }

        fd_graph = PlanGraph(
            type(plan)(
                initial_income=plan.initial_income,
                horizon_months=12,
                inflation_source=plan.inflation_source,
                goals=plan.goals,
            ),
            hidden=(64, 64),
            backend=backend,
        )
        fd_graph.bind_params(params.arrays())
        fd_graph.bind_rates(trajectory)
        ct = fd_graph.compiled
        coords = ct.coords_of(fd_graph.param_nodes)[:400]
        ct.forward()
        row["fd sweep (400 coords)"] = timeit(lambda: ct.fd_gradient(coords, 1e-5), max(1, args.iters // 20))
        results[backend] = row

    names = list(next(iter(results.values())))
    width = max(len(n) for n in names)
    header = f"{'operation':<{width}}" + "".join(f"  {b:>12}" for b in results)
    if len(results) == 2:
        header += "  speedup"
    print(header)
    for name in names:
        line = f"{name:<{width}}"
        times = [results[b][name] for b in results]
        for t in times:
            line += f"  {t * 1e3:>10.3f}ms"
        if len(times) == 2:
            line += f"  {times[1] / times[0]:>6.1f}x"
        print(line)


if __name__ == "__main__":
    main()
