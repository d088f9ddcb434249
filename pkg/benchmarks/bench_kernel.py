"""Compare the compiled and pure-Python kernels on the desk world.

    python3 benchmarks/bench_kernel.py [--tasks watch_tv,make_toast] [--walks 2000]

Times breadth-first search per task and a batch of random walks
(applicable-list + transition) on every available kernel.
"""

from __future__ import annotations

import argparse
import random
import time

from hcplan.env import load_bundled
from hcplan.grounding import problem_for
from hcplan.kernel import available_backends
from hcplan.tasks import bundled_tasks, compile_condition


def bench_search(problem, task, bits) -> tuple[float, int]:
    goal = compile_condition(task.goal, problem)
    failure = compile_condition(task.failure, problem) if task.failure else None
    start = time.perf_counter()
    res = problem.kernel.search(bits, goal, failure, 20, 6_000_000)
    return time.perf_counter() - start, res.expanded


def bench_walks(problem, bits, walks: int, depth: int, seed: int) -> float:
    rng = random.Random(seed)
    start = time.perf_counter()
    for _ in range(walks):
        state = bits
        for _ in range(depth):
            options = problem.applicable(state)
            if not options:
                break
            state = problem.kernel.apply(state, rng.choice(options))
    return time.perf_counter() - start


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--tasks", default="watch_tv,throw_away_apple,make_toast,eat_chips_on_sofa")
    p.add_argument("--walks", type=int, default=2000)
    p.add_argument("--depth", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    env = load_bundled("desk")
    pack = bundled_tasks()
    names = [n.strip() for n in args.tasks.split(",") if n.strip()]
    backends = available_backends()
    timings: dict[str, dict[str, float]] = {}
    for label, cls in backends.items():
        problem = problem_for(env, kernel_cls=cls)
        bits = problem.encode(env)
        row = timings.setdefault(label, {})
        for name in names:
            row[name], expanded = bench_search(problem, pack[name], bits)
            print(f"{label:7s} search {name:26s} {row[name]:8.3f}s  ({expanded} expanded)")
        row["walks"] = bench_walks(problem, bits, args.walks, args.depth, args.seed)
        print(f"{label:7s} walks  {args.walks}x{args.depth:<21d} {row['walks']:8.3f}s")
    if "cython" in timings:
        print()
        for key in timings["python"]:
            ratio = timings["python"][key] / max(timings["cython"][key], 1e-9)
            print(f"speedup {key:33s} {ratio:6.1f}x")
    else:
        print("\ncompiled kernel not built; only the pure-Python kernel was timed")


if __name__ == "__main__":
    main()
