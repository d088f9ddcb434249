"""Freeze oracle minimum plan lengths into tests/fixtures/min_lengths.json.

Runs breadth-first search on the pure-Python kernel (not the compiled one the
tests exercise) and replays each witness through the reference interpreter,
so the frozen numbers do not depend on the code paths under test.
"""

import json
import time
from pathlib import Path

from hcplan.env import load_bundled
from hcplan.kernel import PyKernel
from hcplan.oracle import min_plan_search
from hcplan.reference import reference_apply
from hcplan.tasks import bundled_tasks, classify, Status

OUT = Path(__file__).resolve().parents[1] / "tests/fixtures/min_lengths.json"


def main() -> None:
    env = load_bundled("desk")
    rows = {}
    for task in bundled_tasks().tasks:
        start = time.perf_counter()
        report = min_plan_search(env, task, bound=20, kernel_cls=PyKernel)
        assert report.solvable_within_bound and not report.capped, task.name
        state = env
        for action in report.witness_plan:
            state = reference_apply(state, action)
        assert classify(state, task) is Status.SUCCESS, task.name
        rows[task.name] = report.min_length
        print(f"{task.name}: {report.min_length} ({report.states_expanded} expanded, "
              f"{time.perf_counter() - start:.1f}s)", flush=True)
    OUT.write_text(json.dumps({"environment": "desk", "bound": 20, "min_lengths": rows}, indent=2) + "\n")


if __name__ == "__main__":
    main()
