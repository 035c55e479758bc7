#!/usr/bin/env python3
"""Cross-check the search engine against brute force on random instances.

Draws seeded instances in the same shapes the test suite uses, solves each
with the engine, enumerates the box with the oracle, and compares status and
objective value exactly. Every trace is replayed through the rule kernel
before a run counts as agreeing. Mismatches are dumped in the native format
so they can be rerun with `imt-solve`.
"""

import argparse
import random
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from gen import random_instance  # noqa: E402

from imtsolver.engine import solve
from imtsolver.kernel import replay_trace
from imtsolver.model import ObjValue
from imtsolver.native import render_instance
from imtsolver.oracle import brute_force_solve


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--runs", type=int, default=200, help="instances to draw")
    ap.add_argument("--seed", type=int, default=20240817, help="base RNG seed")
    ap.add_argument(
        "--no-replay", action="store_true", help="skip kernel replay of each trace"
    )
    args = ap.parse_args(argv)

    rng = random.Random(args.seed)
    counts = {"optimal": 0, "infeasible": 0}
    mismatches = 0
    start = time.perf_counter()
    for i in range(args.runs):
        instance = random_instance(rng)
        want = brute_force_solve(instance)
        got = solve(instance)
        ok = got.status == want.status
        if ok and want.status == "optimal":
            ok = got.value == ObjValue.finite(want.value)
        if not args.no_replay:
            state = replay_trace(instance, got.steps)
            ok = ok and state.final
        if ok:
            counts[want.status] += 1
        else:
            mismatches += 1
            print(f"-- mismatch on run {i}: engine {got.status} {got.value},", end=" ")
            print(f"oracle {want.status} {want.value}")
            print(render_instance(instance))
    elapsed = time.perf_counter() - start
    print(
        f"{args.runs} runs in {elapsed:.1f}s: "
        f"{counts['optimal']} optimal, {counts['infeasible']} infeasible, "
        f"{mismatches} mismatches"
    )
    return 1 if mismatches else 0


if __name__ == "__main__":
    sys.exit(main())
