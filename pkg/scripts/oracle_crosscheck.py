"""Compare the backward recursion with the flattened LP on seeded random instances.

    python3 scripts/oracle_crosscheck.py --count 200 --seed 1 --max-T 3
"""
import argparse
import random
import time
from dataclasses import replace

from stochdp.dp import solve
from stochdp.errors import LinearityViolated
from stochdp.generators import InstanceConfig, random_integrand_instance
from stochdp.oracle import flatten_solve


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--max-T", type=int, default=3)
    ap.add_argument("--max-n", type=int, default=2)
    ap.add_argument("--fm", action="store_true", help="also run the elimination oracle")
    args = ap.parse_args()
    cfg = replace(InstanceConfig(), max_T=args.max_T, max_n=args.max_n)
    rng = random.Random(args.seed)
    done = skipped = mismatches = 0
    start = time.perf_counter()
    while done < args.count:
        tree, spec = random_integrand_instance(rng, cfg)
        try:
            sol = solve(tree, spec)
        except LinearityViolated:
            skipped += 1
            continue
        values = [flatten_solve(tree, spec)[0]]
        if args.fm:
            values.append(flatten_solve(tree, spec, method="fm")[0])
        done += 1
        if any(v != sol.value for v in values):
            mismatches += 1
            print(f"mismatch #{done}: recursion {sol.value}, oracle {values}")
    print(f"{done} instances, {mismatches} mismatches, {skipped} skipped (not linear), "
          f"{time.perf_counter() - start:.1f}s")
    return 1 if mismatches else 0


if __name__ == "__main__":
    raise SystemExit(main())
