"""Throughput benchmark: segment + encode, compiled kernels vs numpy fallback.

Run directly:  python3 benchmarks/bench_encode.py [--mols 300] [--d 300] [--layers 5]
The script re-executes itself under MOLTOK_NO_EXT=1 to time the fallback in a
clean interpreter, then reports both rates and the speedup.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time


def measure(n_mols: int, d: int, layers: int, seed: int) -> dict:
    import moltok.backend as backend
    from moltok.encoder import encode, init_params
    from moltok.hierseg import segment
    from moltok.molgraph.randmol import random_molecules

    mols = random_molecules(n_mols, seed=seed, min_heavy=10, max_heavy=40)
    params = init_params(seed, d, layers)
    encode(segment(mols[0]), params)  # warm-up outside the timed loop
    t0 = time.perf_counter()
    for m in mols:
        encode(segment(m), params)
    elapsed = time.perf_counter() - t0
    return {
        "backend": backend.BACKEND,
        "molecules": n_mols,
        "d": d,
        "layers": layers,
        "seconds": round(elapsed, 4),
        "mol_per_s": round(n_mols / elapsed, 1),
        "atoms": sum(m.num_atoms for m in mols),
    }


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--mols", type=int, default=300)
    parser.add_argument("--d", type=int, default=300)
    parser.add_argument("--layers", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--single", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.single:
        print(json.dumps(measure(args.mols, args.d, args.layers, args.seed)))
        return 0

    results = []
    for no_ext in ("0", "1"):
        env = dict(os.environ, MOLTOK_NO_EXT=no_ext)
        proc = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--single",
             "--mols", str(args.mols), "--d", str(args.d),
             "--layers", str(args.layers), "--seed", str(args.seed)],
            capture_output=True, text=True, env=env, check=True,
        )
        results.append(json.loads(proc.stdout))

    for r in results:
        print(f"{r['backend']:>7}: {r['mol_per_s']:>8} mol/s "
              f"({r['molecules']} molecules, {r['atoms']} atoms, "
              f"d={r['d']}, L={r['layers']}, {r['seconds']}s)")
    if results[0]["backend"] != results[1]["backend"]:
        speedup = results[0]["mol_per_s"] / results[1]["mol_per_s"]
        print(f"speedup: {speedup:.2f}x ({results[0]['backend']} over "
              f"{results[1]['backend']})")
    else:
        print("note: compiled extension unavailable; both runs used the fallback")
    return 0


if __name__ == "__main__":
    sys.exit(main())
