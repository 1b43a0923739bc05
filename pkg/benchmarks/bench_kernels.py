"""Compare the compiled and pure-Python kernels on the two hot paths.

    python3 benchmarks/bench_kernels.py [--users 2000 --items 1000 --density 0.01]

Reports best-of-N wall time per kernel and backend, the speed-up, and the
maximum absolute difference between backends (they must agree).
"""

import argparse
import time

import numpy as np

from sgcl import kernels
from sgcl.data import synth_dataset
from sgcl.graph import block_csr, build_normalized_adjacency


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--users", type=int, default=2000)
    ap.add_argument("--items", type=int, default=1000)
    ap.add_argument("--density", type=float, default=0.01)
    ap.add_argument("--dim", type=int, default=64)
    ap.add_argument("--brandes-users", type=int, default=300)
    ap.add_argument("--brandes-items", type=int, default=150)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled extension not built; only the python backend is available")

    g = synth_dataset(args.users, args.items, 2, args.density, seed=0)
    adj = build_normalized_adjacency(g)
    x = np.random.default_rng(0).normal(size=(g.num_nodes, args.dim))
    small = synth_dataset(args.brandes_users, args.brandes_items, 2, 0.05, seed=0)
    indptr, indices, edge_ids = block_csr(small)

    cases = {
        f"csr_spmm ({g.num_nodes} nodes, nnz={adj.nnz}, d={args.dim})":
            lambda impl: impl.csr_spmm(adj.indptr, adj.indices, adj.data, x),
        f"brandes ({small.num_nodes} nodes, {small.num_edges} edges)":
            lambda impl: impl.brandes(indptr, indices, edge_ids, small.num_edges),
    }
    print(f"{'kernel':<48} {'backend':<8} {'best s':>10} {'speed-up':>9}")
    for name, run in cases.items():
        results = {}
        for bname in ("python", "cython"):
            if bname in backends:
                reps = 1 if name.startswith("brandes") and bname == "python" else args.repeats
                results[bname] = best_of(lambda: run(backends[bname]), reps)
        base = results["python"][0]
        for bname, (t, _) in results.items():
            print(f"{name:<48} {bname:<8} {t:>10.4f} {base / t:>8.1f}x")
        if len(results) == 2:
            a, b = results["python"][1], results["cython"][1]
            a, b = (a, b) if isinstance(a, tuple) else ((a,), (b,))
            diff = max(float(np.max(np.abs(np.asarray(p) - np.asarray(q)))) for p, q in zip(a, b))
            print(f"{'':<48} max |python - cython| = {diff:.2e}")


if __name__ == "__main__":
    main()
