"""Time the hot kernels under the numba and pure-numpy backends.

The backend is fixed at import time, so each measurement runs in a fresh
interpreter with ``MARKOV_POISSON_PURE_NUMPY`` set accordingly.

    python benchmarks/bench_kernels.py [--repeat 3]
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from markov_poisson import _sampling, backend, zoo
from markov_poisson.core import MetricSpec
from markov_poisson.poisson import solve_direct
from markov_poisson.transport import contraction_profile, kantorovich_norm

repeat = int(sys.argv[1])

def best(fn):
    fn()  # warm-up, includes JIT compilation
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)

P, pi, _ = zoo.random_reversible(12, 0)
f = np.arange(12.0)
u = solve_direct(P, pi, f).u.values
fc = f - pi.weights @ f
d40 = zoo.random_metric(40, 1, "general")
P40 = np.random.default_rng(2).dirichlet(np.ones(40), size=40)
Q, _, dq = zoo.random_reversible(24, 3, metric="general")

out = {
    "backend": backend(),
    "replica_maxima n=1e3 R=1e4": best(lambda: _sampling.replica_maxima(
        P.rows, pi.weights, fc, u, 1000, 10_000, 1)),
    "sample_paths n=1e4 R=256": best(lambda: _sampling.sample_paths(P.rows, pi.weights, 10_000, 256, 1)),
    "tau general metric n=40": best(lambda: kantorovich_norm(P40, d40)),
    "contraction_profile general n=24": best(lambda: contraction_profile(Q, dq)),
}
print(json.dumps(out))
"""


def run(pure: bool, repeat: int) -> dict:
    env = dict(os.environ, MARKOV_POISSON_PURE_NUMPY="1" if pure else "0")
    res = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    fast, slow = run(False, args.repeat), run(True, args.repeat)
    width = max(len(k) for k in fast if k != "backend")
    print(f"{'kernel':<{width}}  {fast['backend']:>9}  {slow['backend']:>9}  speedup")
    for key in fast:
        if key == "backend":
            continue
        print(f"{key:<{width}}  {fast[key]:9.4f}  {slow[key]:9.4f}  {slow[key] / fast[key]:7.1f}x")


if __name__ == "__main__":
    main()
