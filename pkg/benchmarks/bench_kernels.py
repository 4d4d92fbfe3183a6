"""Time the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Each kernel runs on the same inputs under both implementations; the table
reports the best wall time and the max absolute difference of the outputs.
"""

import argparse
import timeit

import numpy as np

from chebaps import _fallback
from chebaps.bessel import ArrayGeometry
from chebaps.estimators import cone_problem
from chebaps.regularizer import q_operator, sample_matrix
from chebaps.scenes import covariance_oracle, make_clustered_aps, normalize, random_scene

try:
    from chebaps import _kernels
except ImportError:
    _kernels = None


def cases():
    rng = np.random.default_rng(0)
    geom = ArrayGeometry(8, 1.0)
    x = rng.uniform(0, 25 * np.pi, 400)
    yield "bessel_table n<=150, 400 args", lambda k: k.bessel_table(150, x)

    d = rng.standard_normal(32)
    xs = rng.uniform(-1, 1, 4096)
    yield "clenshaw p=31, 4096 points", lambda k: k.clenshaw(d, xs)

    # a full-size regularised fit: two 16x16 PSD blocks and an l1 block
    r = normalize(covariance_oracle(make_clustered_aps(random_scene("gaussian", 1)), geom))
    op = q_operator()
    prob = cone_problem(r, geom, 31, analysis=op.q @ sample_matrix(31).c, lam=1e-9)
    a, off, kinds, starts, lens, dims, weights = prob.stacked()
    rho, sigma, alpha = 1e-3, 1e-6, 1.6
    kinv = np.linalg.inv(prob.p + sigma * np.eye(prob.n) + rho * a.T @ a)
    a = np.ascontiguousarray(a)

    def admm(k):
        x, z, u = np.zeros(prob.n), np.zeros(a.shape[0]), np.zeros(a.shape[0])
        k.admm_run(kinv, a, prob.q, off, x, z, u, rho, sigma, alpha, 200,
                   kinds, starts, lens, dims, weights)
        return np.concatenate([x, z, u])

    yield "admm_run 200 steps, p=31 fit", admm


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    impls = [("numpy", _fallback)] + ([("cython", _kernels)] if _kernels else [])
    print(f"{'kernel':<32}" + "".join(f"{n:>12}" for n, _ in impls) + f"{'speedup':>10}"
          + f"{'max diff':>11}")
    for name, fn in cases():
        times, outs = [], []
        for _, mod in impls:
            outs.append(fn(mod))
            times.append(min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat)))
        line = f"{name:<32}" + "".join(f"{1e3 * t:>10.2f}ms" for t in times)
        if len(impls) == 2:
            line += f"{times[0] / times[1]:>9.1f}x{np.abs(outs[0] - outs[1]).max():>11.1e}"
        print(line)
    if _kernels is None:
        print("compiled kernels not built; only the fallback was timed")


if __name__ == "__main__":
    main()
