"""External solver seam: hand a ConicProblem to cvxpy (Clarabel by default).

cvxpy is optional and imported lazily; the in-repo ADMM never depends on it.
"""

from __future__ import annotations

import time

import numpy as np

from .conic import FREE, L1, NONNEG, PSD, ZERO, ConicProblem, Solution, SolverReport, SolverSettings


def _smat_expr(cp, e, k):
    # linear map from svec entries to a vec'd symmetric matrix
    i, j = np.tril_indices(k)
    t = np.zeros((k * k, i.size))
    for col, (r, c) in enumerate(zip(i, j)):
        s = 1.0 if r == c else 1.0 / np.sqrt(2.0)
        t[r * k + c, col] = s
        t[c * k + r, col] = s
    return cp.reshape(t @ e, (k, k), order="C")


def solve_cvxpy(prob: ConicProblem, settings: SolverSettings, solver: str = "CLARABEL") -> Solution:
    import cvxpy as cp

    t0 = time.perf_counter()
    n = prob.n
    x = cp.Variable(n)
    w, v = np.linalg.eigh(prob.p)
    keep = w > 1e-14 * max(w.max(initial=0.0), 1.0)
    root = (v[:, keep] * np.sqrt(w[keep])).T
    obj = 0.5 * cp.sum_squares(root @ x) + prob.q @ x if keep.any() else prob.q @ x
    cons = []
    for blk in prob.blocks:
        e = blk.a @ x - blk.b
        if blk.kind == ZERO:
            cons.append(e == 0)
        elif blk.kind == NONNEG:
            cons.append(e >= 0)
        elif blk.kind == PSD:
            s = _smat_expr(cp, e, blk.dim)
            cons.append(0.5 * (s + s.T) >> 0)
        elif blk.kind == L1:
            obj = obj + blk.weight * cp.norm1(e)
        elif blk.kind != FREE:
            raise ValueError(f"unknown block kind {blk.kind}")
    pr = cp.Problem(cp.Minimize(obj), cons)
    pr.solve(solver=solver)
    status = {"optimal": "optimal", "optimal_inaccurate": "optimal",
              "infeasible": "infeasible"}.get(pr.status, "max_iter")
    xv = np.zeros(n) if x.value is None else np.asarray(x.value)
    z = np.concatenate([blk.a @ xv - blk.b for blk in prob.blocks])
    rep = SolverReport(status, int(pr.solver_stats.num_iters or 0), np.nan, np.nan,
                       prob.objective(xv), np.nan, time.perf_counter() - t0, "cvxpy")
    return Solution(xv, z, np.zeros_like(z), rep, tuple(prob.blocks))
