"""A small ADMM solver for quadratic programs over products of simple cones.

Problem form::

    minimize    1/2 x'Px + q'x + sum_i w_i ||A_i x - b_i||_1      (l1 blocks)
    subject to  A_j x - b_j in K_j                                 (cone blocks)

with ``K_j`` one of: zero, nonnegative orthant, free, PSD (svec packed).
The splitting introduces ``z = A x - b``; the x-update is a dense solve
with a cached inverse that is refreshed only when the penalty changes.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from ._backend import kernels

ZERO, NONNEG, FREE, PSD, L1 = 0, 1, 2, 3, 4


@dataclass(frozen=True)
class Block:
    """Rows ``A x - b`` tied to one cone, or an l1 penalty with weight ``weight``."""

    kind: int
    a: np.ndarray
    b: np.ndarray | None = None
    dim: int = 0
    weight: float = 0.0

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        object.__setattr__(self, "a", a)
        b = np.zeros(a.shape[0]) if self.b is None else np.asarray(self.b, dtype=float).ravel()
        object.__setattr__(self, "b", b)
        if b.size != a.shape[0]:
            raise ValueError("block offset length mismatch")
        if self.kind == PSD and self.dim * (self.dim + 1) // 2 != a.shape[0]:
            raise ValueError("PSD block row count must be dim*(dim+1)/2")
        if self.kind == L1 and self.weight < 0:
            raise ValueError("l1 weight must be nonnegative")


@dataclass(frozen=True)
class ConicProblem:
    p: np.ndarray
    q: np.ndarray
    blocks: Sequence[Block]

    def __post_init__(self):
        p = np.atleast_2d(np.asarray(self.p, dtype=float))
        q = np.asarray(self.q, dtype=float).ravel()
        n = q.size
        if p.shape != (n, n):
            raise ValueError("objective matrix shape mismatch")
        if not self.blocks:
            raise ValueError("need at least one block")
        for blk in self.blocks:
            if blk.a.shape[1] != n:
                raise ValueError("block column count mismatch")
        object.__setattr__(self, "p", 0.5 * (p + p.T))
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "blocks", tuple(self.blocks))

    @property
    def n(self) -> int:
        return self.q.size

    def stacked(self):
        a = np.vstack([b.a for b in self.blocks])
        off = np.concatenate([b.b for b in self.blocks])
        lens = np.array([b.a.shape[0] for b in self.blocks], dtype=np.int32)
        starts = np.concatenate([[0], np.cumsum(lens)[:-1]]).astype(np.int32)
        kinds = np.array([b.kind for b in self.blocks], dtype=np.int32)
        dims = np.array([b.dim for b in self.blocks], dtype=np.int32)
        weights = np.array([b.weight for b in self.blocks], dtype=float)
        return a, off, kinds, starts, lens, dims, weights

    def objective(self, x) -> float:
        val = 0.5 * x @ self.p @ x + self.q @ x
        for blk in self.blocks:
            if blk.kind == L1:
                val += blk.weight * np.abs(blk.a @ x - blk.b).sum()
        return float(val)


@dataclass
class SolverSettings:
    max_iter: int = 50_000
    eps_abs: float = 1e-8
    eps_rel: float = 1e-8
    alpha: float = 1.6
    rho: float = 1e-3
    sigma: float = 1e-6
    adaptive_rho: bool = False
    check_every: int = 10
    adapt_every: int = 50
    backend: str = "admm"


@dataclass
class SolverReport:
    status: str
    iterations: int
    primal_residual: float
    dual_residual: float
    objective: float
    rho: float
    wall_s: float
    backend: str = "admm"


@dataclass
class Solution:
    x: np.ndarray
    z: np.ndarray
    y: np.ndarray
    report: SolverReport
    blocks: tuple = field(default_factory=tuple)

    def block_values(self, i: int) -> np.ndarray:
        """Projected slack ``z`` for block ``i``; exactly inside its cone."""
        lens = [b.a.shape[0] for b in self.blocks]
        s = sum(lens[:i])
        return self.z[s:s + lens[i]]


def _dual_cone_dist(y, kinds, starts, lens, dims):
    # distance of y from the dual cone; l1 rows must carry no certificate mass
    from .cone import smat
    d = 0.0
    for kind, s, ln, dm in zip(kinds, starts, lens, dims):
        seg = y[s:s + ln]
        if kind == NONNEG:
            d = max(d, float(np.maximum(-seg, 0).max(initial=0.0)))
        elif kind == PSD:
            d = max(d, float(-np.linalg.eigvalsh(smat(seg, dm))[0]))
        elif kind in (FREE, L1):
            d = max(d, float(np.abs(seg).max(initial=0.0)))
    return d


def solve_conic(prob: ConicProblem, settings: SolverSettings | None = None,
                warm: Solution | None = None) -> Solution:
    """Solve ``prob``; deterministic for identical inputs.

    Status is ``optimal`` when the scaled residuals meet the tolerances,
    ``infeasible`` when a primal infeasibility certificate is detected, and
    ``max_iter`` otherwise.
    """
    st = settings or SolverSettings()
    if st.backend == "cvxpy":
        from .conic_cvxpy import solve_cvxpy
        return solve_cvxpy(prob, st)
    if st.backend != "admm":
        raise ValueError(f"unknown backend {st.backend!r}")
    t0 = time.perf_counter()
    a, off, kinds, starts, lens, dims, weights = prob.stacked()
    a = np.ascontiguousarray(a)
    n, m = prob.n, a.shape[0]
    p, q = prob.p, prob.q
    ata = a.T @ a
    rho = st.rho

    def factor(r):
        k = p + st.sigma * np.eye(n) + r * ata
        return np.ascontiguousarray(cho_solve(cho_factor(k), np.eye(n)))

    kinv = factor(rho)
    if warm is not None:
        x, z, u = warm.x.copy(), warm.z.copy(), warm.y / rho
    else:
        x, z, u = np.zeros(n), np.zeros(m), np.zeros(m)
    nrm = lambda v: float(np.abs(v).max(initial=0.0))
    status, it = "max_iter", 0
    rp = rd = np.inf
    y_prev = rho * u
    qn = nrm(q)
    while it < st.max_iter:
        step = min(st.check_every, st.max_iter - it)
        kernels.admm_run(kinv, a, q, off, x, z, u, rho, st.sigma, st.alpha, step,
                         kinds, starts, lens, dims, weights)
        it += step
        ax = a @ x - off
        y = rho * u
        aty = a.T @ y
        px = p @ x
        rp = nrm(ax - z)
        rd = nrm(px + q + aty)
        ep = st.eps_abs + st.eps_rel * max(nrm(ax), nrm(z))
        ed = st.eps_abs + st.eps_rel * max(nrm(px), nrm(aty), qn)
        if rp <= ep and rd <= ed:
            status = "optimal"
            break
        dy = y - y_prev
        y_prev = y
        dyn = nrm(dy)
        if dyn > 0 and it > 10 * st.check_every:
            c = dy / dyn
            if (nrm(a.T @ c) < 1e-9 and off @ c < -1e-9
                    and _dual_cone_dist(-c, kinds, starts, lens, dims) < 1e-9):
                status = "infeasible"
                break
        if st.adaptive_rho and it % st.adapt_every == 0:
            sp = max(nrm(ax), nrm(z), 1e-300)
            sd = max(nrm(px), nrm(aty), qn, 1e-300)
            ratio = np.sqrt((rp / sp) / max(rd / sd, 1e-300))
            if ratio > 5.0 or ratio < 0.2:
                ratio = float(np.clip(ratio, 1e-3, 1e3))
                rho *= ratio
                u /= ratio
                kinv = factor(rho)
    report = SolverReport(status, it, rp, rd, prob.objective(x), rho,
                          time.perf_counter() - t0)
    return Solution(x, z, rho * u, report, tuple(prob.blocks))
