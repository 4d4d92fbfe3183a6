"""Minimum-norm trigonometric estimator and its extrapolated alternating-projection refinement."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .bessel import ArrayGeometry, bessel_table, effective_observations
from .chebyshev import cheb_nodes
from .scenes import ApsFunction

MU_MAX = 1e6
MEMBER_TOL = -1e-12


@dataclass(frozen=True)
class GramMatrix:
    """Weighted inner products of the cosine and sine atoms."""

    g_re: np.ndarray
    g_im: np.ndarray
    block: np.ndarray
    chol: tuple = field(repr=False)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return cho_solve(self.chol, rhs)


@lru_cache(maxsize=32)
def gram(geom: ArrayGeometry) -> GramMatrix:
    """Gram matrix of ``1, cos(kappa_m x), sin(kappa_m x)`` under the Chebyshev weight.

    Raises
    ------
    numpy.linalg.LinAlgError
        If the Cholesky factorization fails.
    """
    M = geom.M
    m = np.arange(M)
    j0 = bessel_table(0, geom.kappa(np.arange(2 * M)))[:, 0]
    diff = np.abs(m[:, None] - m[None, :])
    summ = m[:, None] + m[None, :]
    g_re = 0.5 * np.pi * (j0[diff] + j0[summ])
    mi = m[1:]
    g_im = 0.5 * np.pi * (j0[np.abs(mi[:, None] - mi[None, :])] - j0[mi[:, None] + mi[None, :]])
    block = np.zeros((2 * M - 1, 2 * M - 1))
    block[:M, :M] = g_re
    block[M:, M:] = g_im
    chol = cho_factor(block, lower=True)
    for arr in (g_re, g_im, block):
        arr.setflags(write=False)
    return GramMatrix(g_re, g_im, block, chol)


def trig_basis(x, geom: ArrayGeometry) -> np.ndarray:
    """Columns ``1, cos(kappa_m x) (m>=1), sin(kappa_m x) (m>=1)``."""
    x = np.asarray(x, dtype=float).ravel()
    kx = np.outer(x, geom.kappas[1:])
    return np.hstack([np.ones((x.size, 1)), np.cos(kx), np.sin(kx)])


def plv_solve(r, geom: ArrayGeometry) -> np.ndarray:
    """Trigonometric coefficients ``b = pi G^{-1} y`` of the minimum-norm fit."""
    y = effective_observations(r)
    if y.size != 2 * geom.M - 1:
        raise ValueError("lag count does not match geometry")
    return np.pi * gram(geom).solve(y)


def plv_eval(b, geom: ArrayGeometry, x):
    """Evaluate ``b_0 + sum b_m cos(kappa_m x) + b_{M-1+m} sin(kappa_m x)``."""
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > 1.0 + 1e-12):
        raise ValueError("plv_eval: x outside [-1, 1]")
    out = trig_basis(xa, geom) @ np.asarray(b, dtype=float)
    return out.reshape(xa.shape) if xa.ndim else float(out[0])


def plv_aps(b, geom: ArrayGeometry) -> ApsFunction:
    b = np.asarray(b, dtype=float).copy()
    return ApsFunction(lambda t: plv_eval(b, geom, np.sin(t)), "reconstructed-trig",
                       meta={"b": b})


@dataclass
class EapmResult:
    """Final EAPM iterate on the node grid.

    ``converged`` is False when ``max_iter`` ran out before both residuals
    dropped to ``tol``; that run counts as flagged.
    """

    nodes: np.ndarray
    values: np.ndarray
    iterations: int
    converged: bool
    neg_residual: float
    constraint_residual: float
    trace: list = field(default_factory=list)

    def aps(self) -> ApsFunction:
        # nodes are uniform in theta; interpolate there
        th = np.arcsin(self.nodes[::-1])
        v = self.values[::-1].copy()
        return ApsFunction(lambda t: np.interp(t, th, v), "reconstructed-grid", th)


def eapm_run(r, geom: ArrayGeometry, grid_N: int | None = None, max_iter: int = 500,
             tol: float = 1e-6, trace: bool = False) -> EapmResult:
    """Alternate between the covariance-consistent set and the nonnegative cone.

    Parameters
    ----------
    r : array_like
        Covariance lags.
    geom : ArrayGeometry
    grid_N : int, optional
        Number of Chebyshev zero nodes; default ``8 M``.
    max_iter : int
    tol : float
        Target for both the negativity and the constraint residual.
    trace : bool
        Record ``(t, mu, neg, cons)`` per iteration.
    """
    M = geom.M
    n = 8 * M if grid_N is None else int(grid_N)
    if n < 4 * M or max_iter < 1:
        raise ValueError("need grid_N >= 4M and max_iter >= 1")
    nodes = cheb_nodes(n - 1)
    basis = trig_basis(nodes, geom)
    w = np.pi / n
    gm = gram(geom)
    y = effective_observations(r)

    def obs(v):
        return w * (basis.T @ v) / np.pi

    def to_v(v):
        return v + basis @ (np.pi * gm.solve(y - obs(v)))

    def residuals(v):
        return max(0.0, -v.min()), float(np.abs(obs(v) - y).max())

    g = basis @ plv_solve(r, geom)
    rec = []
    neg, cons = residuals(g)
    it = 0
    while it < max_iter and max(neg, cons) > tol:
        it += 1
        z = np.maximum(g, 0.0)
        v = to_v(z)
        mu = 1.0
        if g.min() < MEMBER_TOL:
            den = np.dot(v - g, v - g)
            if den > 0:
                mu = min(max(np.dot(z - g, z - g) / den, 1.0), MU_MAX)
        # re-project: with mu > 2 the affine step amplifies round-off off V
        g = to_v(g + mu * (v - g))
        neg, cons = residuals(g)
        if trace:
            rec.append((it, mu, neg, cons))
    return EapmResult(nodes, g, it, max(neg, cons) <= tol, neg, cons, rec)
