"""Nonnegative Chebyshev polynomials of odd degree as images of two PSD matrices.

A degree-``p`` polynomial is nonnegative on [-1, 1] exactly when it equals
``(1 + x) f(x)^2 + (1 - x) h(x)^2`` summed over squares, which in Gram form
is ``beta(S1, S2)`` with ``S1, S2`` positive semidefinite.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .chebyshev import ChebCoeffs, cheb_eval, cheb_nodes, dct_matrix

PSD_TOL = -1e-9
_GOLD = (np.sqrt(5.0) - 1.0) / 2.0


def p_half(p: int) -> int:
    if p < 1 or p % 2 == 0:
        raise ValueError("degree must be odd and >= 1")
    return (p + 1) // 2


@dataclass(frozen=True)
class ConeFactors:
    """Pair of symmetric PSD Gram matrices."""

    s1: np.ndarray
    s2: np.ndarray

    def __post_init__(self):
        s1 = np.array(self.s1, dtype=float)
        s2 = np.array(self.s2, dtype=float)
        if s1.shape != s2.shape or s1.ndim != 2 or s1.shape[0] != s1.shape[1]:
            raise ValueError("factors must be square matrices of equal size")
        for s in (s1, s2):
            if np.abs(s - s.T).max(initial=0.0) > 1e-12 * max(1.0, np.abs(s).max()):
                raise ValueError("factors must be symmetric")
            s.setflags(write=False)
        object.__setattr__(self, "s1", s1)
        object.__setattr__(self, "s2", s2)

    @property
    def size(self) -> int:
        return self.s1.shape[0]

    def min_eig(self) -> float:
        return float(min(np.linalg.eigvalsh(self.s1)[0], np.linalg.eigvalsh(self.s2)[0]))

    def is_psd(self, tol: float = PSD_TOL) -> bool:
        return self.min_eig() >= tol


def default_nodes(p: int) -> int:
    return 2 * p + 1


def calibration_constant(N: int) -> float:
    """Scalar that turns the Gram-diagonal transform into Chebyshev coefficients.

    With ``psi_n = sqrt((2 - delta_n0)/pi) T_n`` orthonormal under the weight,
    this makes ``beta(u u^T, v v^T)`` equal ``(1 + x) f^2 + (1 - x) h^2`` for
    ``f = sum u_n psi_n`` and ``h = sum v_n psi_n``.
    """
    return np.sqrt(2.0 * (N + 1)) / np.pi


@lru_cache(maxsize=32)
def _parts(p: int, N: int):
    ph = p_half(p)
    if N < p:
        raise ValueError("need N >= p")
    psi = dct_matrix(N)
    nu = cheb_nodes(N)
    k = calibration_constant(N)
    out = (psi[:, :ph].copy(), psi[:, : p + 1].T * k, 1.0 + nu, 1.0 - nu)
    for arr in out:
        arr.setflags(write=False)
    return out


def beta_map(f: ConeFactors, p: int, N: int | None = None) -> ChebCoeffs:
    """Coefficients of the polynomial certified by ``f``.

    Parameters
    ----------
    f : ConeFactors
        Gram matrices of size ``(p + 1) / 2``.
    p : int
        Odd degree.
    N : int, optional
        Node parameter, at least ``p``; default ``2p + 1``.
    """
    N = default_nodes(p) if N is None else int(N)
    ph_mat, back, plus, minus = _parts(int(p), N)
    if f.size != ph_mat.shape[1]:
        raise ValueError(f"factors of size {f.size} do not match degree {p}")
    d1 = np.einsum("ij,jk,ik->i", ph_mat, f.s1, ph_mat)
    d2 = np.einsum("ij,jk,ik->i", ph_mat, f.s2, ph_mat)
    return ChebCoeffs(back @ (plus * d1 + minus * d2))


def svec_index(k: int):
    """Row-wise lower-triangle indices; the ordering used by ``svec``."""
    return np.tril_indices(k)


def svec(s: np.ndarray) -> np.ndarray:
    """Pack a symmetric matrix, scaling off-diagonals by sqrt(2)."""
    i, j = svec_index(s.shape[0])
    v = s[i, j].astype(float)
    v[i != j] *= np.sqrt(2.0)
    return v


def smat(v: np.ndarray, k: int) -> np.ndarray:
    i, j = svec_index(k)
    vals = np.asarray(v, dtype=float).copy()
    vals[i != j] /= np.sqrt(2.0)
    s = np.zeros((k, k))
    s[i, j] = vals
    return s + np.tril(s, -1).T


@lru_cache(maxsize=32)
def beta_matrix(p: int, N: int | None = None) -> np.ndarray:
    """Linear map from ``[svec(S1); svec(S2)]`` to stored coefficients."""
    N = default_nodes(p) if N is None else int(N)
    ph_mat, back, plus, minus = _parts(int(p), N)
    ph = ph_mat.shape[1]
    i, j = svec_index(ph)
    # d/ds of psi_h S psi_h^T diagonal for each svec entry
    cols = ph_mat[:, i] * ph_mat[:, j]
    cols[:, i != j] *= np.sqrt(2.0)
    b = np.hstack([back @ (plus[:, None] * cols), back @ (minus[:, None] * cols)])
    b.setflags(write=False)
    return b


def lukacs_factors(u, v) -> ConeFactors:
    """Rank-one factors ``(u u^T, v v^T)``."""
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if u.size != v.size:
        raise ValueError("u and v must have equal length")
    return ConeFactors(np.outer(u, u), np.outer(v, v))


def orthonormal_poly(c, x):
    """``sum c_n psi_n(x)`` with ``psi_n = sqrt((2 - delta_n0)/pi) T_n``."""
    c = np.asarray(c, dtype=float)
    d = c * np.sqrt(2.0 / np.pi)
    # psi_0 = sqrt(1/pi) = sqrt(2/pi)/sqrt(2), matching the stored-a0 convention
    return cheb_eval(d, x)


def min_on_grid(a, grid_size: int = 2001, refine_tol: float = 1e-12):
    """Minimum of a Chebyshev series on [-1, 1].

    Scans a uniform grid, then refines around the best sample by golden
    section. Returns ``(x_star, value)``.
    """
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    x = np.linspace(-1.0, 1.0, grid_size)
    vals = cheb_eval(a, x)
    k = int(np.argmin(vals))
    lo, hi = x[max(k - 1, 0)], x[min(k + 1, grid_size - 1)]
    c = hi - _GOLD * (hi - lo)
    d = lo + _GOLD * (hi - lo)
    fc, fd = cheb_eval(a, c), cheb_eval(a, d)
    while hi - lo > refine_tol:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - _GOLD * (hi - lo)
            fc = cheb_eval(a, c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _GOLD * (hi - lo)
            fd = cheb_eval(a, d)
    xm = 0.5 * (lo + hi)
    best = min((vals[k], x[k]), (cheb_eval(a, xm), xm))
    return float(best[1]), float(best[0])
