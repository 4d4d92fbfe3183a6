"""Chebyshev primitives on [-1, 1] with weight (1 - x^2)^(-1/2).

Coefficient vectors are stored as ``[sqrt(2) a_0, a_1, ..., a_p]`` so that
``||g||_w^2 = (pi / 2) * ||data||^2``. Evaluation hides the scaling.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from ._backend import kernels

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class ChebCoeffs:
    """Chebyshev coefficients in storage convention.

    Parameters
    ----------
    data : ndarray
        ``[sqrt(2) a_0, a_1, ..., a_p]``.
    """

    data: np.ndarray

    def __post_init__(self):
        d = np.array(self.data, dtype=float).ravel()
        if d.size == 0:
            raise ValueError("empty coefficient vector")
        if not np.all(np.isfinite(d)):
            raise ValueError("coefficients must be finite")
        d.setflags(write=False)
        object.__setattr__(self, "data", d)

    @property
    def p(self) -> int:
        return self.data.size - 1

    @property
    def plain(self) -> np.ndarray:
        """Mathematical coefficients ``[a_0, ..., a_p]``."""
        out = self.data.copy()
        out[0] /= SQRT2
        return out

    @classmethod
    def from_plain(cls, a) -> "ChebCoeffs":
        d = np.array(a, dtype=float)
        d[0] *= SQRT2
        return cls(d)

    def __call__(self, x):
        return cheb_eval(self, x)


def _data(a) -> np.ndarray:
    return a.data if isinstance(a, ChebCoeffs) else np.asarray(a, dtype=float)


def cheb_eval(a, x):
    """Evaluate ``sum a_n T_n(x)`` by the Clenshaw recurrence.

    Raises
    ------
    ValueError
        If any ``|x| > 1 + 1e-12``.
    """
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > 1.0 + 1e-12):
        raise ValueError("cheb_eval: x outside [-1, 1]")
    out = kernels.clenshaw(_data(a), np.clip(xa, -1.0, 1.0).ravel())
    return out.reshape(xa.shape) if xa.ndim else float(out[0])


def cheb_vander(x, p: int) -> np.ndarray:
    """Matrix ``[T_0(x), ..., T_p(x)]`` with one row per entry of ``x``."""
    x = np.asarray(x, dtype=float).ravel()
    t = np.empty((x.size, p + 1))
    t[:, 0] = 1.0
    if p >= 1:
        t[:, 1] = x
    for n in range(2, p + 1):
        t[:, n] = 2.0 * x * t[:, n - 1] - t[:, n - 2]
    return t


@lru_cache(maxsize=64)
def _nodes(N: int) -> np.ndarray:
    j = np.arange(N + 1)
    nu = np.cos((2 * j + 1) * np.pi / (2 * (N + 1)))
    nu.setflags(write=False)
    return nu


def cheb_nodes(N: int) -> np.ndarray:
    """The ``N + 1`` zeros of ``T_{N+1}``, in decreasing order."""
    if N < 0:
        raise ValueError("N must be non-negative")
    return _nodes(int(N))


@lru_cache(maxsize=64)
def _dct(N: int) -> np.ndarray:
    t = cheb_vander(_nodes(N), N)
    scale = np.full(N + 1, np.sqrt(2.0 / (N + 1)))
    scale[0] = np.sqrt(1.0 / (N + 1))
    psi = t * scale
    psi.setflags(write=False)
    return psi


def dct_matrix(N: int) -> np.ndarray:
    """Orthonormal DCT-II matrix, ``psi[j, n] = sqrt((2 - delta_n0)/(N+1)) T_n(nu_j)``."""
    if N < 0:
        raise ValueError("N must be non-negative")
    return _dct(int(N))


def cheb_fit(values, p: int | None = None) -> ChebCoeffs:
    """Interpolate node values at ``cheb_nodes(len(values) - 1)``.

    Parameters
    ----------
    values : array_like
        Samples at the ``N + 1`` Chebyshev zeros, in node order.
    p : int, optional
        Truncation degree, at most ``N``. Defaults to ``N``.

    Returns
    -------
    ChebCoeffs
        Coefficients of the degree-``N`` interpolant truncated to degree ``p``.
    """
    v = np.asarray(values, dtype=float).ravel()
    N = v.size - 1
    if p is None:
        p = N
    if p > N or p < 0:
        raise ValueError(f"degree {p} not in [0, {N}]")
    c = dct_matrix(N).T @ v
    return ChebCoeffs(np.sqrt(2.0 / (N + 1)) * c[: p + 1])


def cheb_fit_function(f: Callable, N: int, p: int | None = None) -> ChebCoeffs:
    """Sample ``f`` at ``cheb_nodes(N)`` and interpolate."""
    return cheb_fit(f(cheb_nodes(N)), p)


def parseval_norm(a) -> float:
    """Weighted norm ``||g||_w`` from the coefficients alone."""
    d = _data(a)
    return float(np.sqrt(0.5 * np.pi * np.dot(d, d)))


def gauss_cheb_quadrature(f: Callable, N: int):
    """Approximate ``int f(x) (1 - x^2)^(-1/2) dx`` with ``N + 1`` zero nodes.

    Exact when ``f`` is a polynomial of degree at most ``2N + 1``.
    """
    vals = np.asarray(f(cheb_nodes(N)))
    return np.pi / (N + 1) * vals.sum(axis=0)
