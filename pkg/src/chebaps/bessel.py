"""Bessel functions and the Chebyshev-Bessel covariance model of a ULA."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._backend import kernels
from .chebyshev import ChebCoeffs, _data

#: Largest order for which the recurrence is documented accurate.
MAX_ORDER = 200


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear array with ``M`` antennas and spacing ratio ``gamma = 2d/lambda``."""

    M: int
    gamma: float = 1.0

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise ValueError("M must be a positive integer")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        object.__setattr__(self, "M", int(self.M))
        object.__setattr__(self, "gamma", float(self.gamma))

    def kappa(self, m):
        """Spatial frequency ``gamma * pi * m``."""
        return self.gamma * np.pi * np.asarray(m, dtype=float)

    @property
    def kappas(self) -> np.ndarray:
        return self.kappa(np.arange(self.M))


def bessel_table(nmax: int, x) -> np.ndarray:
    """``J_0 .. J_nmax`` at each entry of ``x``; shape ``(len(x), nmax + 1)``.

    Values with magnitude under 1e-280 are returned as exact zeros.
    """
    if nmax < 0:
        raise ValueError("nmax must be non-negative")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(x)):
        raise ValueError("x must be finite")
    return kernels.bessel_table(int(nmax), x.ravel())


def bessel_j(n: int, x):
    """Bessel function of the first kind ``J_n(x)`` for integer ``n >= 0``."""
    if n < 0 or int(n) != n:
        raise ValueError("order must be a non-negative integer")
    xa = np.asarray(x, dtype=float)
    col = bessel_table(int(n), xa.ravel())[:, int(n)]
    return col.reshape(xa.shape) if xa.ndim else float(col[0])


def cov_from_cheb(a, geom: ArrayGeometry, m=None) -> np.ndarray:
    """Covariance lags ``r_m = pi * sum_n i^n a_n J_n(kappa_m)``.

    Parameters
    ----------
    a : ChebCoeffs or array_like
        Coefficients in storage convention.
    geom : ArrayGeometry
    m : array_like of int, optional
        Lag indices; defaults to ``0 .. M-1``.
    """
    d = _data(a).copy()
    d[0] /= np.sqrt(2.0)
    lags = np.arange(geom.M) if m is None else np.asarray(m)
    jt = bessel_table(d.size - 1, geom.kappa(lags))
    phase = 1j ** np.arange(d.size)
    return np.pi * (jt * (phase * d)).sum(axis=1)


def effective_observations(r) -> np.ndarray:
    """Stack ``[Re r_0..r_{M-1}, Im r_1..r_{M-1}] / pi``."""
    r = np.asarray(r, dtype=complex).ravel()
    return np.concatenate([r.real, r[1:].imag]) / np.pi


@dataclass(frozen=True)
class RegressionSystem:
    """Real linear model ``y = phi @ pi @ a`` for degree-``p`` coefficients."""

    geom: ArrayGeometry
    p: int
    phi_e: np.ndarray
    phi_o: np.ndarray
    phi: np.ndarray
    pi: np.ndarray

    @property
    def p_half(self) -> int:
        return (self.p + 1) // 2

    @property
    def forward(self) -> np.ndarray:
        """``phi @ pi``, mapping stored coefficients to observations."""
        return _forward(self.geom, self.p)


@lru_cache(maxsize=32)
def _system(geom: ArrayGeometry, p: int) -> RegressionSystem:
    M, ph = geom.M, (p + 1) // 2
    jt = bessel_table(p, geom.kappas)
    sign = (-1.0) ** np.arange(ph)
    phi_e = jt[:, 0::2] * sign
    phi_e[:, 0] /= np.sqrt(2.0)
    phi_o = jt[1:, 1::2] * sign
    phi = np.zeros((2 * M - 1, p + 1))
    phi[:M, :ph] = phi_e
    phi[M:, ph:] = phi_o
    perm = np.zeros((p + 1, p + 1))
    order = np.concatenate([np.arange(0, p + 1, 2), np.arange(1, p + 1, 2)])
    perm[np.arange(p + 1), order] = 1.0
    for arr in (phi_e, phi_o, phi, perm):
        arr.setflags(write=False)
    return RegressionSystem(geom, p, phi_e, phi_o, phi, perm)


@lru_cache(maxsize=32)
def _forward(geom: ArrayGeometry, p: int) -> np.ndarray:
    s = _system(geom, p)
    f = s.phi @ s.pi
    f.setflags(write=False)
    return f


def design_system(geom: ArrayGeometry, p: int) -> RegressionSystem:
    """Design matrices for odd degree ``p``; cached per ``(geom, p)``."""
    if p < 1 or p % 2 == 0:
        raise ValueError("p must be odd and >= 1")
    return _system(geom, int(p))


def truncation_bound(tail) -> float:
    """Uniform bound on ``|r(kappa) - r_{<=p}(kappa)|`` from the dropped coefficients."""
    t = np.asarray(tail, dtype=float).ravel()
    return float(np.sqrt(np.pi) * np.sqrt(np.pi / 2.0) * np.linalg.norm(t))
