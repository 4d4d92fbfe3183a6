"""Difference-based analysis operators on a uniform angle grid."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import solve_triangular

from .chebyshev import cheb_vander

DEFAULT_K = 181
DEFAULT_N0 = 2
DEFAULT_ETA_RATIO = 0.2


def diff_matrix(K: int) -> np.ndarray:
    """First-order difference with ``(D rho)_0 = rho_0``; unit lower bidiagonal."""
    if K < 2:
        raise ValueError("K must be >= 2")
    return np.eye(K) - np.eye(K, k=-1)


def masked_power(K: int, n0: int) -> np.ndarray:
    """``D^n0`` with its first ``n0`` rows zeroed, so only interior differences remain."""
    dn = np.linalg.matrix_power(diff_matrix(K), n0)
    dn[:n0] = 0.0
    return dn


@dataclass(frozen=True)
class AnalysisOperator:
    K: int
    delta: float
    eta: float
    n0: int
    q: np.ndarray
    masked: bool = True

    def __matmul__(self, other):
        return self.q @ other


@lru_cache(maxsize=16)
def _q(K: int, delta: float, eta: float, n0: int, masked: bool) -> np.ndarray:
    d = diff_matrix(K)
    dn = masked_power(K, n0) if masked else np.linalg.matrix_power(d, n0)
    lower = np.eye(K) - (eta / delta) * d
    q = solve_triangular(lower, dn, lower=True) / delta ** n0
    q.setflags(write=False)
    return q


def q_operator(K: int = DEFAULT_K, delta: float | None = None, eta: float | None = None,
               n0: int = DEFAULT_N0, masked: bool = True) -> AnalysisOperator:
    """Weighted multi-order difference operator in closed form.

    Parameters
    ----------
    K : int
        Grid size.
    delta : float, optional
        Grid spacing; default ``pi / (K - 1)``.
    eta : float, optional
        Geometric weight, below ``delta``; default ``0.2 * delta``.
    n0 : int
        Lowest difference order.
    masked : bool
        Drop the first ``n0`` boundary rows of ``D^n0`` so that only interior
        differences are penalised. The unmasked form is the plain series.
    """
    delta = np.pi / (K - 1) if delta is None else float(delta)
    eta = DEFAULT_ETA_RATIO * delta if eta is None else float(eta)
    if not (delta > 0 and eta > 0 and n0 >= 0):
        raise ValueError("need delta > 0, eta > 0 and n0 >= 0")
    if eta >= delta:
        # D has a unit diagonal, so the series only converges for eta < delta
        raise ValueError("need eta < delta")
    return AnalysisOperator(K, delta, eta, n0, _q(int(K), delta, eta, int(n0), masked), masked)


def q_series(K: int, delta: float, eta: float, n0: int, masked: bool = False,
             rtol: float = 1e-18, max_terms: int = 10_000) -> np.ndarray:
    """Sum ``eta^(n-n0) delta^(-n) D^(n-n0) D^n0`` term by term.

    Stops once a term is below ``rtol`` times the running sum.
    """
    d = diff_matrix(K)
    term = (masked_power(K, n0) if masked else np.linalg.matrix_power(d, n0)) / delta ** n0
    total = term.copy()
    ratio = eta / delta
    for _ in range(max_terms):
        term = ratio * (d @ term)
        total += term
        if np.abs(term).max() <= rtol * np.abs(total).max():
            break
    return total


@dataclass(frozen=True)
class SampleMatrix:
    c: np.ndarray
    theta: np.ndarray


def theta_grid(K: int) -> np.ndarray:
    return -np.pi / 2 + np.arange(K) * np.pi / (K - 1)


@lru_cache(maxsize=16)
def _sample(p: int, K: int) -> SampleMatrix:
    th = theta_grid(K)
    c = cheb_vander(np.sin(th), p)
    c[:, 0] /= np.sqrt(2.0)
    c.setflags(write=False)
    th.setflags(write=False)
    return SampleMatrix(c, th)


def sample_matrix(p: int, K: int = DEFAULT_K) -> SampleMatrix:
    """Rows evaluate stored Chebyshev coefficients at ``sin(theta_k)``."""
    if K < 2 or p < 1:
        raise ValueError("need K >= 2 and p >= 1")
    return _sample(int(p), int(K))
