"""Distances between angular spectra and between covariance matrices."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .scenes import HALF_PI, ApsFunction

KL_FLOOR = 1e-12


@dataclass
class MetricReport:
    l1: float
    kl: float
    nmse: float = float("nan")
    wall_ms: float = float("nan")


@lru_cache(maxsize=8)
def _panel_rule(n_per: int):
    x, w = np.polynomial.legendre.leggauss(n_per)
    return x, w


def theta_rule(n_quad: int = 4096, breaks=()) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights on ``[-pi/2, pi/2]``.

    Panels have equal width except that every interior entry of ``breaks``
    starts a new panel, so integrands with kinks there keep full order.
    """
    n_per = 16
    n_panels = max(1, n_quad // n_per)
    edges = np.linspace(-HALF_PI, HALF_PI, n_panels + 1)
    b = np.asarray(breaks, dtype=float).ravel()
    b = b[(b > -HALF_PI) & (b < HALF_PI)]
    if b.size:
        edges = np.unique(np.concatenate([edges, b]))
    x, w = _panel_rule(n_per)
    lo, hi = edges[:-1, None], edges[1:, None]
    nodes = (0.5 * (hi - lo) * x + 0.5 * (hi + lo)).ravel()
    weights = (0.5 * (hi - lo) * w).ravel()
    return nodes, weights


def _breaks(*fs: ApsFunction):
    out = [np.asarray(getattr(f, "breakpoints", ()), dtype=float).ravel() for f in fs]
    return np.concatenate(out) if out else np.empty(0)


def l1_distortion(est: ApsFunction, truth: ApsFunction, n_quad: int = 4096) -> float:
    """``int |est - truth| dtheta`` over the half circle; raw values, no clipping."""
    th, w = theta_rule(n_quad, _breaks(est, truth))
    return float(w @ np.abs(est(th) - truth(th)))


def kl_divergence(est: ApsFunction, truth: ApsFunction, n_quad: int = 4096,
                  floor: float = KL_FLOOR) -> float:
    """``int est log(est / truth) dtheta`` in nats.

    Both functions are floored at ``floor`` and renormalized to unit mass.
    """
    th, w = theta_rule(n_quad, _breaks(est, truth))
    p = np.maximum(est(th), floor)
    q = np.maximum(truth(th), floor)
    p = p / (w @ p)
    q = q / (w @ q)
    return float(w @ (p * np.log(p / q)))


def nmse(r_hat: np.ndarray, r_true: np.ndarray) -> float:
    """``||R_hat - R||_F^2 / ||R||_F^2``."""
    r_hat = np.asarray(r_hat)
    r_true = np.asarray(r_true)
    if r_hat.shape != r_true.shape:
        raise ValueError("shape mismatch")
    den = np.linalg.norm(r_true) ** 2
    if den == 0:
        raise ValueError("zero reference covariance")
    return float(np.linalg.norm(r_hat - r_true) ** 2 / den)
