"""Self-checks of the numerical building blocks, grouped into named suites.

Each check reports a measured value and the tolerance it must stay under.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .bessel import ArrayGeometry, bessel_table, cov_from_cheb
from .chebyshev import cheb_eval, cheb_fit_function, dct_matrix, gauss_cheb_quadrature, parseval_norm
from .cone import (ConeFactors, beta_map, calibration_constant, lukacs_factors, min_on_grid,
                   orthonormal_poly)
from .estimators import fit_cone
from .plv import gram, plv_solve
from .regularizer import q_operator, q_series
from .scenes import ApsFunction, covariance_oracle, make_clustered_aps, random_scene


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.tol)


def _bessel(rng):
    out = []
    for k in (np.pi, 4 * np.pi, 8 * np.pi, 22 * np.pi):
        j = bessel_table(120, np.array([k]))[0]
        out.append(Check("bessel", f"energy identity at kappa={k:.4g}",
                         abs(j[0] ** 2 + 2 * np.sum(j[1:] ** 2) - 1.0), 1e-10))
    x = rng.uniform(0, 60, 40)
    tab = bessel_table(80, x)
    ref = special.jv(np.arange(81)[None, :], x[:, None])
    out.append(Check("bessel", "max |J_n - scipy jv|, n<=80, x<=60",
                     float(np.abs(tab - ref).max()), 1e-13))
    n = np.arange(1, 80)
    rec = tab[:, n - 1] + tab[:, n + 1] - (2 * n / x[:, None]) * tab[:, n]
    out.append(Check("bessel", "three-term recurrence residual", float(np.abs(rec).max()), 1e-12))
    return out


def _cheb(rng):
    worst = 0.0
    for N in range(0, 64):
        psi = dct_matrix(N)
        worst = max(worst, float(np.abs(psi.T @ psi - np.eye(N + 1)).max()))
    out = [Check("cheb", "DCT orthonormality, N<=63", worst, 1e-10)]
    rel = 0.0
    for _ in range(100):
        a = rng.standard_normal(int(rng.integers(1, 40)))
        num = gauss_cheb_quadrature(lambda x: cheb_eval(a, x) ** 2, 2 * a.size + 2)
        rel = max(rel, abs(parseval_norm(a) ** 2 - num) / num)
    out.append(Check("cheb", "Parseval relative error", rel, 1e-8))
    return out


def _cone(rng):
    p = 31
    ph = (p + 1) // 2
    x = np.linspace(-1, 1, 401)
    err = 0.0
    for _ in range(20):
        u, v = rng.standard_normal(ph), rng.standard_normal(ph)
        direct = (1 + x) * orthonormal_poly(u, x) ** 2 + (1 - x) * orthonormal_poly(v, x) ** 2
        a = beta_map(lukacs_factors(u, v), p)
        err = max(err, float(np.abs(cheb_eval(a, x) - direct).max() / np.abs(direct).max()))
    out = [Check("cone", f"round trip, constant {calibration_constant(2 * p + 1):.6f}", err, 1e-12)]
    neg = 0.0
    for _ in range(100):
        g1 = rng.standard_normal((ph, ph))
        g2 = rng.standard_normal((ph, ph))
        a = beta_map(ConeFactors(g1 @ g1.T, g2 @ g2.T), p)
        neg = max(neg, -min_on_grid(a)[1])
    out.append(Check("cone", "negativity of random cone images", neg, 1e-8))
    u, v = rng.standard_normal(ph), rng.standard_normal(ph)
    e = fit_cone(beta_map(lukacs_factors(u, v), p), p)
    out.append(Check("cone", "certificate residual", e.cone_residual, 1e-7))
    out.append(Check("cone", "certificate negative eigenvalue", max(0.0, -e.factors.min_eig()), 0.0))
    return out


def _regularizer(rng):
    out = []
    worst = 0.0
    for K in (8, 16, 32, 64):
        d = np.pi / (K - 1)
        op = q_operator(K, d, 0.2 * d, 2)
        ser = q_series(K, d, 0.2 * d, 2, masked=True)
        worst = max(worst, float(np.abs(op.q - ser).max() / np.abs(ser).max()))
    out.append(Check("regularizer", "closed form vs series, K<=64", worst, 1e-10))
    op = q_operator()
    k = np.arange(op.K)
    lin = rng.standard_normal() + rng.standard_normal() * k
    out.append(Check("regularizer", "affine annihilation",
                     float(np.abs(op.q @ lin).max() / np.abs(lin).max()), 1e-10))
    return out


def _plv(rng):
    bad = sum(np.linalg.eigvalsh(gram(ArrayGeometry(M, 1.0)).block)[0] <= 0 for M in range(1, 33))
    out = [Check("plv", "sizes M<=32 with G not positive definite", float(bad), 0.0)]
    geom = ArrayGeometry(8, 1.0)
    err = 0.0
    G = gram(geom).block
    for _ in range(20):
        b = rng.standard_normal(2 * geom.M - 1)
        y = G @ b / np.pi
        r = np.concatenate([[y[0]], y[1:geom.M] + 1j * y[geom.M:]]) * np.pi
        err = max(err, float(np.abs(plv_solve(r, geom) - b).max()))
    out.append(Check("plv", "exact recovery of trigonometric truths", err, 1e-8))
    return out


def _forward(rng):
    # with 512 oracle nodes both routes see the same samples, so the gap is
    # the series evaluation alone; a polynomial truth checks the 2048-node path
    geom = ArrayGeometry(8, 1.0)
    worst = 0.0
    for model in ("gaussian", "sinc2", "laplacian"):
        for _ in range(3):
            aps = make_clustered_aps(random_scene(model, rng))
            a = cheb_fit_function(aps.in_x, 511)
            worst = max(worst, float(np.abs(cov_from_cheb(a, geom)
                                            - covariance_oracle(aps, geom, 512)).max()))
    out = [Check("forward", "Bessel series vs 512-node oracle", worst, 1e-8)]
    a = rng.standard_normal(40)
    poly = ApsFunction(lambda t: cheb_eval(a, np.sin(t)))
    out.append(Check("forward", "polynomial truth vs 2048-node oracle",
                     float(np.abs(cov_from_cheb(a, geom) - covariance_oracle(poly, geom)).max()),
                     1e-12))
    return out


SUITES = {
    "bessel": _bessel,
    "cheb": _cheb,
    "cone": _cone,
    "regularizer": _regularizer,
    "plv": _plv,
    "forward": _forward,
}


def run_validate(suite: str = "all", seed: int = 0) -> list[Check]:
    """Run one suite, or every suite for ``"all"``."""
    if suite != "all" and suite not in SUITES:
        raise KeyError(f"unknown suite {suite!r}; choose from {sorted(SUITES)} or 'all'")
    names = list(SUITES) if suite == "all" else [suite]
    rng = np.random.default_rng(seed)
    return [c for name in names for c in SUITES[name](rng)]
