"""Covariance-fitting estimators over the nonnegative cone, and the grid NNLS baseline."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import Akima1DInterpolator
from scipy.optimize import least_squares, nnls

from .bessel import ArrayGeometry, design_system, effective_observations
from .chebyshev import ChebCoeffs, cheb_eval
from .cone import (ConeFactors, beta_map, beta_matrix, default_nodes, min_on_grid, p_half,
                   smat, svec)
from .conic import L1, PSD, Block, ConicProblem, Solution, SolverReport, SolverSettings, solve_conic
from .regularizer import AnalysisOperator, SampleMatrix, q_operator, sample_matrix
from .scenes import HALF_PI, ApsFunction

#: P-2 weight relative to ``||y||_2`` when none is given.
DEFAULT_LAMBDA_REL = 1e-9


def default_lambda(r) -> float:
    return DEFAULT_LAMBDA_REL * float(np.linalg.norm(effective_observations(r)))


def cheb_aps(a: ChebCoeffs) -> ApsFunction:
    """Angle-domain view ``theta -> g(sin theta)`` of a Chebyshev density."""
    return ApsFunction(lambda t: cheb_eval(a, np.sin(t)), "reconstructed-cheb",
                       meta={"a": a.data})


@dataclass
class Estimate:
    a: ChebCoeffs
    factors: ConeFactors
    report: SolverReport
    cone_residual: float
    fit: float
    penalty: float = 0.0
    solution: Solution | None = field(default=None, repr=False)

    @property
    def objective(self) -> float:
        return self.fit + self.penalty

    def aps(self) -> ApsFunction:
        return cheb_aps(self.a)


def _psd_part(s: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (s + s.T))
    pos = w > 0
    return (v[:, pos] * w[pos]) @ v[:, pos].T


def _shift_margin(a, p: int, N: int) -> float:
    # eps with a - eps * beta(I, I) >= min(a) / 2 on [-1, 1]; 0 when a touches zero
    _, lo = min_on_grid(a)
    if lo <= 0:
        return 0.0
    eye = np.eye(p_half(p))
    _, neg_hi = min_on_grid(-beta_map(ConeFactors(eye, eye), p, N).data)
    return 0.5 * lo / -neg_hi


def _correct(f: ConeFactors, bmat: np.ndarray, target: np.ndarray) -> ConeFactors:
    """Minimum-norm linear fix of ``bmat @ s = target``; kept only if still PSD."""
    k = f.size
    nv = k * (k + 1) // 2
    s = np.concatenate([svec(f.s1), svec(f.s2)])
    ds = np.linalg.lstsq(bmat, target - bmat @ s, rcond=None)[0]
    g = ConeFactors(smat(s[:nv] + ds[:nv], k), smat(s[nv:] + ds[nv:], k))
    return g if g.min_eig() >= 0 else f


def _svec_gram(rows: np.ndarray, k: int) -> np.ndarray:
    # each row m as the symmetric G with m . svec(S) = tr(G S)
    i, j = np.tril_indices(k)
    g = np.zeros((rows.shape[0], k, k))
    vals = rows.copy()
    vals[:, i != j] /= np.sqrt(2.0)
    g[:, i, j] = vals
    g[:, j, i] = vals
    return g


def polish_factors(f: ConeFactors, lin: np.ndarray, target: np.ndarray,
                   max_nfev: int = 20_000) -> ConeFactors:
    """Refine ``min ||lin @ [svec S1; svec S2] - target||`` over ``S_i = L_i L_i^T``.

    Trust-region least squares on the square roots of ``f``, so the result is
    PSD by construction. Returns ``f`` unless the residual drops.
    """
    k = f.size
    nv = k * (k + 1) // 2
    kk = k * k
    g1 = _svec_gram(lin[:, :nv], k)
    g2 = _svec_gram(lin[:, nv:], k)

    def unpack(x):
        return x[:kk].reshape(k, k), x[kk:].reshape(k, k)

    def fun(x):
        l1, l2 = unpack(x)
        return (np.einsum("rij,ik,jk->r", g1, l1, l1)
                + np.einsum("rij,ik,jk->r", g2, l2, l2) - target)

    def jac(x):
        l1, l2 = unpack(x)
        n = target.size
        return np.hstack([2.0 * np.einsum("rij,jk->rik", g1, l1).reshape(n, -1),
                          2.0 * np.einsum("rij,jk->rik", g2, l2).reshape(n, -1)])

    def root(s):
        w, v = np.linalg.eigh(s)
        return (v * np.sqrt(np.maximum(w, 0.0))).ravel()

    x0 = np.concatenate([root(f.s1), root(f.s2)])
    r0 = fun(x0)
    sol = least_squares(fun, x0, jac=jac, method="trf", xtol=1e-15, ftol=1e-15,
                        gtol=1e-15, max_nfev=max_nfev)
    if sol.fun @ sol.fun >= r0 @ r0:
        return f
    l1, l2 = unpack(sol.x)
    return ConeFactors(l1 @ l1.T, l2 @ l2.T)


def cone_problem(r, geom: ArrayGeometry, p: int, N: int | None = None,
                 analysis: np.ndarray | None = None, lam: float = 0.0) -> ConicProblem:
    """Least-squares fit over ``(S1, S2)`` with an optional l1 analysis term.

    ``analysis`` maps stored coefficients to the penalised vector.
    """
    N = default_nodes(p) if N is None else N
    fwd = design_system(geom, p).forward
    y = effective_observations(r)
    if y.size != fwd.shape[0]:
        raise ValueError("lag count does not match geometry")
    bmat = beta_matrix(p, N)
    ab = fwd @ bmat
    nv = bmat.shape[1] // 2
    ph = p_half(p)
    eye = np.eye(2 * nv)
    blocks = [Block(PSD, eye[:nv], dim=ph), Block(PSD, eye[nv:], dim=ph)]
    if analysis is not None and lam > 0:
        lb = analysis @ bmat
        scale = 1.0 / np.linalg.norm(lb, 2)
        blocks.append(Block(L1, scale * lb, weight=lam / scale))
    return ConicProblem(ab.T @ ab, -ab.T @ y, blocks)


def _interior_step(a: ChebCoeffs, r, geom, p, N, settings) -> Estimate | None:
    # least-squares step from a; accepted only with an exact cone certificate
    fwd = design_system(geom, p).forward
    y = effective_observations(r)
    step = np.linalg.lstsq(fwd, y - fwd @ a.data, rcond=None)[0]
    cand = a.data + step
    if min_on_grid(cand)[1] <= 0:
        return None
    cert = fit_cone(cand, p, N, settings)
    if cert.cone_residual > 1e-10 * max(1.0, np.abs(cand).max()):
        return None
    return cert


def _finish(sol: Solution, r, geom, p, N, analysis, lam, settings=None,
            polish=False) -> Estimate:
    ph = p_half(p)
    nv = ph * (ph + 1) // 2
    f = ConeFactors(_psd_part(smat(sol.z[:nv], ph)), _psd_part(smat(sol.z[nv:2 * nv], ph)))
    a = beta_map(f, p, N)
    y = effective_observations(r)
    fwd = design_system(geom, p).forward

    def objective(c):
        res = fwd @ c - y
        pen = lam * float(np.abs(analysis @ c).sum()) if analysis is not None else 0.0
        return 0.5 * float(res @ res), pen

    if polish:
        cert = _interior_step(a, r, geom, p, N, settings)
        if cert is not None and sum(objective(cert.a.data)) < sum(objective(a.data)):
            f, a = cert.factors, cert.a
    fit, pen = objective(a.data)
    a_x = beta_matrix(p, N) @ sol.x
    return Estimate(a, f, sol.report, float(np.abs(a_x - a.data).max()), fit, pen, sol)


def fit_cone(a, p: int, N: int | None = None, settings: SolverSettings | None = None,
             exact_tol: float = 1e-12) -> Estimate:
    """Find PSD factors whose image is closest to the given coefficients.

    For a strictly positive polynomial the factors are first fitted to
    ``a - eps * beta(I, I)`` and then shifted by ``eps * I``, which leaves an
    eigenvalue margin for one exact linear correction. When that is not
    enough (the polynomial nearly touches zero) :func:`polish_factors`
    refines the square roots.
    """
    N = default_nodes(p) if N is None else N
    ph = p_half(p)
    target = np.asarray(getattr(a, "data", a), dtype=float)
    bmat = beta_matrix(p, N)
    nv = bmat.shape[1] // 2
    eps = _shift_margin(target, p, N)
    eye = np.eye(ph)
    shifted = target - eps * beta_map(ConeFactors(eye, eye), p, N).data
    blocks = [Block(PSD, np.eye(2 * nv)[:nv], dim=ph), Block(PSD, np.eye(2 * nv)[nv:], dim=ph)]
    sol = solve_conic(ConicProblem(bmat.T @ bmat, -bmat.T @ shifted, blocks), settings)
    f = ConeFactors(_psd_part(smat(sol.z[:nv], ph)) + eps * eye,
                    _psd_part(smat(sol.z[nv:], ph)) + eps * eye)
    f = _correct(f, bmat, target)
    if np.abs(beta_map(f, p, N).data - target).max() > exact_tol * max(1.0, np.abs(target).max()):
        f = polish_factors(f, bmat, target)
    out = beta_map(f, p, N)
    resid = out.data - target
    return Estimate(out, f, sol.report, float(np.abs(resid).max()),
                    0.5 * float(resid @ resid), 0.0, sol)


def solve_p1(r, geom: ArrayGeometry, p: int = 31, N: int | None = None,
             settings: SolverSettings | None = None, polish: bool = True) -> Estimate:
    """Nonnegative Chebyshev density of degree ``p`` that best fits the lags.

    With ``polish``, a least-squares step from the ADMM point is taken
    whenever it lands strictly inside the cone and can be certified there.
    """
    N = default_nodes(p) if N is None else N
    sol = solve_conic(cone_problem(r, geom, p, N), settings)
    return _finish(sol, r, geom, p, N, None, 0.0, settings, polish)


def solve_p2(r, geom: ArrayGeometry, p: int = 31, N: int | None = None,
             reg: AnalysisOperator | None = None, C: SampleMatrix | None = None,
             lam: float | None = None, settings: SolverSettings | None = None,
             warm: Estimate | None = None, polish: bool = True) -> Estimate:
    """As :func:`solve_p1` plus ``lam * ||Q C a||_1`` on the angle grid.

    Parameters
    ----------
    reg, C : optional
        Analysis operator and sample matrix; defaults use 181 grid points.
    lam : float, optional
        Penalty weight; default ``1e-9 * ||y||_2``.
    warm : Estimate, optional
        Starting point, typically the P-1 solution.
    polish : bool
        Try the certified least-squares step of :func:`solve_p1`; it is kept
        only if the penalised objective drops.
    """
    N = default_nodes(p) if N is None else N
    reg = q_operator() if reg is None else reg
    C = sample_matrix(p, reg.K) if C is None else C
    if C.c.shape != (reg.K, p + 1):
        raise ValueError("sample matrix does not match operator and degree")
    lam = default_lambda(r) if lam is None else float(lam)
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    analysis = reg.q @ C.c
    prob = cone_problem(r, geom, p, N, analysis, lam)
    start = None
    if warm is not None and warm.solution is not None:
        x0 = warm.solution.x
        z0 = np.concatenate([blk.a @ x0 - blk.b for blk in prob.blocks])
        start = Solution(x0, z0, np.zeros_like(z0), warm.report)
    sol = solve_conic(prob, settings, warm=start)
    return _finish(sol, r, geom, p, N, analysis, lam, settings, polish)


@dataclass
class NnlsResult:
    theta: np.ndarray
    weights: np.ndarray
    density: np.ndarray
    residual: float
    clipped: bool
    _interp: object = field(repr=False, default=None)

    def aps(self) -> ApsFunction:
        f = self._interp
        return ApsFunction(f, "reconstructed-grid", self.theta.copy(),
                           {"clipped": self.clipped})


def nnls_dictionary(geom: ArrayGeometry, theta) -> np.ndarray:
    """Real-stacked steering columns ``[cos(kappa_m s); sin(kappa_m s) (m>=1)]``, ``s = sin theta``."""
    ks = np.outer(geom.kappas, np.sin(np.asarray(theta)))
    return np.vstack([np.cos(ks), np.sin(ks[1:])])


def nnls_estimate(r, geom: ArrayGeometry, grid_size: int | None = None) -> NnlsResult:
    """Nonnegative fit of point atoms at cell centres, turned into a continuous density.

    Weights become densities by dividing by the cell width. Between centres
    an Akima interpolant is used, held constant beyond the outer centres and
    clipped at zero; ``clipped`` reports whether clipping changed anything.
    """
    G = 2 * geom.M - 1 if grid_size is None else int(grid_size)
    if G < 1:
        raise ValueError("grid_size must be >= 1")
    width = np.pi / G
    theta = -HALF_PI + (np.arange(G) + 0.5) * width
    A = nnls_dictionary(geom, theta)
    rv = np.asarray(r, dtype=complex)
    target = np.concatenate([rv.real, rv[1:].imag])
    c, res = nnls(A, target)
    dens = c / width
    if G == 1:
        interp = lambda t, d=dens[0]: np.full(np.shape(t), d)
        clipped = False
    else:
        ak = Akima1DInterpolator(theta, dens)
        lo, hi = theta[0], theta[-1]
        fine = np.linspace(lo, hi, 64 * G)
        clipped = bool((ak(fine) < 0).any())

        def interp(t, ak=ak, lo=lo, hi=hi):
            return np.maximum(ak(np.clip(t, lo, hi)), 0.0)
    return NnlsResult(theta, c, dens, float(res), clipped, interp)


def with_settings(settings: SolverSettings | None, **kw) -> SolverSettings:
    return replace(settings or SolverSettings(), **kw)
