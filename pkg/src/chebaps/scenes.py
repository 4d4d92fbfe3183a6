"""Angular power spectra: clustered scenes, perturbation, and the quadrature oracle."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .bessel import ArrayGeometry
from .chebyshev import gauss_cheb_quadrature

HALF_PI = np.pi / 2.0
KINDS = ("gaussian", "sinc2", "laplacian")

#: Uniform spread ranges in degrees per cluster shape.
SPREAD_DEG = {
    "gaussian": (3.0, 9.0),
    "sinc2": (4.8, 11.2),
    "laplacian": (2.1, 10.6),
}
MU_RANGE_DEG = (-78.0, 78.0)
POWER_RANGE = (0.5, 1.0)
_CHUNK = 512


@dataclass(frozen=True)
class ClusterSpec:
    kind: str
    mu: float
    sigma: float
    c: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown cluster kind {self.kind!r}")
        if not self.sigma > 0 or not self.c > 0:
            raise ValueError("sigma and c must be positive")
        if not abs(self.mu) < HALF_PI:
            raise ValueError("|mu| must be below pi/2")

    def shape(self, theta):
        u = (np.asarray(theta, dtype=float) - self.mu) / self.sigma
        if self.kind == "gaussian":
            return np.exp(-0.5 * u * u)
        if self.kind == "sinc2":
            # np.sinc is sin(pi t)/(pi t)
            return np.sinc(u / 2.0) ** 2
        return np.exp(-np.abs(u))


@dataclass
class ApsFunction:
    """Nonnegative function of angle on ``[-pi/2, pi/2]``.

    Parameters
    ----------
    evaluator : callable
        Maps an array of angles in radians to values.
    provenance : str
        One of ``clustered``, ``perturbed``, ``reconstructed-cheb``,
        ``reconstructed-trig``, ``reconstructed-grid``.
    breakpoints : ndarray
        Angles where the function is not smooth; quadrature splits there.
    """

    evaluator: Callable
    provenance: str = "clustered"
    breakpoints: np.ndarray = field(default_factory=lambda: np.empty(0))
    meta: dict = field(default_factory=dict)

    def __call__(self, theta):
        return self.evaluator(np.asarray(theta, dtype=float))

    def in_x(self, x):
        """The same function in ``x = sin(theta)``."""
        return self.evaluator(np.arcsin(np.clip(x, -1.0, 1.0)))

    def scaled(self, factor: float) -> "ApsFunction":
        f = self.evaluator
        return ApsFunction(lambda t: factor * f(t), self.provenance,
                           self.breakpoints, dict(self.meta))


def make_clustered_aps(clusters: Sequence[ClusterSpec]) -> ApsFunction:
    """Sum of weighted cluster shapes."""
    clusters = list(clusters)
    if not clusters:
        raise ValueError("need at least one cluster")

    def rho(theta):
        return sum(cl.c * cl.shape(theta) for cl in clusters)

    kinks = np.array(sorted(cl.mu for cl in clusters if cl.kind == "laplacian"))
    return ApsFunction(rho, "clustered", kinks, {"clusters": clusters})


def random_scene(model: str, rng, q_range=(1, 5)) -> list[ClusterSpec]:
    """Draw a random cluster list for one shape model.

    ``rng`` is a ``numpy.random.Generator`` or an integer seed.
    """
    if model not in KINDS:
        raise ValueError(f"unknown model {model!r}")
    rng = np.random.default_rng(rng)
    q = int(rng.integers(q_range[0], q_range[1] + 1))
    lo, hi = SPREAD_DEG[model]
    out = []
    for _ in range(q):
        c = rng.uniform(*POWER_RANGE)
        mu = np.deg2rad(rng.uniform(*MU_RANGE_DEG))
        sigma = np.deg2rad(rng.uniform(lo, hi))
        out.append(ClusterSpec(model, float(mu), float(sigma), float(c)))
    return out


@dataclass(frozen=True)
class PerturbSpec:
    sigma: float = 0.2
    window: int = 6
    seed: int = 0
    grid_size: int = 721

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be >= 1")


def perturb(aps: ApsFunction, spec: PerturbSpec) -> ApsFunction:
    """Multiplicative smoothed-noise perturbation, clipped at zero.

    The result is piecewise linear on a uniform ``spec.grid_size`` grid.
    """
    K = spec.grid_size
    if K < spec.window:
        raise ValueError("grid shorter than smoothing window")
    if spec.sigma == 0:
        return aps
    theta = np.linspace(-HALF_PI, HALF_PI, K)
    rng = np.random.default_rng(spec.seed)
    raw = rng.standard_normal(K + spec.window - 1)
    e = np.convolve(raw, np.ones(spec.window) / spec.window, mode="valid")
    e = (e - e.mean()) / e.std()
    vals = aps(theta) * np.maximum(1.0 + spec.sigma * e, 0.0)
    return ApsFunction(lambda t: np.interp(t, theta, vals), "perturbed",
                       theta, {"grid": theta, "values": vals})


def covariance_oracle(aps: ApsFunction, geom: ArrayGeometry, n_quad: int = 2048,
                      m=None) -> np.ndarray:
    """Lags ``r_m = int rho(theta) exp(i kappa_m sin theta) dtheta`` by quadrature.

    Uses ``n_quad`` Chebyshev zero nodes in ``x = sin(theta)``.
    """
    lags = np.arange(geom.M) if m is None else np.asarray(m)
    k = geom.kappa(lags)

    def integrand(x):
        return aps.in_x(x)[:, None] * np.exp(1j * np.outer(x, k))

    return gauss_cheb_quadrature(integrand, n_quad - 1)


def normalize(r) -> np.ndarray:
    """Scale lags so that ``r_0 = 1``."""
    r = np.asarray(r, dtype=complex).copy()
    r0 = r[0].real
    if not r0 > 0:
        raise ValueError("r_0 must be positive")
    r /= r0
    r[0] = 1.0
    return r


def toeplitz_from_lags(r) -> np.ndarray:
    """Hermitian Toeplitz matrix with first column ``r``."""
    r = np.asarray(r, dtype=complex)
    M = r.size
    i, j = np.indices((M, M))
    d = i - j
    return np.where(d >= 0, r[np.abs(d)], np.conj(r[np.abs(d)]))


def steering(theta, geom: ArrayGeometry) -> np.ndarray:
    """Steering vectors ``exp(i kappa_m sin theta)``; shape ``(M, len(theta))``."""
    return np.exp(1j * np.outer(geom.kappas, np.sin(np.atleast_1d(theta))))


def synth_snapshots(aps: ApsFunction, geom: ArrayGeometry, n_snap: int,
                    n_rays: int = 100, rng=None, grid_size: int = 4096) -> np.ndarray:
    """Ray-sum channel snapshots with angles drawn from the APS.

    Returns an ``M x n_snap`` complex matrix whose covariance tends to the
    unit-mass Toeplitz covariance of ``aps``.
    """
    if n_rays < 1:
        raise ValueError("n_rays must be >= 1")
    rng = np.random.default_rng(rng)
    theta = np.linspace(-HALF_PI, HALF_PI, grid_size)
    dens = np.maximum(aps(theta), 0.0)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(theta))])
    cdf /= cdf[-1]
    out = np.empty((geom.M, n_snap), dtype=complex)
    for s0 in range(0, n_snap, _CHUNK):
        t = min(_CHUNK, n_snap - s0)
        ang = np.interp(rng.uniform(size=(t, n_rays)), cdf, theta)
        alpha = (rng.standard_normal((t, n_rays))
                 + 1j * rng.standard_normal((t, n_rays))) / np.sqrt(2.0 * n_rays)
        ph = np.exp(1j * geom.kappas[:, None, None] * np.sin(ang)[None])
        out[:, s0:s0 + t] = (ph * alpha[None]).sum(axis=2)
    return out


def sample_lags(h: np.ndarray) -> np.ndarray:
    """Toeplitz-averaged first column of the sample covariance of ``h``."""
    M, T = h.shape
    R = h @ h.conj().T / T
    return np.array([np.mean(np.diagonal(R, -m)) for m in range(M)])
