"""Compiled kernels against the pure numpy fallback."""

import numpy as np
import pytest

from chebaps import _backend, _fallback

compiled = pytest.importorskip("chebaps._kernels")


def test_selected_backend_is_compiled():
    assert _backend.COMPILED and _backend.KERNELS == "cython"


def test_bessel_parity(rng):
    x = np.concatenate([rng.uniform(-80, 80, 50), [0.0, 1e-9]])
    a = compiled.bessel_table(90, x)
    b = _fallback.bessel_table(90, x)
    assert np.abs(a - b).max() < 1e-15


def test_clenshaw_parity(rng):
    d = rng.standard_normal(40)
    x = rng.uniform(-1, 1, 100)
    assert np.abs(compiled.clenshaw(d, x) - _fallback.clenshaw(d, x)).max() < 1e-13


def _problem(rng):
    from chebaps.conic import L1, NONNEG, PSD, Block, ConicProblem
    n = 9
    g = rng.standard_normal((12, n))
    blocks = [Block(PSD, rng.standard_normal((6, n)), dim=3),
              Block(NONNEG, rng.standard_normal((4, n)), rng.standard_normal(4)),
              Block(L1, rng.standard_normal((5, n)), weight=0.3)]
    return ConicProblem(g.T @ g, rng.standard_normal(n), blocks)


def test_admm_parity(rng):
    prob = _problem(rng)
    a, off, kinds, starts, lens, dims, weights = prob.stacked()
    n, m = prob.n, a.shape[0]
    kinv = np.linalg.inv(prob.p + 1e-6 * np.eye(n) + 0.1 * a.T @ a)
    states = []
    for mod in (compiled, _fallback):
        x, z, u = np.zeros(n), np.zeros(m), np.zeros(m)
        mod.admm_run(kinv, np.ascontiguousarray(a), prob.q, off, x, z, u, 0.1, 1e-6, 1.6, 200,
                     kinds, starts, lens, dims, weights)
        states.append(np.concatenate([x, z, u]))
    assert np.abs(states[0] - states[1]).max() < 1e-10
