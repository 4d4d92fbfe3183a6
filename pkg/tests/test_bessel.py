import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from chebaps.bessel import (MAX_ORDER, ArrayGeometry, bessel_j, bessel_table, cov_from_cheb,
                            design_system, effective_observations, truncation_bound)


def envelope(n, x):
    # local scale of J_n near x; relative error is meaningless at zeros
    return np.maximum(np.abs(special.jv(n, x)),
                      np.minimum(1.0, np.sqrt(2.0 / (np.pi * np.maximum(np.abs(x), 1e-300)))))


def test_table_matches_scipy_on_wide_grid():
    x = np.concatenate([np.linspace(0, 5, 51), np.linspace(5, 200, 101), [1e-8, 1e-3]])
    n = np.arange(121)
    tab = bessel_table(120, x)
    ref = special.jv(n[None, :], x[:, None])
    small = np.abs(ref) < 1e-280
    assert np.all(tab[small] == 0.0)
    err = np.abs(tab - ref) / np.where(np.abs(ref) > 1e-250, envelope(n[None, :], x[:, None]), 1.0)
    assert err.max() < 1e-12


@given(st.floats(-150, 150), st.integers(0, 90))
def test_single_order_matches_scipy(x, n):
    assert bessel_j(n, x) == pytest.approx(special.jv(n, x), abs=5e-14)


def test_negative_argument_parity():
    x = np.array([0.7, 3.0, 31.0])
    pos, neg = bessel_table(9, x), bessel_table(9, -x)
    sign = (-1.0) ** np.arange(10)
    assert np.allclose(neg, pos * sign, atol=1e-15)


@pytest.mark.parametrize("k", [np.pi, 4 * np.pi, 8 * np.pi, 22 * np.pi])
def test_energy_identity(k):
    j = bessel_table(MAX_ORDER, [k])[0]
    assert abs(j[0] ** 2 + 2 * np.sum(j[1:] ** 2) - 1.0) < 1e-12


def test_zero_argument():
    t = bessel_table(5, [0.0])[0]
    assert t[0] == 1.0 and np.all(t[1:] == 0.0)


def test_bad_input():
    with pytest.raises(ValueError):
        bessel_table(-1, [1.0])
    with pytest.raises(ValueError):
        bessel_table(3, [np.nan])
    with pytest.raises(ValueError):
        bessel_j(1.5, 1.0)


def test_geometry():
    g = ArrayGeometry(4, 0.5)
    assert np.allclose(g.kappas, 0.5 * np.pi * np.arange(4))
    assert g.kappa(-2) == -g.kappa(2)
    with pytest.raises(ValueError):
        ArrayGeometry(0, 1.0)
    with pytest.raises(ValueError):
        ArrayGeometry(3, -1.0)


def test_constant_density_gives_j0():
    g = ArrayGeometry(8, 1.0)
    r = cov_from_cheb([np.sqrt(2.0) / np.pi], g)
    assert np.allclose(r, special.j0(g.kappas), atol=1e-15)


def test_forward_matrix_agrees_with_series(rng):
    g = ArrayGeometry(8, 1.0)
    for p in (7, 13, 31):
        a = rng.standard_normal(p + 1)
        y = design_system(g, p).forward @ a
        assert np.allclose(y, effective_observations(cov_from_cheb(a, g)), atol=1e-14)


def test_design_full_rank_at_largest_identifiable_degree():
    for M in (4, 8, 12):
        g = ArrayGeometry(M, 1.0)
        p = 2 * M - 3
        assert np.linalg.matrix_rank(design_system(g, p).forward) == p + 1


def test_design_requires_odd_degree():
    with pytest.raises(ValueError):
        design_system(ArrayGeometry(8, 1.0), 10)


def test_observations_layout():
    y = effective_observations([1.0, 2 + 3j, 4 - 1j])
    assert np.allclose(y * np.pi, [1, 2, 4, 3, -1])


def test_truncation_bound_scale():
    # sqrt(pi) * ||tail||_w with ||.||_w^2 = pi/2 ||data||^2
    assert truncation_bound([3.0, 4.0]) == pytest.approx(np.sqrt(np.pi) * np.sqrt(np.pi / 2) * 5.0)
