import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chebaps.chebyshev import cheb_eval
from chebaps.regularizer import (diff_matrix, masked_power, q_operator, q_series, sample_matrix,
                                 theta_grid)


@pytest.mark.parametrize("K", [4, 16, 64])
@pytest.mark.parametrize("masked", [True, False])
def test_closed_form_equals_series(K, masked):
    d = np.pi / (K - 1)
    q = q_operator(K, d, 0.2 * d, 2, masked=masked).q
    s = q_series(K, d, 0.2 * d, 2, masked=masked)
    assert np.abs(q - s).max() <= 1e-10 * np.abs(s).max()


def test_small_eta_limit():
    K, d = 20, 0.1
    q = q_operator(K, d, 1e-9 * d, 2, masked=False).q
    ref = np.linalg.matrix_power(diff_matrix(K), 2) / d ** 2
    assert np.abs(q - ref).max() <= 1e-8 * np.abs(ref).max()


def test_default_operator_is_banded():
    q = q_operator().q
    i, j = np.indices(q.shape)
    assert np.abs(q[i - j > 40]).max() < 1e-12 * np.abs(q).max()


@given(st.floats(-5, 5), st.floats(-5, 5))
def test_affine_annihilation(c0, c1):
    op = q_operator()
    seq = c0 + c1 * np.arange(op.K)
    assert np.abs(op.q @ seq).max() <= 1e-10 * max(1.0, np.abs(seq).max())


def test_quadratic_is_not_annihilated():
    op = q_operator()
    k = np.arange(op.K, dtype=float)
    assert np.abs(op.q @ k ** 2).max() > 1.0


def test_masked_rows_zero():
    assert np.all(masked_power(10, 2)[:2] == 0)
    assert np.all(q_operator().q[:2] == 0)


def test_diff_matrix_structure():
    D = diff_matrix(6)
    assert np.allclose(np.diag(D), 1) and np.allclose(np.diag(D, -1), -1)
    # D itself is not nilpotent; its strictly lower part is
    assert np.any(np.linalg.matrix_power(D, 7) != 0)
    assert np.all(np.linalg.matrix_power(D - np.eye(6), 6) == 0)


def test_operator_argument_checks():
    with pytest.raises(ValueError):
        q_operator(10, 0.1, 0.1)
    with pytest.raises(ValueError):
        q_operator(10, -0.1)
    with pytest.raises(ValueError):
        diff_matrix(1)


def test_operator_is_cached_and_read_only():
    a, b = q_operator(), q_operator()
    assert a.q is b.q
    with pytest.raises(ValueError):
        a.q[0, 0] = 1.0


def test_sample_matrix_evaluates(rng):
    p = 9
    C = sample_matrix(p, 31)
    d = rng.standard_normal(p + 1)
    assert np.allclose(C.c @ d, cheb_eval(d, np.sin(theta_grid(31))), atol=1e-13)
    assert theta_grid(181)[90] == pytest.approx(0.0, abs=1e-15)
