import json

import numpy as np
import pytest
from scipy import special

from chebaps.bessel import ArrayGeometry
from chebaps.scenes import (HALF_PI, KINDS, ApsFunction, ClusterSpec, PerturbSpec,
                            covariance_oracle, make_clustered_aps, normalize, perturb,
                            random_scene, sample_lags, steering, synth_snapshots,
                            toeplitz_from_lags)


def test_cluster_validation():
    with pytest.raises(ValueError):
        ClusterSpec("box", 0.0, 0.1, 1.0)
    with pytest.raises(ValueError):
        ClusterSpec("gaussian", 0.0, -0.1, 1.0)
    with pytest.raises(ValueError):
        ClusterSpec("gaussian", 2.0, 0.1, 1.0)


def test_cluster_shapes_peak_at_centre():
    for kind in KINDS:
        cl = ClusterSpec(kind, 0.2, 0.05, 1.0)
        assert cl.shape(0.2) == pytest.approx(1.0)
        assert cl.shape(0.3) < 1.0


def test_sinc2_first_null():
    # sinc^2(u/2) vanishes at u = 2
    cl = ClusterSpec("sinc2", 0.0, 0.1, 1.0)
    assert cl.shape(0.2) == pytest.approx(0.0, abs=1e-30)


def test_random_scene_ranges():
    for kind in KINDS:
        for seed in range(20):
            sc = random_scene(kind, seed)
            assert 1 <= len(sc) <= 5
            for cl in sc:
                assert abs(np.rad2deg(cl.mu)) <= 78 and 0.5 <= cl.c <= 1.0
    assert random_scene("gaussian", 3) == random_scene("gaussian", 3)
    with pytest.raises(ValueError):
        random_scene("box", 0)


def test_laplacian_centres_are_breakpoints():
    aps = make_clustered_aps(random_scene("laplacian", 4))
    assert np.allclose(aps.breakpoints, sorted(c.mu for c in aps.meta["clusters"]))


def test_oracle_uniform_density():
    g = ArrayGeometry(8, 1.0)
    # g(x) = 1/pi in x means unit mass under the weight
    r = covariance_oracle(ApsFunction(lambda t: np.full(np.shape(t), 1 / np.pi)), g)
    assert r[0] == pytest.approx(1.0)
    assert np.allclose(r, special.j0(g.kappas), atol=1e-14)


def test_oracle_real_zero_lag():
    g = ArrayGeometry(8, 1.0)
    r = covariance_oracle(make_clustered_aps(random_scene("sinc2", 1)), g)
    assert abs(r[0].imag) < 1e-12


def test_normalize():
    r = normalize([2.0, 1 + 1j])
    assert np.allclose(r, [1.0, 0.5 + 0.5j]) and r[0] == 1.0
    assert np.allclose(normalize(r), r)
    with pytest.raises(ValueError):
        normalize([0.0, 1.0])


def test_perturb_identity_and_sign():
    aps = make_clustered_aps(random_scene("gaussian", 2))
    assert perturb(aps, PerturbSpec(sigma=0.0)) is aps
    p = perturb(aps, PerturbSpec(sigma=0.2, window=6, seed=1))
    th = np.linspace(-HALF_PI, HALF_PI, 999)
    assert p(th).min() >= 0
    assert p.provenance == "perturbed"
    with pytest.raises(ValueError):
        PerturbSpec(window=0)


def test_toeplitz_hermitian():
    R = toeplitz_from_lags([1.0, 0.3 + 0.2j, -0.1j])
    assert np.allclose(R, R.conj().T)
    assert R[1, 0] == 0.3 + 0.2j and R[0, 1] == 0.3 - 0.2j


def test_snapshots_converge_to_covariance():
    g = ArrayGeometry(4, 1.0)
    aps = make_clustered_aps(random_scene("gaussian", 7))
    r = normalize(covariance_oracle(aps, g))
    h = synth_snapshots(aps, g, 20000, n_rays=50, rng=0)
    assert h.shape == (4, 20000)
    assert np.abs(sample_lags(h) / sample_lags(h)[0].real - r).max() < 0.05


def test_snapshots_deterministic():
    g = ArrayGeometry(4, 1.0)
    aps = make_clustered_aps(random_scene("gaussian", 7))
    assert np.array_equal(synth_snapshots(aps, g, 10, rng=3), synth_snapshots(aps, g, 10, rng=3))


def test_steering_shape():
    g = ArrayGeometry(5, 1.0)
    s = steering([0.0, 0.3], g)
    assert s.shape == (5, 2) and np.allclose(s[:, 0], 1.0)
