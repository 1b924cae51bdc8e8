import numpy as np
import pytest

from hmimo.channel import (angular_to_spatial, correlation_matrix, correlation_model,
                           kronecker_eigenvalues, quadrature_correlation,
                           reference_correlation, sample_angular, trial_rng)
from hmimo.errors import UsageError
from hmimo.geometry import Aperture, ModeSet, enumerate_modes
from hmimo.spectrum import ModeVariances, ScatteringSpec, iid_variances, mode_variances


def custom(sigma_sq, aperture=None):
    ap = aperture or Aperture.square(2, 0.25)
    modes = [(0, 0), (1, 0), (0, 1), (-1, 0), (0, -1)][: len(sigma_sq)]
    s = np.asarray(sigma_sq, float)
    return ModeVariances(ModeSet(ap, modes), s, float(s.sum()))


@pytest.fixture(scope="module")
def iso2q():
    ap = Aperture.square(2, 0.25)
    return mode_variances(ap, enumerate_modes(ap))


def test_iid_correlation_is_identity():
    R = correlation_matrix(correlation_model(iid_variances(Aperture(3, 2, 0.5))))
    np.testing.assert_allclose(R, np.eye(24), atol=1e-12)


def test_trace_and_hermitian(iso10):
    R = correlation_matrix(correlation_model(iso10))
    assert np.trace(R).real == pytest.approx(400, abs=1e-9)
    assert np.array_equal(R, R.conj().T)


def test_eigenvalues_equal_variances_when_semi_unitary():
    ap = Aperture.square(4, 0.25)
    mv = mode_variances(ap, enumerate_modes(ap))
    ev = np.sort(np.linalg.eigvalsh(correlation_matrix(correlation_model(mv))))[::-1]
    np.testing.assert_allclose(ev[: mv.n], np.sort(mv.sigma_sq)[::-1], atol=1e-9)
    np.testing.assert_allclose(ev[mv.n:], 0, atol=1e-9)


def test_kronecker_products():
    ev = kronecker_eigenvalues(correlation_model(custom([2, 1]), "transmit"),
                               correlation_model(custom([3, 1])))
    np.testing.assert_array_equal(ev, [6, 3, 2, 1])


def test_kronecker_trace(iso10):
    ev = kronecker_eigenvalues(correlation_model(iso10, "transmit"), correlation_model(iso10))
    assert ev.size == 315 * 315
    assert ev.sum() == pytest.approx(400 * 400, abs=1e-6)


@pytest.mark.parametrize("ap", [Aperture.square(2, 0.5), Aperture(1.5, 1, 0.25)])
def test_kronecker_matches_dense(ap):
    mv = mode_variances(ap, enumerate_modes(ap))
    mt = correlation_model(mv, "transmit")
    mr = correlation_model(mv)
    R = np.kron(correlation_matrix(mt), correlation_matrix(mr))
    dense = np.sort(np.linalg.eigvalsh(R))[::-1]
    fast = kronecker_eigenvalues(mt, mr)
    np.testing.assert_allclose(dense[: fast.size], fast, atol=1e-8)
    np.testing.assert_allclose(dense[fast.size:], 0, atol=1e-8)


def test_side_label():
    with pytest.raises(UsageError):
        correlation_model(iid_variances(Aperture(1, 1, 0.5)), "uplink")


def test_zero_variances_give_zero_channel():
    mv = custom([0, 0, 0])
    assert not sample_angular(mv, mv, 1, 0).H_a.any()


def test_sampling_reproducible_and_trial_dependent(iso2):
    a = sample_angular(iso2, iso2, 42, 3).H_a
    b = sample_angular(iso2, iso2, 42, 3).H_a
    c = sample_angular(iso2, iso2, 42, 4).H_a
    assert a.tobytes() == b.tobytes()
    assert not np.allclose(a, c)
    assert sample_angular(iso2, iso2, 42, 3).seed == 42


def test_rng_rejects_negative():
    with pytest.raises(UsageError):
        trial_rng(-1, 0)


def test_entry_variances_monte_carlo():
    mt, mr = custom([0.5, 1.0, 2.0, 0.25, 1.25]), custom([1.5, 0.5, 1.0, 1.0, 1.0])
    trials = 100_000
    acc = np.zeros((5, 5))
    mean = np.zeros((5, 5), complex)
    for t in range(trials):
        H = sample_angular(mt, mr, 9, t).H_a
        acc += np.abs(H) ** 2
        mean += H
    expected = np.outer(mr.sigma_sq, mt.sigma_sq)
    np.testing.assert_allclose(acc / trials, expected, rtol=0.03)
    assert np.abs(mean / trials).max() < 0.02


def test_trials_uncorrelated(iso2):
    # cross-correlation of draws with neighbouring trial indices
    trials = 4000
    x = np.array([sample_angular(iso2, iso2, 5, t).H_a.ravel() for t in range(trials + 1)])
    x = x / iso2.sigma.max() ** 2
    cross = np.abs((x[1:] * x[:-1].conj()).mean(axis=0))
    # each entry mean has standard deviation below 1/sqrt(trials)
    assert cross.max() < 5 / np.sqrt(trials)


def test_angular_to_spatial_zero(iso2q):
    phi = correlation_model(iso2q).phi
    H = angular_to_spatial(np.zeros((iso2q.n, iso2q.n)), phi, phi)
    assert H.shape == (64, 64) and not H.any()


def test_isometry_and_singular_values(iso2q):
    phi = correlation_model(iso2q).phi
    Ha = sample_angular(iso2q, iso2q, 3, 0)
    H = angular_to_spatial(Ha, phi, phi)
    assert np.linalg.norm(H) == pytest.approx(np.linalg.norm(Ha.H_a), rel=1e-9)
    sa = np.linalg.svd(Ha.H_a, compute_uv=False)
    ss = np.linalg.svd(H, compute_uv=False)
    np.testing.assert_allclose(ss[: sa.size], sa, atol=1e-9)
    np.testing.assert_allclose(ss[sa.size:], 0, atol=1e-9)


def test_dimension_mismatch(iso2q):
    phi = correlation_model(iso2q).phi
    with pytest.raises(UsageError):
        angular_to_spatial(np.zeros((3, iso2q.n)), phi, phi)


def test_reference_isotropic_is_sinc():
    ap = Aperture.square(2, 0.5)
    R = reference_correlation(ap)
    # elements (0,0) and (0,1) are half a wavelength apart: sinc(1) = 0
    assert R[0, 1] == pytest.approx(0, abs=1e-15)
    assert R[0, 0] == 1
    d = np.hypot(0.5, 0.5)
    assert R[0, 5].real == pytest.approx(np.sin(2 * np.pi * d) / (2 * np.pi * d), rel=1e-12)


def test_quadrature_reference_agrees_with_closed_form():
    ap = Aperture.square(4, 0.25)
    Rq = quadrature_correlation(ap, ScatteringSpec.directional(0.0))
    np.testing.assert_allclose(Rq, reference_correlation(ap), atol=1e-9)


def test_directional_reference_is_psd_with_trace_N():
    ap = Aperture.square(3, 0.5)
    R = reference_correlation(ap, ScatteringSpec.directional(6.0, 0.3, 0.2))
    assert np.trace(R).real == pytest.approx(ap.N)
    assert np.linalg.eigvalsh(R).min() > -1e-9
