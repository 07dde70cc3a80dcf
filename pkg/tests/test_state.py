import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gaussmetro.elements import BeamSplitter, Loss, Opa, PhaseShifter, apply
from gaussmetro.errors import PhysicsError
from gaussmetro.state import (
    GaussianState,
    InputSpec,
    coherent_squeezed_input,
    mean_photon_numbers,
    real_covariance,
    squeezed_block,
    symplectic_eigenvalues,
    vacuum,
    williamson,
)

alphas = st.floats(0, 3)
squeezes = st.floats(0, 1.2)


def test_vacuum_one_mode():
    s = vacuum(1)
    np.testing.assert_array_equal(s.v, [0, 0])
    np.testing.assert_array_equal(s.sigma, [[0, 0.5], [0.5, 0]])


def test_vacuum_two_modes_block_diagonal():
    s = vacuum(2)
    np.testing.assert_array_equal(s.sigma[:2, :2], vacuum(1).sigma)
    np.testing.assert_array_equal(s.sigma[2:, 2:], vacuum(1).sigma)
    assert np.all(s.sigma[:2, 2:] == 0)
    np.testing.assert_allclose(symplectic_eigenvalues(s), [0.5, 0.5])


def test_vacuum_rejects_zero_modes():
    with pytest.raises(PhysicsError):
        vacuum(0)


def test_coherent_input():
    s = coherent_squeezed_input(InputSpec(2.0, 0.0))
    np.testing.assert_array_equal(s.v, [2, 2, 0, 0])
    np.testing.assert_array_equal(s.sigma, vacuum(2).sigma)


def test_trivial_input_is_vacuum():
    s = coherent_squeezed_input(InputSpec())
    np.testing.assert_array_equal(s.sigma, vacuum(2).sigma)
    np.testing.assert_array_equal(s.v, np.zeros(4))


def test_squeezed_block_values():
    s = coherent_squeezed_input(InputSpec(1.0, 0.5))
    expect = 0.5 * np.array([[np.sinh(1), np.cosh(1)], [np.cosh(1), np.sinh(1)]])
    np.testing.assert_allclose(s.sigma[2:, 2:], expect, rtol=0, atol=1e-15)


@given(alphas, squeezes)
def test_photon_numbers_of_input(alpha, r):
    n = mean_photon_numbers(coherent_squeezed_input(InputSpec(alpha, r)))
    np.testing.assert_allclose(n, [alpha**2, np.sinh(r) ** 2], atol=1e-12 * max(1, alpha**2, np.sinh(r) ** 2))


def test_vacuum_photons():
    np.testing.assert_array_equal(mean_photon_numbers(vacuum(2)), [0, 0])


@given(st.floats(0, 2))
def test_first_opa_emits_G(g):
    out = apply(Opa(g, 1), vacuum(2))
    assert np.sum(mean_photon_numbers(out)) == pytest.approx(2 * np.sinh(g) ** 2, rel=1e-12, abs=1e-14)


@given(squeezes)
def test_squeezed_vacuum_pure(r):
    np.testing.assert_allclose(symplectic_eigenvalues(coherent_squeezed_input(InputSpec(0, r))), [0.5, 0.5], atol=1e-12)


def test_coherent_through_loss_stays_pure():
    s = apply(Loss((0.8, 0.8)), coherent_squeezed_input(InputSpec(1.5, 0)))
    np.testing.assert_allclose(symplectic_eigenvalues(s), [0.5, 0.5], atol=1e-14)
    assert s.is_pure


def test_from_photons_roundtrip():
    spec = InputSpec.from_photons(9.0, 4.0)
    assert spec.n_c == pytest.approx(9.0)
    assert spec.n_s == pytest.approx(4.0)
    assert spec.X == pytest.approx(np.cosh(2 * spec.r))


def test_validation_catches_broken_states():
    good = vacuum(1)
    with pytest.raises(PhysicsError, match="symmetric"):
        GaussianState(good.v, [[0, 0.5], [0.4, 0]]).validate()
    with pytest.raises(PhysicsError, match="reality"):
        GaussianState([1, 2], good.sigma).validate()
    with pytest.raises(PhysicsError, match="below 1/2"):
        GaussianState(good.v, [[0, 0.2], [0.2, 0]]).validate()
    with pytest.raises(PhysicsError, match="shape"):
        GaussianState([0, 0, 0], good.sigma)
    with pytest.raises(PhysicsError):
        GaussianState(good.v, [[np.nan, 0.5], [0.5, 0]])


def test_complex_displacement_rejected():
    with pytest.raises(PhysicsError):
        InputSpec(1 + 1j, 0)


@given(alphas, squeezes, st.floats(0, 1.5), st.floats(-3, 3))
def test_lossless_elements_preserve_invariants(alpha, r, g, phi):
    s = coherent_squeezed_input(InputSpec(alpha, r))
    nu0 = symplectic_eigenvalues(s)
    n0 = mean_photon_numbers(s)
    for el in (BeamSplitter(), PhaseShifter(2, phi), Opa(g, 1), Opa(g, -1)):
        out = apply(el, s).validate()
        np.testing.assert_allclose(symplectic_eigenvalues(out), nu0, rtol=1e-9, atol=1e-9)
    for el in (BeamSplitter(), PhaseShifter(2, phi)):
        assert np.sum(mean_photon_numbers(apply(el, s))) == pytest.approx(np.sum(n0), rel=1e-12, abs=1e-12)
    np.testing.assert_allclose(mean_photon_numbers(apply(PhaseShifter(2, phi), s)), n0, rtol=1e-12, atol=1e-12)


@given(squeezes, st.floats(0, 1))
def test_williamson_reconstructs(r, g):
    s = apply(Loss((0.7, 0.9)), apply(Opa(g, 1), coherent_squeezed_input(InputSpec(0, r))))
    cov = real_covariance(np.asarray(s.sigma))
    nu, S = williamson(cov)
    np.testing.assert_allclose(S @ np.diag(nu) @ S.T, cov, atol=1e-10 * np.abs(cov).max())
    J = np.kron(np.eye(2), [[0, 1], [-1, 0]])
    np.testing.assert_allclose(S @ J @ S.T, J, atol=1e-9 * np.linalg.cond(S))
    assert np.all(nu >= 0.5 - 1e-10)


def test_squeezed_block_shape():
    assert squeezed_block(0).shape == (2, 2)
