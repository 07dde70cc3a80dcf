import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gaussmetro.elements import (
    BeamSplitter,
    Opa,
    PhaseShifter,
    Pipeline,
    StateDerivative,
    build_mzi,
    build_single_mode_chain,
    build_su11,
    g_from_gain,
    propagate_with_derivative,
)
from gaussmetro.errors import PhysicsError
from gaussmetro.estimation import (
    QuadraticDetector,
    detection_noise,
    detector_sensitivity,
    generalized_homodyne,
    generalized_homodyne_coefficient,
    homodyne_detector,
    m_detection,
    number_detector_at,
    qcrb,
    qfi,
    ray_distance,
    signal_slope,
    sld,
)
from gaussmetro.state import GaussianState, InputSpec, coherent_squeezed_input, vacuum

xis = st.floats(0.5, 1.0)


def F_of(p, phi=0.0):
    return qfi(*propagate_with_derivative(p, phi))


def test_ideal_mzi_coherent():
    assert F_of(build_mzi(spec=InputSpec(2.0, 0))) == pytest.approx(4.0, rel=1e-12)


def test_ideal_mzi_coherent_squeezed():
    assert F_of(build_mzi(spec=InputSpec(2.0, 0.5))) == pytest.approx(4 * np.e + np.sinh(0.5) ** 2, rel=1e-12)
    assert F_of(build_mzi(spec=InputSpec(2.0, 0.5))) == pytest.approx(11.1446, abs=1e-4)


def test_ideal_su11_coherent():
    assert F_of(build_su11(g_from_gain(1.0), spec=InputSpec(2.0, 0))) == pytest.approx(31.0, rel=1e-12)


def test_su11_vacuum():
    F = F_of(build_su11(g_from_gain(1.0)))
    assert F == pytest.approx(3.0, rel=1e-12)
    assert qcrb(F) == pytest.approx(1 / np.sqrt(3))


def test_unbalanced_lossy_mzi_coherent():
    assert F_of(build_mzi(0.8, 1.0, InputSpec(2.0, 0))) == pytest.approx(3.6, rel=1e-12)


def test_qcrb_values():
    assert qcrb(4.0) == 0.5
    assert qcrb(0.8 * 9) == pytest.approx(1 / np.sqrt(0.8 * 9))
    with pytest.raises(PhysicsError):
        qcrb(0.0)


def test_zero_derivative_gives_zero_sld():
    s = coherent_squeezed_input(InputSpec(1.0, 0.3))
    L = sld(s, StateDerivative.zero(2))
    assert np.all(L.A == 0) and np.all(L.b == 0)
    assert qfi(s, StateDerivative.zero(2)) == 0.0


def test_vacuum_and_single_mode_vacuum_have_no_information():
    assert F_of(build_mzi()) == 0.0
    assert F_of(build_single_mode_chain(0.5, 0.8)) == pytest.approx(0.0, abs=1e-12)


def test_single_mode_coherent_qfi():
    assert F_of(build_single_mode_chain(0.0, 1.0, InputSpec(1.5, 0))) == pytest.approx(4 * 1.5**2, rel=1e-12)


def test_sld_coherent_mzi_is_p2():
    s, d = propagate_with_derivative(build_mzi(spec=InputSpec(1.7, 0)), 0.0)
    L = sld(s, d)
    assert 0.5 * np.trace(d.dsigma @ L.A) == pytest.approx(0, abs=1e-12)
    assert ray_distance(L.detector(), homodyne_detector(2)) < 1e-12


def test_sld_matches_displayed_operator():
    # M = i sinh r [(a1 a2^dag - a1^dag a2) sinh r + (a1^dag a2^dag - a1 a2) cosh r]
    #     + i alpha (1 + 2 e^r sinh r) (a2^dag - a2), up to normalization
    alpha, r = 1.3, 0.4
    s, d = propagate_with_derivative(build_mzi(spec=InputSpec(alpha, r)), 0.0)
    sh, ch = np.sinh(r), np.cosh(r)
    A = np.zeros((4, 4), complex)
    A[0, 3] = A[3, 0] = 1j * sh * sh
    A[1, 2] = A[2, 1] = -1j * sh * sh
    A[1, 3] = A[3, 1] = 1j * sh * ch
    A[0, 2] = A[2, 0] = -1j * sh * ch
    c = 1j * alpha * (1 + 2 * np.exp(r) * sh)
    b = np.array([0, 0, -c, c])
    assert ray_distance(m_detection(s, d), QuadraticDetector(A, b)) < 1e-10


def test_unphysical_derivative_rejected():
    s = vacuum(1)
    # the vacuum is pure; a derivative that mixes it lies outside the solver's range
    bad = StateDerivative(np.zeros(2), np.array([[0, 1.0], [1.0, 0]], dtype=complex))
    with pytest.raises(PhysicsError, match="inconsistent"):
        sld(s, bad)


def test_singular_covariance_rejected():
    s = GaussianState(np.zeros(2), np.zeros((2, 2)))
    with pytest.raises(PhysicsError, match="singular"):
        sld(s, StateDerivative(np.ones(2), np.zeros((2, 2))))


def _random_pipeline(draw_alpha, draw_r, draw_g, xi1, xi2, family):
    spec = InputSpec(draw_alpha, draw_r)
    if family == 0:
        return build_mzi(xi1, xi2, spec)
    if family == 1:
        return build_su11(draw_g, xi1, xi2, spec=spec)
    return build_single_mode_chain(draw_g, xi1, spec)


@given(st.floats(0.1, 2.5), st.floats(0, 1), st.floats(0, 1), xis, xis, st.integers(0, 2), st.floats(-1.2, 1.2))
def test_attainability(alpha, r, g, xi1, xi2, family, phi):
    p = _random_pipeline(alpha, r, g, xi1, xi2, family)
    s, d = propagate_with_derivative(p, phi)
    F = qfi(s, d)
    if F > 1e-12:
        M = m_detection(s, d)
        assert M.is_hermitian()
        assert detector_sensitivity(M, s, d) * F == pytest.approx(1.0, rel=1e-9)


@given(st.floats(0.1, 2.5), st.floats(0, 1), st.floats(0, 1), xis, st.integers(0, 2), st.floats(-1.2, 1.2))
def test_homodyne_never_beats_qcrb(alpha, r, g, xi, family, phi):
    p = _random_pipeline(alpha, r, g, xi, 0.9, family)
    s, d = propagate_with_derivative(p, phi)
    F = qfi(s, d)
    for k in range(1, p.mode_count + 1):
        det = homodyne_detector(k, p.mode_count)
        if abs(signal_slope(det, d)) > 1e-6:
            assert detector_sensitivity(det, s, d) >= (1 - 1e-9) / F


@given(st.floats(0.1, 2), st.floats(0, 0.8), st.floats(0, 0.8), st.integers(0, 2))
def test_trailing_unitary_leaves_qfi(alpha, r, g, family):
    p = _random_pipeline(alpha, r, g, 0.8, 0.9, family)
    extra = (Opa(0.37, 1, p.mode_count), PhaseShifter(p.mode_count, 0.7))
    if p.mode_count == 2:
        extra += (BeamSplitter(),)
    q = Pipeline(p.input, p.mode_count, p.elements + extra)
    assert F_of(q, 0.3) == pytest.approx(F_of(p, 0.3), rel=1e-10, abs=1e-12)


@given(st.floats(0.1, 2), st.floats(0, 0.8), st.floats(0, 0.8), st.integers(0, 2))
def test_qfi_non_decreasing_in_transmissivity(alpha, r, g, family):
    grid = np.linspace(0.05, 1.0, 12)
    F = [F_of(_random_pipeline(alpha, r, g, xi, 0.9, family), 0.3) for xi in grid]
    assert np.all(np.diff(F) >= -1e-9 * max(F))
    if family != 2:
        F2 = [F_of(_random_pipeline(alpha, r, g, 0.9, xi, family), 0.3) for xi in grid]
        assert np.all(np.diff(F2) >= -1e-9 * max(F2))


def test_p2_on_vacuum_noise():
    assert detection_noise(homodyne_detector(2), vacuum(2)) == pytest.approx(0.5)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
def test_number_variance_coherent(alpha):
    s = coherent_squeezed_input(InputSpec(alpha, 0), 1)
    assert detection_noise(number_detector_at(1, s), s) == pytest.approx(alpha**2, rel=1e-12)


def test_number_variance_squeezed_vacuum():
    r = 0.6
    s = coherent_squeezed_input(InputSpec(0, r), 1)
    assert detection_noise(number_detector_at(1, s), s) == pytest.approx(2 * np.sinh(r) ** 2 * np.cosh(r) ** 2)


def test_generalized_homodyne_coefficients():
    assert generalized_homodyne_coefficient(0.7, 0.7) == 0
    np.testing.assert_allclose(generalized_homodyne(0.7, 0.7).b0, homodyne_detector(2).b0)
    assert generalized_homodyne_coefficient(0.8, 1.0) == pytest.approx(-0.0557, abs=1e-4)
    with pytest.raises(PhysicsError):
        generalized_homodyne_coefficient(0, 0)


def test_generalized_homodyne_beats_p2_when_unbalanced():
    s, d = propagate_with_derivative(build_mzi(0.8, 1.0, InputSpec.from_photons(1e4, 10)), 0.0)
    gho = detector_sensitivity(generalized_homodyne(0.8, 1.0), s, d)
    p2 = detector_sensitivity(homodyne_detector(2), s, d)
    M = detector_sensitivity(m_detection(s, d), s, d)
    assert M <= gho <= p2


def test_blind_detector():
    s, d = propagate_with_derivative(build_mzi(spec=InputSpec(1.0, 0)), 0.0)
    with pytest.raises(PhysicsError, match="blind"):
        detector_sensitivity(homodyne_detector(1), s, d)


def test_detector_validation():
    with pytest.raises(PhysicsError):
        QuadraticDetector(np.zeros((2, 2)), np.zeros(4))
    with pytest.raises(PhysicsError):
        homodyne_detector(3)
    assert homodyne_detector(1).is_hermitian()
    assert not QuadraticDetector(np.zeros((2, 2)), [1j, 1j]).is_hermitian()
