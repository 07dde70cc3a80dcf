import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gaussmetro import formulas as fm
from gaussmetro.elements import build_mzi, build_single_mode_chain, build_su11, g_from_gain, propagate_with_derivative
from gaussmetro.errors import PhysicsError
from gaussmetro.estimation import detector_sensitivity, homodyne_detector, qfi
from gaussmetro.optimize import maximize_scalar
from gaussmetro.state import InputSpec


def lib(p, phi=0.0):
    return qfi(*propagate_with_derivative(p, phi))


def test_f_mzi_ideal_examples():
    assert fm.f_mzi_ideal(4, 0) == 4
    assert fm.f_mzi_ideal(0, 0) == 0
    assert fm.f_mzi_ideal(4, np.sinh(0.5) ** 2) == pytest.approx(11.1446, abs=1e-4)


def test_e2r():
    r = 0.83
    assert fm.e2r(np.sinh(r) ** 2) == pytest.approx(np.exp(2 * r))


def test_lossy_practical_limits():
    n = 1e4
    assert fm.qcrb_mzi_lossy_practical(n, 40.0, 0.8) == pytest.approx(0.25 / n)
    assert fm.qcrb_mzi_lossy_practical(n, 0.0, 0.8) == pytest.approx(1 / (0.8 * n))
    assert fm.qcrb_mzi_lossy_practical(n, 0.7, 1.0) == pytest.approx(np.exp(-1.4) / n)


def test_lossy_optimal():
    assert fm.qcrb_mzi_lossy_optimal(1e4, 0.8) == pytest.approx(2.5e-5)
    assert fm.qcrb_mzi_lossy_optimal(1e4, 1e-9) > 1e4
    assert fm.qcrb_mzi_lossy_optimal(1e4, 0.8, corrected=True) > 2.5e-5
    with pytest.raises(PhysicsError):
        fm.qcrb_mzi_lossy_optimal(1e4, 1.0)


def test_zeta_and_p2():
    # (sqrt(0.8) + 1)^2 / 4; the often-quoted 0.9472 is sqrt(zeta)
    assert fm.zeta(0.8, 1.0) == pytest.approx(0.8972, abs=1e-4)
    assert np.sqrt(fm.zeta(0.8, 1.0)) == pytest.approx(0.9472, abs=1e-4)
    assert fm.sens_p2_lossy(1e4, 0.4, 0.7, 0.7) == pytest.approx(fm.qcrb_mzi_lossy_practical(1e4, 0.4, 0.7))


def test_p2_formula_matches_library():
    spec = InputSpec.from_photons(1e4, 10)
    s, d = propagate_with_derivative(build_mzi(0.8, 1.0, spec), 0.0)
    lib_p2 = detector_sensitivity(homodyne_detector(2), s, d)
    assert lib_p2 == pytest.approx(fm.sens_p2_lossy(spec.n_c, spec.r, 0.8, 1.0), rel=0.02)


def test_su11_coherent_examples():
    assert fm.f_su11_coherent(4, 1) == 31
    assert fm.f_su11_coherent(7.5, 0) == 7.5
    assert fm.f_su11_coherent(0, 3) == 15


def test_su11_cs_reductions():
    assert fm.f_su11_cs(4, 0, 1.3) == pytest.approx(fm.f_su11_coherent(4, 1.3))
    assert fm.f_su11_cs(0, 0, 2.0) == pytest.approx(8.0)


def test_su11_practical_regime_bound():
    # the leading term alone; the full expression is compared in the acceptance suite
    assert fm.qcrb_su11_cs_practical(1e6, 10, 20) == pytest.approx(1 / (4 * 1e6 * 10 * 400))
    with pytest.raises(PhysicsError):
        fm.qcrb_su11_cs_practical(1e6, 0, 20)


def test_asymptotes():
    assert fm.asymptote_lossy(1e4, 0, 0.8, "mzi") == pytest.approx(0.25 / 1e4)
    assert fm.asymptote_lossy(1e4, 50, 0.8, "su11") == pytest.approx(0.25 / (50 * 1e4))
    with pytest.raises(PhysicsError):
        fm.asymptote_lossy(1, 1, 0.8, "other")


def test_external_loss_reductions():
    n_c, n_s, G = 3.0, 2.0, 4.0
    assert fm.f_su11_external_loss(n_c, n_s, G, 1.0) == pytest.approx(fm.f_su11_cs(n_c, n_s, G), rel=1e-13)
    xi = 0.7
    assert fm.f_su11_external_loss(0, 0, G, xi) == pytest.approx(xi**2 * G * (G + 2), rel=1e-13)


def test_external_practical_regime():
    # holds when e^{2r} >> xi/(1-xi); ten squeezed photons are enough at xi = 0.8
    F = fm.f_su11_external_loss(1e6, 10, 50, 0.8)
    assert F == pytest.approx(fm.f_su11_external_practical(1e6, 50, 0.8), rel=0.1)


def test_single_mode_limit_examples():
    assert fm.f_single_mode_limit(1.3, 0, 0) == pytest.approx(4 * 1.3**2)
    assert fm.f_single_mode_limit(1.3, 0.4, np.pi / 2) == pytest.approx(0, abs=1e-12)
    r = 0.6
    phi = 0.5 * np.arccos(np.tanh(2 * r))
    assert fm.f_single_mode_limit(0, r, phi) == pytest.approx(2 * np.sinh(2 * r) ** 2, rel=1e-12)


@given(st.floats(0, 2), st.floats(0, 1))
def test_single_mode_ideal_matches_library(alpha, r):
    F = lib(build_single_mode_chain(0.0, 1.0, InputSpec(alpha, r)))
    assert F == pytest.approx(fm.f_single_mode_ideal(alpha, r), rel=1e-9, abs=1e-12)


GAINS = np.linspace(0, 15, 31)


def _curve(alpha, r, xi, phi):
    spec = InputSpec(alpha, r)
    return np.array([lib(build_single_mode_chain(g_from_gain(G, 1), xi, spec), phi) for G in GAINS])


@given(st.floats(0.1, 2), st.floats(0.1, 1), st.floats(0.5, 1.0), st.booleans())
def test_limit_bounds_finite_gain_for_pure_inputs(alpha, r, xi, coherent):
    # coherent-only or squeezed-only input at the optimal phase
    a, s = (alpha, 0.0) if coherent else (0.0, r)
    best = maximize_scalar(lambda p: fm.f_single_mode_limit(a, s, p), 0, np.pi / 2, 1e-12)
    F = _curve(a, s, xi, best.x)
    assert np.all(F <= best.fun * (1 + 1e-9))
    assert np.all(np.diff(F) >= -1e-9 * F.max())


def test_generic_input_overshoots_limit():
    # coherent + squeezed: F(G) approaches the limit from above, so neither the
    # bound nor monotonicity survives (cross-checked against the Fock oracle)
    best = maximize_scalar(lambda p: fm.f_single_mode_limit(1.0, 0.5, p), 0, np.pi / 2, 1e-12)
    F = _curve(1.0, 0.5, 0.8, best.x)
    assert F.max() > best.fun * 1.05
    assert np.any(np.diff(F) < 0)
    far = lib(build_single_mode_chain(g_from_gain(1e6, 1), 0.8, InputSpec(1.0, 0.5)), best.x)
    assert far == pytest.approx(best.fun, rel=1e-4)


def test_limit_at_zero_phase_can_sit_below_finite_gain():
    # squeezed vacuum at phi = 0: the limit vanishes but the unamplified QFI does not
    assert fm.f_single_mode_limit(0.0, 1.0, 0.0) == pytest.approx(0.0, abs=1e-12)
    assert lib(build_single_mode_chain(0.0, 0.8, InputSpec(0.0, 1.0)), 0.0) > 1


@pytest.mark.parametrize("alpha,r,equal", [(1.0, 0.0, True), (0.0, 0.5, True), (1.0, 0.5, False)])
def test_optimized_limit_against_ideal(alpha, r, equal):
    best = maximize_scalar(lambda p: fm.f_single_mode_limit(alpha, r, p), 0, np.pi / 2, 1e-12).fun
    ideal = lib(build_single_mode_chain(0.0, 1.0, InputSpec(alpha, r)))
    if equal:
        assert best == pytest.approx(ideal, rel=1e-6)
    else:
        assert best < ideal * 0.99


@given(st.floats(0.1, 3), st.floats(0, 1), st.floats(0, 2))
def test_closed_forms_match_library(alpha, r, g):
    spec = InputSpec(alpha, r)
    G = 2 * np.sinh(g) ** 2
    assert lib(build_mzi(spec=spec)) == pytest.approx(fm.f_mzi_ideal(spec.n_c, spec.n_s), rel=1e-9)
    assert lib(build_su11(g, spec=spec)) == pytest.approx(fm.f_su11_cs(spec.n_c, spec.n_s, G), rel=1e-9)
    lossy = lib(build_su11(g, external_xi=0.75, spec=spec))
    assert lossy == pytest.approx(fm.f_su11_external_loss(spec.n_c, spec.n_s, G, 0.75), rel=1e-9)


def test_registry():
    cf = fm.closed_form("f_su11_coherent", n_c=4, G=1)
    assert cf.value == 31 and not cf.approximate
    assert fm.closed_form("asymptote_lossy", n_c=1, G=0, xi1=0.8).approximate
    with pytest.raises(PhysicsError):
        fm.closed_form("nope")


def test_input_validation():
    with pytest.raises(PhysicsError):
        fm.f_mzi_ideal(-1, 0)
    with pytest.raises(PhysicsError):
        fm.sens_p2_lossy(10, 0.1, 0, 1)


def test_photon_budgets():
    assert fm.photons_mzi(3, 2) == 5
    assert fm.photons_su11(3, 2, 1.5) == pytest.approx(2.5 * 5 + 1.5)


def test_su11_cs_practical_regime():
    # Delta^2 phi ~ 1/(4 n_c n_s G^2) within 10% at n_c = 1e6, n_s = 10, G = 20
    exact = 1 / fm.f_su11_cs(1e6, 10, 20)
    assert exact == pytest.approx(fm.qcrb_su11_cs_practical(1e6, 10, 20), rel=0.1)
