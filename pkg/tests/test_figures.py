import numpy as np
import pytest

from gaussmetro import figures
from gaussmetro.errors import PhysicsError


def test_unknown_figure():
    with pytest.raises(PhysicsError):
        figures.build("fig9")


def test_fig2b_orderings():
    t = figures.fig2b(points=7)
    assert np.all(t.column("dphi_M") <= t.column("dphi_p2"))
    assert np.all(t.column("dphi_M") <= t.column("dphi_gho") * (1 + 1e-12))
    big = t.column("n_c") >= 1e4
    np.testing.assert_allclose(t.column("dphi_p2")[big], t.column("dphi_p2_formula")[big], rtol=0.01)


@pytest.mark.parametrize("builder", [figures.fig3a, figures.fig3b])
def test_fig3_orderings(builder):
    t = builder(points=7)
    assert np.all(t.column("dphi_su11_cs") < t.column("dphi_su11_coherent"))
    assert np.all(t.column("dphi_su11_coherent") < t.column("dphi_mzi_coherent"))


def test_fig3a_matches_closed_forms():
    t = figures.fig3a(points=5)
    np.testing.assert_allclose(t.column("dphi_su11_cs"), t.column("dphi_cs_formula"), rtol=1e-9)
    np.testing.assert_allclose(t.column("dphi_su11_coherent"), t.column("dphi_coherent_formula"), rtol=1e-9)


def test_fig4a_orderings():
    t = figures.fig4a(points=7)
    assert np.all(t.column("dphi_ideal") < t.column("dphi_with_opa"))
    assert np.all(t.column("dphi_with_opa") < t.column("dphi_without_opa"))
    np.testing.assert_allclose(t.column("dphi_with_opa"), t.column("dphi_formula"), rtol=1e-9)


def test_fig4b_limit_below_ideal():
    t = figures.fig4b(points=5)
    assert np.all(t.column("F_limit_opt") < t.column("F_ideal"))
    np.testing.assert_allclose(t.column("F_finite_gain"), t.column("F_limit_opt"), rtol=1e-2)


def test_fig2a_shape():
    t = figures.fig2a(points=5, n_max=1e3)
    assert t.columns[0] == "n"
    # the lossless optimum tracks the Heisenberg scaling, the lossy one falls back towards 1/sqrt(n)
    np.testing.assert_allclose(t.column("dphi_ideal")[-1] * 1e3, 1.0, rtol=0.1)
    assert np.all(t.column("dphi_lossy") >= t.column("dphi_ideal"))


def test_csv_is_deterministic():
    a = figures.to_csv(figures.fig2b(points=4))
    b = figures.to_csv(figures.fig2b(points=4))
    assert a == b
    assert a.splitlines()[0] == "n_c,dphi_p2,dphi_M,dphi_gho,dphi_p2_formula,dphi_practical,dphi_asymptote"


def test_fmt():
    assert figures.fmt(0) == "0"
    assert figures.fmt(1 / 3) == "0.333333333333"
    assert figures.fmt(1e-20) == "1e-20"
