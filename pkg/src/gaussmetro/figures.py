"""Tables behind the sensitivity figures.

Each builder returns a :class:`FigureTable`; the column names are listed in
each builder's ``cols`` tuple.  Sensitivities are ``Delta phi`` (not squared) so the tables can
be plotted directly on log-log axes.  Parameter defaults are the published
ones; keyword arguments override them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import formulas
from .elements import build_mzi, build_single_mode_chain, build_su11, g_from_gain, propagate_with_derivative
from .errors import PhysicsError
from .estimation import detector_sensitivity, generalized_homodyne, homodyne_detector, m_detection
from .optimize import library_qfi, optimize_ns, optimize_phi_gain, parallel_map
from .state import InputSpec

FIGURES = ("fig2a", "fig2b", "fig3a", "fig3b", "fig4a", "fig4b")


@dataclass(frozen=True)
class FigureTable:
    name: str
    columns: tuple
    rows: np.ndarray
    params: dict = field(default_factory=dict)

    def column(self, key: str) -> np.ndarray:
        return self.rows[:, self.columns.index(key)]


def fmt(x: float) -> str:
    """Locale-independent 12-significant-digit rendering."""
    if x == 0:
        return "0"
    return f"{float(x):.12g}"


def to_csv(table: FigureTable) -> str:
    lines = [",".join(table.columns)]
    lines += [",".join(fmt(v) for v in row) for row in table.rows]
    return "\n".join(lines) + "\n"


def _dphi(F: float) -> float:
    return 1.0 / np.sqrt(F)


def fig2a(xi: float = 0.8, n_max: float = 1e4, points: int = 33) -> FigureTable:
    """Optimized MZI sensitivity against the total photon number, lossless and lossy."""
    grid = np.logspace(0, np.log10(n_max), points)

    def row(n):
        ns0, d0 = optimize_ns(n, 1.0, 1.0)
        ns1, d1 = optimize_ns(n, xi, xi)
        return [n, np.sqrt(d0), ns0, np.sqrt(d1), ns1, 1 / np.sqrt(n), 1 / n,
                np.sqrt(formulas.qcrb_mzi_lossy_optimal(n, xi))]

    cols = ("n", "dphi_ideal", "ns_opt_ideal", "dphi_lossy", "ns_opt_lossy", "snl", "hl", "dphi_bound")
    return FigureTable("fig2a", cols, np.array(parallel_map(row, list(grid))), {"xi": xi})


def fig2b(xi1: float = 0.8, xi2: float = 1.0, n_s: float = 10.0, nc_max: float = 1e6,
          points: int = 25, phi: float = 0.0) -> FigureTable:
    """Unbalanced lossy MZI: p2 detection against the optimal (M) detection."""
    grid = np.logspace(0, np.log10(nc_max), points)
    xi_mean = (xi1 + xi2) / 2

    def row(n_c):
        spec = InputSpec.from_photons(n_c, n_s)
        state, d = propagate_with_derivative(build_mzi(xi1, xi2, spec), phi)
        m = detector_sensitivity(m_detection(state, d), state, d)
        p2 = detector_sensitivity(homodyne_detector(2), state, d)
        gho = detector_sensitivity(generalized_homodyne(xi1, xi2), state, d)
        return [n_c, np.sqrt(p2), np.sqrt(m), np.sqrt(gho),
                np.sqrt(formulas.sens_p2_lossy(n_c, spec.r, xi1, xi2)),
                np.sqrt(formulas.qcrb_mzi_lossy_practical(n_c, spec.r, xi_mean)),
                np.sqrt(formulas.asymptote_lossy(n_c, 0.0, xi_mean, "mzi"))]

    cols = ("n_c", "dphi_p2", "dphi_M", "dphi_gho", "dphi_p2_formula", "dphi_practical", "dphi_asymptote")
    return FigureTable("fig2b", cols, np.array(parallel_map(row, list(grid))),
                       {"xi1": xi1, "xi2": xi2, "n_s": n_s, "phi": phi})


def _fig3(name: str, xi: float, G: float = 20.0, n_s: float = 10.0, nc_max: float = 1e6,
          points: int = 25) -> FigureTable:
    grid = np.logspace(0, np.log10(nc_max), points)
    g = g_from_gain(G)

    def row(n_c):
        cs = library_qfi(build_su11(g, xi, xi, spec=InputSpec.from_photons(n_c, n_s)))
        coh = library_qfi(build_su11(g, xi, xi, spec=InputSpec.from_photons(n_c, 0.0)))
        mzi = library_qfi(build_mzi(xi, xi, InputSpec.from_photons(n_c, 0.0)))
        if xi == 1.0:
            ref_cs, ref_coh = formulas.f_su11_cs(n_c, n_s, G), formulas.f_su11_coherent(n_c, G)
            overlay = [_dphi(ref_cs), _dphi(ref_coh)]
        else:
            overlay = [np.sqrt(formulas.asymptote_lossy(n_c, G, xi, "su11"))] * 2
        return [n_c, _dphi(cs), _dphi(coh), _dphi(mzi)] + overlay

    cols = ("n_c", "dphi_su11_cs", "dphi_su11_coherent", "dphi_mzi_coherent")
    cols += ("dphi_cs_formula", "dphi_coherent_formula") if xi == 1.0 else ("dphi_asymptote", "dphi_asymptote_copy")
    return FigureTable(name, cols, np.array(parallel_map(row, list(grid))), {"G": G, "n_s": n_s, "xi": xi})


def fig3a(**kw) -> FigureTable:
    """SU(1,1) against the MZI, lossless arms."""
    return _fig3("fig3a", 1.0, **kw)


def fig3b(xi: float = 0.8, **kw) -> FigureTable:
    """SU(1,1) against the MZI with internal loss in both arms."""
    return _fig3("fig3b", xi, **kw)


def fig4a(G: float = 20.0, n_s: float = 20.0, xi: float = 0.8, nc_max: float = 1e6,
          points: int = 25) -> FigureTable:
    """SU(1,1) with lossy detectors, with and without the second OPA."""
    grid = np.logspace(0, np.log10(nc_max), points)
    g = g_from_gain(G)

    def row(n_c):
        spec = InputSpec.from_photons(n_c, n_s)
        ideal = library_qfi(build_su11(g, spec=spec))
        with_opa = library_qfi(build_su11(g, external_xi=xi, spec=spec))
        without = library_qfi(build_su11(g, external_xi=xi, spec=spec, second_opa=False))
        ref = formulas.f_su11_external_loss(n_c, n_s, G, xi)
        return [n_c, _dphi(ideal), _dphi(with_opa), _dphi(without), _dphi(ref)]

    cols = ("n_c", "dphi_ideal", "dphi_with_opa", "dphi_without_opa", "dphi_formula")
    return FigureTable("fig4a", cols, np.array(parallel_map(row, list(grid))), {"G": G, "n_s": n_s, "xi": xi})


def fig4b(n_s: float = 20.0, xi: float = 0.8, gain: float = 1e4, nc_max: float = 1e4,
          points: int = 25) -> FigureTable:
    """Single mode: infinite-gain QFI optimized over the phase, against the lossless QFI."""
    grid = np.logspace(0, np.log10(nc_max), points)
    r = float(np.arcsinh(np.sqrt(n_s)))
    g = g_from_gain(gain, 1)

    def row(n_c):
        alpha = float(np.sqrt(n_c))
        best = optimize_phi_gain(alpha, r, xi)
        spec = InputSpec(alpha, r)
        finite = library_qfi(build_single_mode_chain(g, xi, spec), best.phi)
        no_amp = library_qfi(build_single_mode_chain(0.0, xi, spec), best.phi)
        return [n_c, best.phi, best.F, finite, formulas.f_single_mode_ideal(alpha, r), no_amp]

    cols = ("n_c", "phi_opt", "F_limit_opt", "F_finite_gain", "F_ideal", "F_no_amplifier")
    return FigureTable("fig4b", cols, np.array(parallel_map(row, list(grid))),
                       {"n_s": n_s, "xi": xi, "G": gain})


BUILDERS = {"fig2a": fig2a, "fig2b": fig2b, "fig3a": fig3a, "fig3b": fig3b, "fig4a": fig4a, "fig4b": fig4b}


def build(name: str, **kw) -> FigureTable:
    try:
        fn = BUILDERS[name]
    except KeyError:
        raise PhysicsError(f"unknown figure '{name}'; choose from {', '.join(FIGURES)}") from None
    return fn(**kw)


def write_svg(table: FigureTable, path: str):
    """Log-log line plot of every column against the first (needs matplotlib)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "gaussmetro"
    fig, ax = plt.subplots(figsize=(5, 4))
    x = table.rows[:, 0]
    for k, name in enumerate(table.columns[1:], start=1):
        y = table.rows[:, k]
        if np.all(y > 0):
            ax.loglog(x, y, label=name)
    ax.set_xlabel(table.columns[0])
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
