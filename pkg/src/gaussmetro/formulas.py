"""Closed-form QFI and sensitivity expressions.

These are written from scratch in terms of photon numbers and gains and
share no code with the covariance-matrix engine, so agreement between the
two is a real cross-check.  ``n_c = alpha^2`` is the coherent photon number,
``n_s = sinh^2 r`` the squeezed one and ``G`` the spontaneous photon number
of the first OPA (``2 sinh^2 g`` for the two-mode amplifier).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import PhysicsError


@dataclass(frozen=True)
class ClosedForm:
    name: str
    inputs: dict = field(default_factory=dict)
    value: float = float("nan")
    approximate: bool = False


def _nonneg(**kw):
    for k, x in kw.items():
        if not np.isfinite(x) or x < 0:
            raise PhysicsError(f"{k} must be finite and >= 0, got {x}")


def _xi(*xs):
    for x in xs:
        if not 0 < x <= 1:
            raise PhysicsError(f"transmissivity must lie in (0, 1], got {x}")


def e2r(n_s: float) -> float:
    """``e^{2r}`` for ``n_s = sinh^2 r``: ``(sqrt(n_s + 1) + sqrt(n_s))^2``."""
    return (np.sqrt(n_s + 1) + np.sqrt(n_s)) ** 2


def photons_mzi(n_c: float, n_s: float) -> float:
    return n_c + n_s


def photons_su11(n_c: float, n_s: float, G: float) -> float:
    """Mean photon number between the two OPAs."""
    return (G + 1) * (n_c + n_s) + G


def f_mzi_ideal(n_c: float, n_s: float) -> float:
    """Lossless MZI with coherent light in one port and squeezed vacuum in the other."""
    _nonneg(n_c=n_c, n_s=n_s)
    return n_c * e2r(n_s) + n_s


def qcrb_mzi_lossy_practical(n: float, r: float, xi: float) -> float:
    """``Delta^2 phi`` for a bright coherent beam (``n ~ n_c``) and squeezing ``r`` with arm loss ``xi``."""
    _xi(xi)
    if n <= 0:
        raise PhysicsError("photon number must be positive")
    return (1 - xi + xi * np.exp(-2 * r)) / (xi * n)


def qcrb_mzi_lossy_optimal(n: float, xi: float, corrected: bool = False) -> float:
    """Leading large-``n`` QCRB after optimizing the squeezed fraction, ``(1 - xi) / (xi n)``.

    Minimizing the practical bound over ``n_s`` at fixed ``n`` puts
    ``n_s ~ sqrt(xi n / (4 (1 - xi)))`` and multiplies the leading term by
    ``1 + sqrt(xi / ((1 - xi) n))``; ``corrected=True`` includes that factor.

    Raises:
        PhysicsError: for ``xi = 1``, where the expansion does not exist
    """
    _xi(xi)
    if xi == 1:
        raise PhysicsError("the lossy large-n expansion needs xi < 1")
    if n <= 0:
        raise PhysicsError("photon number must be positive")
    lead = (1 - xi) / (xi * n)
    if corrected:
        lead *= 1 + np.sqrt(xi / ((1 - xi) * n))
    return lead


def optimal_ns_estimate(n: float, xi: float) -> float:
    """Leading-order optimal squeezed photon number for the lossy MZI."""
    _xi(xi)
    if xi == 1:
        return n / 2
    return float(np.sqrt(xi * n / (4 * (1 - xi))))


def zeta(xi1: float, xi2: float) -> float:
    """Effective transmissivity seen by a plain ``p2`` measurement."""
    return (np.sqrt(xi1) + np.sqrt(xi2)) ** 2 / 4


def sens_p2_lossy(n: float, r: float, xi1: float, xi2: float) -> float:
    """``Delta^2 phi`` of ``p2`` detection on the lossy MZI in the bright-coherent regime."""
    _xi(xi1, xi2)
    z = zeta(xi1, xi2)
    return (1 - z + z * np.exp(-2 * r)) / (z * n)


def f_su11_coherent(n_c: float, G: float) -> float:
    """Lossless SU(1,1) interferometer with a coherent seed."""
    _nonneg(n_c=n_c, G=G)
    return G * (G + 2) * (2 * n_c + 1) + n_c


def f_su11_cs(n_c: float, n_s: float, G: float) -> float:
    """Lossless SU(1,1) interferometer with a coherent seed and squeezed vacuum.

    ``G(G+2) (n_c + 2 n_s^2 + 2 n_s + 1) + (G+1)^2 (n_c e^{2r} + n_s)``; this
    is the ``xi = 1`` value of :func:`f_su11_external_loss`.
    """
    _nonneg(n_c=n_c, n_s=n_s, G=G)
    return G * (G + 2) * (n_c + 2 * n_s**2 + 2 * n_s + 1) + (G + 1) ** 2 * (n_c * e2r(n_s) + n_s)


def qcrb_su11_cs_practical(n_c: float, n_s: float, G: float) -> float:
    """Bright-seed, large-gain approximation ``Delta^2 phi ~ 1 / (4 n_c n_s G^2)``."""
    if min(n_c, n_s, G) <= 0:
        raise PhysicsError("practical-regime form needs n_c, n_s, G > 0")
    return 1.0 / (4 * n_c * n_s * G**2)


def f_su11_external_loss(n_c: float, n_s: float, G: float, xi: float) -> float:
    """SU(1,1) QFI with equal detector transmissivity ``xi`` on both outputs."""
    _nonneg(n_c=n_c, n_s=n_s, G=G)
    _xi(xi)
    squeezed = (2 * n_s + 1) ** 2 * xi / (2 * n_s * xi * (1 - xi) + 1)
    first = G * (G + 2) / 2 * (2 * n_c + xi + squeezed)
    second = (G + 1) ** 2 * (n_c / (1 - xi + xi / e2r(n_s)) + n_s)
    return xi * (first + second)


def f_su11_external_practical(n_c: float, G: float, xi: float) -> float:
    """Bright-seed, large-gain approximation ``xi (2 - xi) n_c G^2 / (1 - xi)``."""
    _xi(xi)
    if xi == 1:
        raise PhysicsError("the external-loss approximation needs xi < 1")
    return xi * (2 - xi) * n_c * G**2 / (1 - xi)


def asymptote_lossy(n_c: float, G: float, xi1: float, kind: str = "mzi") -> float:
    """Large-``n_c`` lossy ``Delta^2 phi``: ``(1-xi)/(xi n_c)`` (MZI) or ``(1-xi1)/(xi1 n_c G)`` (SU(1,1))."""
    _xi(xi1)
    if kind == "mzi":
        return (1 - xi1) / (xi1 * n_c)
    if kind == "su11":
        if G <= 0:
            raise PhysicsError("SU(1,1) asymptote needs G > 0")
        return (1 - xi1) / (xi1 * n_c * G)
    raise PhysicsError(f"unknown interferometer kind '{kind}'")


def f_single_mode_limit(alpha: float, r: float, phi: float) -> float:
    """Infinite-gain QFI of the single-mode phase, de-amplifier, detector-loss chain.

    ``4 cos^2(phi) [a^2 X + Y^2 - Y (a^2 + Y) cos 2phi] / (X - Y cos 2phi)^2``
    with ``X = cosh 2r``, ``Y = sinh 2r``; the detector transmissivity drops out.
    """
    X, Y = np.cosh(2 * r), np.sinh(2 * r)
    c2 = np.cos(2 * phi)
    a2 = alpha**2
    return float(4 * np.cos(phi) ** 2 * (a2 * X + Y**2 - Y * (a2 + Y) * c2) / (X - Y * c2) ** 2)


def f_single_mode_ideal(alpha: float, r: float) -> float:
    """QFI of ``e^{-i phi n}`` on ``D(alpha) S(r)|0>``: ``4 Var(n) = 4 alpha^2 e^{2r} + 2 Y^2``."""
    return float(4 * alpha**2 * np.exp(2 * r) + 2 * np.sinh(2 * r) ** 2)


REGISTRY = {
    "f_mzi_ideal": (f_mzi_ideal, False),
    "qcrb_mzi_lossy_practical": (qcrb_mzi_lossy_practical, True),
    "qcrb_mzi_lossy_optimal": (qcrb_mzi_lossy_optimal, True),
    "sens_p2_lossy": (sens_p2_lossy, True),
    "f_su11_coherent": (f_su11_coherent, False),
    "f_su11_cs": (f_su11_cs, False),
    "qcrb_su11_cs_practical": (qcrb_su11_cs_practical, True),
    "f_su11_external_loss": (f_su11_external_loss, False),
    "f_su11_external_practical": (f_su11_external_practical, True),
    "asymptote_lossy": (asymptote_lossy, True),
    "f_single_mode_limit": (f_single_mode_limit, True),
    "f_single_mode_ideal": (f_single_mode_ideal, False),
}


def closed_form(name: str, **inputs) -> ClosedForm:
    """Evaluate a registered expression; ``approximate`` marks asymptotic forms."""
    try:
        fn, approx = REGISTRY[name]
    except KeyError:
        raise PhysicsError(f"unknown closed form '{name}'") from None
    return ClosedForm(name, dict(inputs), float(fn(**inputs)), approx)
