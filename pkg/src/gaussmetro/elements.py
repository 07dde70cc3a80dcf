"""Optical elements acting on Gaussian states, with exact phase derivatives.

Each lossless element is a complex ``2n x 2n`` matrix ``T`` acting as
``a -> T a``; the state moments follow ``v -> T v`` and
``sigma -> T sigma T^T``.  Loss is the fictitious beam-splitter channel
``a_k -> sqrt(xi_k) a_k + sqrt(1 - xi_k) vac_k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import PhysicsError
from .state import GaussianState, InputSpec, coherent_squeezed_input, omega

PHI = "PHI"


@dataclass(frozen=True)
class StateDerivative:
    """Phase derivatives ``(v', sigma')`` of a state's moments."""

    dv: np.ndarray
    dsigma: np.ndarray

    @classmethod
    def zero(cls, mode_count: int) -> "StateDerivative":
        d = 2 * mode_count
        return cls(np.zeros(d, dtype=complex), np.zeros((d, d), dtype=complex))


@dataclass(frozen=True)
class BeamSplitter:
    """Balanced two-mode beam splitter, ``T_BS T_BS = 1``."""

    modes = 2

    def matrix(self, phi: float = 0.0) -> np.ndarray:
        s = 1 / np.sqrt(2)
        return s * np.array(
            [[1, 0, 1, 0], [0, 1, 0, 1], [1, 0, -1, 0], [0, 1, 0, -1]], dtype=complex
        )


@dataclass(frozen=True)
class PhaseShifter:
    """Phase element.

    With two modes this is the symmetric shift ``a1 -> e^{i phi/2} a1``,
    ``a2 -> e^{-i phi/2} a2``; with one mode it is ``e^{-i phi a^dag a}``,
    i.e. ``a -> e^{-i phi} a``.  ``value=PHI`` marks the estimated phase.
    """

    modes: int = 2
    value: Union[float, str] = PHI

    def __post_init__(self):
        if self.modes not in (1, 2):
            raise PhysicsError("phase shifter acts on one or two modes")
        if self.value != PHI and not np.isfinite(float(self.value)):
            raise PhysicsError("phase value must be finite or PHI")

    @property
    def is_carrier(self) -> bool:
        return self.value == PHI

    def generator(self) -> np.ndarray:
        """Diagonal ``D`` with ``dT/dphi = D T``."""
        if self.modes == 2:
            return 0.5j * np.diag([1, -1, -1, 1]).astype(complex)
        return 1j * np.diag([-1, 1]).astype(complex)

    def matrix(self, phi: float = 0.0) -> np.ndarray:
        angle = phi if self.is_carrier else float(self.value)
        return np.diag(np.exp(np.diag(self.generator()) * angle))


@dataclass(frozen=True)
class Opa:
    """Parametric amplifier with ``mu = cosh g``, ``nu = sinh g``.

    Two modes: ``a1 -> mu a1 +- nu a2^dag`` (and symmetric).  One mode:
    the squeezer ``a -> mu a +- nu a^dag``; ``sign=-1`` is
    ``exp(g (a^2 - a^dag^2) / 2)``.
    """

    g: float
    sign: int = 1
    modes: int = 2

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise PhysicsError("OPA sign must be +1 or -1")
        if self.modes not in (1, 2):
            raise PhysicsError("OPA acts on one or two modes")
        if not np.isfinite(self.g) or self.g < 0:
            raise PhysicsError("OPA strength g must be finite and >= 0")

    @property
    def G(self) -> float:
        return 2 * np.sinh(self.g) ** 2

    def matrix(self, phi: float = 0.0) -> np.ndarray:
        mu, nu = np.cosh(self.g), self.sign * np.sinh(self.g)
        if self.modes == 1:
            return np.array([[mu, nu], [nu, mu]], dtype=complex)
        return np.array(
            [[mu, 0, 0, nu], [0, mu, nu, 0], [0, nu, mu, 0], [nu, 0, 0, mu]], dtype=complex
        )


@dataclass(frozen=True)
class Loss:
    """Per-mode photon loss with transmissivities ``xi``."""

    xi: tuple

    def __post_init__(self):
        xi = tuple(float(x) for x in np.atleast_1d(self.xi))
        if any(not (0.0 <= x <= 1.0) for x in xi):
            raise PhysicsError(f"transmissivity outside [0, 1]: {xi}")
        object.__setattr__(self, "xi", xi)

    @property
    def modes(self) -> int:
        return len(self.xi)

    def amplitude(self) -> np.ndarray:
        return np.diag(np.repeat(np.sqrt(self.xi), 2)).astype(complex)

    def vacuum_noise(self) -> np.ndarray:
        out = np.zeros((2 * self.modes, 2 * self.modes), dtype=complex)
        for k, x in enumerate(self.xi):
            out[2 * k, 2 * k + 1] = out[2 * k + 1, 2 * k] = 0.5 * (1 - x)
        return out


Element = Union[BeamSplitter, PhaseShifter, Opa, Loss]


def _check_modes(element: Element, mode_count: int):
    if element.modes != mode_count:
        raise PhysicsError(
            f"{type(element).__name__} acts on {element.modes} modes, state has {mode_count}"
        )


def apply(element: Element, state: GaussianState, phi: float = 0.0) -> GaussianState:
    """Push ``state`` through one element (``phi`` feeds the phase carrier)."""
    _check_modes(element, state.mode_count)
    if isinstance(element, Loss):
        R = element.amplitude()
        return GaussianState(R @ state.v, R @ state.sigma @ R.T + element.vacuum_noise())
    T = element.matrix(phi)
    return GaussianState(T @ state.v, T @ state.sigma @ T.T)


@dataclass(frozen=True)
class Pipeline:
    """Input state plus an ordered element list with exactly one phase carrier."""

    input: InputSpec
    mode_count: int
    elements: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        if self.mode_count not in (1, 2):
            raise PhysicsError("pipelines have one or two modes")
        for el in self.elements:
            _check_modes(el, self.mode_count)
        carriers = sum(isinstance(el, PhaseShifter) and el.is_carrier for el in self.elements)
        if carriers != 1:
            raise PhysicsError(f"pipeline needs exactly one phase carrier, found {carriers}")

    def input_state(self) -> GaussianState:
        return coherent_squeezed_input(self.input, self.mode_count)

    def with_input(self, spec: InputSpec) -> "Pipeline":
        return Pipeline(spec, self.mode_count, self.elements)

    def run(self, phi: float = 0.0) -> GaussianState:
        state = self.input_state()
        for el in self.elements:
            state = apply(el, state, phi)
        return state


def propagate_with_derivative(pipeline: Pipeline, phi: float = 0.0):
    """Output state and its exact phase derivative.

    Returns:
        tuple[GaussianState, StateDerivative]
    """
    state = pipeline.input_state()
    v, sigma = np.array(state.v), np.array(state.sigma)
    dv, dsigma = np.zeros_like(v), np.zeros_like(sigma)
    for el in pipeline.elements:
        if isinstance(el, Loss):
            R = el.amplitude()
            v, dv = R @ v, R @ dv
            sigma = R @ sigma @ R.T + el.vacuum_noise()
            dsigma = R @ dsigma @ R.T
            continue
        T = el.matrix(phi)
        if isinstance(el, PhaseShifter) and el.is_carrier:
            dT = el.generator() @ T
            dv = T @ dv + dT @ v
            dsigma = T @ dsigma @ T.T + dT @ sigma @ T.T + T @ sigma @ dT.T
        else:
            dv = T @ dv
            dsigma = T @ dsigma @ T.T
        v = T @ v
        sigma = T @ sigma @ T.T
    # symmetrize against roundoff
    sigma = 0.5 * (sigma + sigma.T)
    dsigma = 0.5 * (dsigma + dsigma.T)
    return GaussianState(v, sigma), StateDerivative(dv, dsigma)


def _xi_pair(xi1, xi2):
    return Loss((xi1, xi2))


def build_mzi(xi1: float = 1.0, xi2: float = 1.0, spec: InputSpec = InputSpec()) -> Pipeline:
    """Mach-Zehnder: BS, phase, in-arm loss, BS."""
    return Pipeline(
        spec, 2, (BeamSplitter(), PhaseShifter(2), _xi_pair(xi1, xi2), BeamSplitter())
    )


def build_su11(
    g: float,
    xi1: float = 1.0,
    xi2: float = 1.0,
    external_xi: Optional[float] = None,
    spec: InputSpec = InputSpec(),
    second_opa: bool = True,
) -> Pipeline:
    """OPA-based interferometer: an MZI sandwiched between ``T+`` and ``T-`` OPAs.

    ``second_opa=False`` drops ``T-`` (detection right after the MZI).
    """
    elements = [Opa(g, +1), BeamSplitter(), PhaseShifter(2), _xi_pair(xi1, xi2), BeamSplitter()]
    if second_opa:
        elements.append(Opa(g, -1))
    if external_xi is not None:
        elements.append(_xi_pair(external_xi, external_xi))
    return Pipeline(spec, 2, tuple(elements))


def build_single_mode_chain(g: float, xi: float = 1.0, spec: InputSpec = InputSpec()) -> Pipeline:
    """Phase ``e^{-i phi n}``, then the de-amplifying squeezer, then detector loss."""
    return Pipeline(spec, 1, (PhaseShifter(1), Opa(g, -1, modes=1), Loss((xi,))))


def g_from_gain(G: float, modes: int = 2) -> float:
    """Invert the spontaneous photon number: ``G = 2 sinh^2 g`` (two modes), ``sinh^2 g`` (one)."""
    if G < 0:
        raise PhysicsError("gain G must be >= 0")
    return float(np.arcsinh(np.sqrt(G / modes)))


def is_symplectic(T: np.ndarray, tol: float = 1e-12) -> bool:
    W = omega(T.shape[0] // 2)
    return bool(np.max(np.abs(T @ W @ T.T - W)) < tol)
