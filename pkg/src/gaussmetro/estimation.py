"""Quantum Fisher information, the SLD, and moment-based detector sensitivity.

Observables are quadratic-plus-linear forms in the mode operators,

    M = 1/2 a~^T A0 a~ + a^T b0,      a~ = a - <a>,

so every quantity reduces to traces of small complex matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elements import StateDerivative
from .errors import PhysicsError
from .state import (
    GaussianState,
    omega,
    quadrature_transform,
    real_covariance,
    swap_matrix,
    williamson,
)

PINV_RCOND = 1e-10
RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class QuadraticDetector:
    A0: np.ndarray
    b0: np.ndarray
    label: str = ""

    def __post_init__(self):
        A0 = np.array(self.A0, dtype=complex)
        b0 = np.array(self.b0, dtype=complex)
        if A0.shape != (b0.size, b0.size):
            raise PhysicsError("detector matrix and vector sizes disagree")
        A0.setflags(write=False)
        b0.setflags(write=False)
        object.__setattr__(self, "A0", A0)
        object.__setattr__(self, "b0", b0)

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        K = swap_matrix(self.b0.size // 2)
        scale = max(1.0, np.max(np.abs(self.A0)), np.max(np.abs(self.b0)))
        return bool(
            np.max(np.abs(self.A0 - self.A0.T)) < tol * scale
            and np.max(np.abs(K @ self.A0.conj() @ K - self.A0)) < tol * scale
            and np.max(np.abs(K @ self.b0.conj() - self.b0)) < tol * scale
        )

    def ray(self) -> np.ndarray:
        """Coefficients ``(A0, b0)`` flattened and divided by the largest-magnitude entry.

        Sensitivity is invariant under rescaling the detector, so two detectors
        are the same measurement when their rays coincide.
        """
        flat = np.concatenate([self.A0.ravel(), self.b0])
        k = int(np.argmax(np.abs(flat)))
        if abs(flat[k]) == 0:
            return flat
        return flat / flat[k]

    def __add__(self, other: "QuadraticDetector") -> "QuadraticDetector":
        return QuadraticDetector(self.A0 + other.A0, self.b0 + other.b0, f"{self.label}+{other.label}")

    def scaled(self, c: float) -> "QuadraticDetector":
        return QuadraticDetector(c * self.A0, c * self.b0, self.label)


@dataclass(frozen=True)
class SldObservable:
    """Symmetric logarithmic derivative ``L = 1/2 a~^T A a~ - 1/2 Tr[sigma A] + a~^T b``."""

    A: np.ndarray
    b: np.ndarray

    def detector(self, label: str = "M") -> QuadraticDetector:
        """The optimal M-detection built from this SLD."""
        return QuadraticDetector(self.A, self.b, label)


def _superoperator(sigma: np.ndarray, W: np.ndarray) -> np.ndarray:
    # (X kron Y)_{jk,pq} = X_jp Y_kq, which is np.kron acting on row-major vec
    return np.kron(sigma, sigma) + np.kron(W, W) / 4


def _solve_quadratic_part(sigma: np.ndarray, dsigma: np.ndarray):
    """Solve ``sigma A sigma + Omega A Omega^T / 4 = sigma'`` for symmetric ``A``.

    The system is a congruence of a well-scaled core by ``S kron S`` (``S``
    the Williamson symplectic), so the pseudo-inverse cutoff is applied in the
    Williamson frame where singular values are O(1) and the kernel of pure
    modes is cleanly separated.  The residual is measured in the same frame:
    mapping back multiplies roundoff by ``cond(S)^2``, which for strong
    squeezing would swamp a meaningful consistency test.

    Returns:
        tuple[np.ndarray, float]: ``A`` and the frame-system residual beyond roundoff, relative to ``|C|``
    """
    n = sigma.shape[0] // 2
    U = quadrature_transform(n)
    J = omega(n).real
    cov = real_covariance(sigma)
    dcov = (U.conj().T @ dsigma @ U.conj()).real
    nu, S = williamson(cov)
    Sinv = np.linalg.inv(S)
    C = Sinv @ dcov @ Sinv.T
    C = 0.5 * (C + C.T)
    # real-quadrature form of the equation: cov A cov - J A J^T / 4 = cov'
    core = _superoperator(np.diag(nu), 1j * J).real
    vecA = np.linalg.pinv(core, rcond=PINV_RCOND, hermitian=True) @ C.ravel()
    # sigma' carries roundoff of order eps |cov| and S itself is only accurate
    # to eps cond(S); both are magnified by the frame change
    norm_c = np.linalg.norm(C)
    floor = 1e-12 * (np.linalg.cond(S) ** 2 * norm_c + np.linalg.norm(Sinv, 2) ** 2 * max(1.0, np.linalg.norm(cov, 2)))
    excess = np.linalg.norm(core @ vecA - C.ravel()) - floor
    residual = max(excess, 0.0) / max(norm_c, floor)
    A_frame = vecA.reshape(2 * n, 2 * n)
    A_real = Sinv.T @ A_frame @ Sinv
    A = U.conj() @ A_real @ U.conj().T
    return 0.5 * (A + A.T), float(residual)


def sld(state: GaussianState, derivative: StateDerivative) -> SldObservable:
    """Symmetric logarithmic derivative of a Gaussian family.

    Solves ``(sigma x sigma + Omega x Omega / 4) vec(A) = vec(sigma')`` and
    ``b = sigma^-1 v'``.  Taking second moments of ``rho' = {rho, L}/2`` with
    Wick's theorem gives ``sigma A sigma + Omega A Omega^T / 4 = sigma'`` in this
    normalization of ``sigma`` (vacuum cross entries 1/2).  Pure modes make the
    system singular; the minimum-norm solution is used and the residual checked.

    Raises:
        PhysicsError: singular covariance or a derivative outside the
            superoperator's range
    """
    sigma, ds, dv = state.sigma, derivative.dsigma, derivative.dv
    d = sigma.shape[0]
    try:
        b = np.linalg.solve(sigma, dv)
    except np.linalg.LinAlgError as exc:
        raise PhysicsError("singular covariance matrix") from exc

    if np.linalg.norm(ds) == 0:
        return SldObservable(np.zeros((d, d), dtype=complex), b)
    A, residual = _solve_quadratic_part(sigma, ds)
    if residual > RESIDUAL_TOL:
        raise PhysicsError(
            f"SLD equation inconsistent (relative residual {residual:.3g}); derivative is unphysical"
        )
    return SldObservable(A, b)


def qfi_from_sld(L: SldObservable, derivative: StateDerivative) -> float:
    F = 0.5 * np.trace(derivative.dsigma @ L.A) + derivative.dv @ L.b
    return float(F.real)


def qfi(state: GaussianState, derivative: StateDerivative) -> float:
    """Quantum Fisher information ``F = 1/2 Tr[sigma' A] + v'^T b``."""
    F = qfi_from_sld(sld(state, derivative), derivative)
    if F < -1e-9 * max(1.0, abs(F)):
        raise PhysicsError(f"negative QFI {F:.3g}")
    return max(F, 0.0)


def qcrb(F: float) -> float:
    """Quantum Cramer-Rao bound ``1/sqrt(F)`` on the phase uncertainty."""
    if not F > 0:
        raise PhysicsError("zero Fisher information: the configuration carries no phase information")
    return 1.0 / np.sqrt(F)


def signal_slope(det: QuadraticDetector, derivative: StateDerivative) -> complex:
    """``d<M>/dphi = 1/2 Tr[sigma' A0] + v'^T b0``."""
    return 0.5 * np.trace(derivative.dsigma @ det.A0) + derivative.dv @ det.b0


def signal_mean(det: QuadraticDetector, state: GaussianState) -> complex:
    return 0.5 * np.trace(state.sigma @ det.A0) + state.v @ det.b0


def detection_noise(det: QuadraticDetector, state: GaussianState) -> float:
    """Variance of ``M`` from Wick's theorem.

    With ``G = sigma + Omega/2`` the ordered second moments ``<a~_j a~_k>``,
    both non-trivial pairings of ``<a~ a~ a~ a~>`` reduce to the same trace and
    ``Var M = 1/2 Tr[A0 G A0 G^T] + b0^T sigma b0``.  Third moments vanish, so
    linear and quadratic parts do not mix.
    """
    G = state.sigma + omega(state.mode_count) / 2
    A = det.A0
    quad = 0.5 * np.trace(A @ G @ A @ G.T)
    lin = det.b0 @ state.sigma @ det.b0
    return float((quad + lin).real)


def detector_sensitivity(det: QuadraticDetector, state: GaussianState, derivative: StateDerivative) -> float:
    """Error propagation ``Var(M) / |d<M>/dphi|^2`` (a squared phase uncertainty).

    Raises:
        PhysicsError: if the signal does not respond to the phase
    """
    slope = signal_slope(det, derivative)
    noise = detection_noise(det, state)
    if abs(slope) ** 2 <= 1e-14 * max(noise, 1e-300):
        raise PhysicsError(f"detector '{det.label}' is blind at this operating point")
    return noise / abs(slope) ** 2


def homodyne_detector(mode: int, mode_count: int = 2) -> QuadraticDetector:
    """Quadrature ``p_k = i (a_k^dag - a_k) / sqrt(2)`` on 1-based mode ``k``."""
    if not 1 <= mode <= mode_count:
        raise PhysicsError(f"mode {mode} outside 1..{mode_count}")
    d = 2 * mode_count
    b = np.zeros(d, dtype=complex)
    b[2 * (mode - 1)] = -1j / np.sqrt(2)
    b[2 * (mode - 1) + 1] = 1j / np.sqrt(2)
    return QuadraticDetector(np.zeros((d, d)), b, f"p{mode}")


def generalized_homodyne_coefficient(xi1: float, xi2: float) -> float:
    s1, s2 = np.sqrt(xi1), np.sqrt(xi2)
    if s1 + s2 == 0:
        raise PhysicsError("both arms fully lossy")
    return float((s1 - s2) / (s1 + s2))


def generalized_homodyne(xi1: float, xi2: float) -> QuadraticDetector:
    """``p2 + c p1`` with ``c = (sqrt xi1 - sqrt xi2) / (sqrt xi1 + sqrt xi2)``."""
    c = generalized_homodyne_coefficient(xi1, xi2)
    det = homodyne_detector(2) + homodyne_detector(1).scaled(c)
    return QuadraticDetector(det.A0, det.b0, "gho")


def number_detector(mode: int, mode_count: int = 2) -> QuadraticDetector:
    """Photon counting on one mode, centred: ``1/2 a~^T A0 a~`` carries the fluctuation part.

    For a state with mean ``v`` the number operator equals
    ``1/2 a~^T A0 a~ + a^T b0`` up to a constant when ``b0 = A0 v`` (see
    :func:`number_detector_at`); this helper returns the purely quadratic part.
    """
    d = 2 * mode_count
    A = np.zeros((d, d), dtype=complex)
    k = 2 * (mode - 1)
    A[k, k + 1] = A[k + 1, k] = 1.0
    return QuadraticDetector(A, np.zeros(d), f"n{mode}")


def number_detector_at(mode: int, state: GaussianState) -> QuadraticDetector:
    """Photon number ``a_k^dag a_k`` linearized around ``state``'s mean."""
    q = number_detector(mode, state.mode_count)
    return QuadraticDetector(q.A0, q.A0 @ state.v, q.label)


def m_detection(state: GaussianState, derivative: StateDerivative) -> QuadraticDetector:
    return sld(state, derivative).detector()


def ray_distance(det1: QuadraticDetector, det2: QuadraticDetector) -> float:
    """Max-norm distance between the normalized coefficient rays of two detectors."""
    return float(np.max(np.abs(det1.ray() - det2.ray())))
