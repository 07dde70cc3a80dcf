"""Gaussian states in the complex-mode ordering ``(a1, a1^dag, a2, a2^dag, ...)``.

A state is fully described by its complex mean vector ``v = <a>`` and the
symmetrized central covariance ``sigma_jk = <{a~_j, a~_k}>/2``.  States and
elements live in this complex basis; real quadratures appear only inside the
symplectic diagonalization used by the SLD solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import schur

from .errors import PhysicsError

STRUCTURAL_TOL = 1e-12
PHYSICAL_TOL = 1e-9


def _frozen(x, dtype=complex) -> np.ndarray:
    arr = np.array(x, dtype=dtype)
    arr.setflags(write=False)
    return arr


def omega(mode_count: int) -> np.ndarray:
    """Commutator matrix ``Omega_jk = [a_j, a_k]``, block ``[[0, 1], [-1, 0]]`` per mode."""
    block = np.array([[0.0, 1.0], [-1.0, 0.0]], dtype=complex)
    return np.kron(np.eye(mode_count), block)


def swap_matrix(mode_count: int) -> np.ndarray:
    """Permutation exchanging each ``(a_k, a_k^dag)`` pair.

    Hermitian conjugation of a linear or quadratic form in ``a`` acts on its
    coefficients as ``K conj(.)`` (vectors) or ``K conj(.) K`` (matrices).
    """
    block = np.array([[0.0, 1.0], [1.0, 0.0]])
    return np.kron(np.eye(mode_count), block)


@dataclass(frozen=True)
class InputSpec:
    """Displacement ``alpha`` on mode 1 and squeezing ``r`` on the last mode."""

    alpha: float = 0.0
    r: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and np.isfinite(self.r)):
            raise PhysicsError("alpha and r must be finite")
        if np.iscomplexobj(self.alpha):
            raise PhysicsError("complex displacement is not supported")

    @classmethod
    def from_photons(cls, n_c: float, n_s: float) -> "InputSpec":
        if n_c < 0 or n_s < 0:
            raise PhysicsError("photon numbers must be non-negative")
        return cls(alpha=float(np.sqrt(n_c)), r=float(np.arcsinh(np.sqrt(n_s))))

    @property
    def n_c(self) -> float:
        return self.alpha**2

    @property
    def n_s(self) -> float:
        return np.sinh(self.r) ** 2

    @property
    def X(self) -> float:
        return np.cosh(2 * self.r)

    @property
    def Y(self) -> float:
        return np.sinh(2 * self.r)


@dataclass(frozen=True)
class GaussianState:
    """Immutable Gaussian state.

    Args:
        v: complex mean vector of length ``2n``
        sigma: complex symmetrized covariance of shape ``(2n, 2n)``
    """

    v: np.ndarray
    sigma: np.ndarray
    mode_count: int = field(init=False)

    def __post_init__(self):
        v = _frozen(self.v)
        sigma = _frozen(self.sigma)
        if v.ndim != 1 or v.size % 2 or sigma.shape != (v.size, v.size):
            raise PhysicsError(f"shape mismatch: v{v.shape}, sigma{sigma.shape}")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(sigma))):
            raise PhysicsError("state contains non-finite entries")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "mode_count", v.size // 2)

    def validate(self, tol: float = STRUCTURAL_TOL, phys_tol: float = PHYSICAL_TOL) -> "GaussianState":
        """Check symmetry, the reality condition and the uncertainty principle.

        Tolerances are relative to the largest covariance entry, which keeps
        the checks meaningful for strongly amplified states.

        Raises:
            PhysicsError: if any invariant is violated
        """
        scale = max(1.0, float(np.max(np.abs(self.sigma))))
        vscale = max(1.0, float(np.max(np.abs(self.v), initial=0.0)))
        K = swap_matrix(self.mode_count)
        if np.max(np.abs(self.sigma - self.sigma.T)) > tol * scale:
            raise PhysicsError("covariance is not symmetric")
        if np.max(np.abs(K @ self.v.conj() - self.v), initial=0.0) > tol * vscale:
            raise PhysicsError("mean vector violates the reality condition")
        if np.max(np.abs(K @ self.sigma.conj() @ K - self.sigma)) > tol * scale:
            raise PhysicsError("covariance violates the reality condition")
        nu = symplectic_eigenvalues(self)
        if nu.min() < 0.5 - phys_tol * scale:
            raise PhysicsError(f"symplectic eigenvalue {nu.min():.3g} below 1/2")
        return self

    @property
    def is_pure(self) -> bool:
        nu = symplectic_eigenvalues(self)
        return bool(np.all(np.abs(nu - 0.5) < PHYSICAL_TOL * max(1.0, np.max(np.abs(self.sigma)))))


def vacuum(mode_count: int) -> GaussianState:
    if mode_count < 1:
        raise PhysicsError("vacuum needs at least one mode")
    sigma = 0.5 * swap_matrix(mode_count).astype(complex)
    return GaussianState(np.zeros(2 * mode_count, dtype=complex), sigma)


def squeezed_block(r: float) -> np.ndarray:
    X, Y = np.cosh(2 * r), np.sinh(2 * r)
    return 0.5 * np.array([[Y, X], [X, Y]], dtype=complex)


def coherent_squeezed_input(spec: InputSpec, mode_count: int = 2) -> GaussianState:
    """Coherent amplitude ``alpha`` on mode 1, squeezed vacuum ``r`` on the last mode.

    For ``mode_count=1`` both act on the single mode: the state is
    ``D(alpha) S(r) |0>``.
    """
    if mode_count not in (1, 2):
        raise PhysicsError("inputs are defined for one or two modes")
    v = np.zeros(2 * mode_count, dtype=complex)
    v[0] = v[1] = spec.alpha
    sigma = np.array(vacuum(mode_count).sigma)
    sigma[-2:, -2:] = squeezed_block(spec.r)
    return GaussianState(v, sigma)


def mean_photon_numbers(state: GaussianState) -> np.ndarray:
    """Per-mode ``<a_k^dag a_k>``."""
    state.validate()
    k = np.arange(state.mode_count)
    cross = state.sigma[2 * k, 2 * k + 1].real
    return cross - 0.5 + np.abs(state.v[2 * k]) ** 2


def symplectic_eigenvalues(state: GaussianState) -> np.ndarray:
    """Sorted moduli of the paired eigenvalues of ``Omega sigma``."""
    if not np.all(np.isfinite(state.sigma)):
        raise PhysicsError("non-finite covariance")
    ev = np.abs(np.linalg.eigvals(omega(state.mode_count) @ state.sigma))
    return np.sort(ev)[::2]


def quadrature_transform(mode_count: int) -> np.ndarray:
    """Unitary ``U`` with ``a = U x`` for real quadratures ``x = (q1, p1, ...)``, ``a = (q + ip)/sqrt 2``."""
    block = np.array([[1.0, 1.0j], [1.0, -1.0j]]) / np.sqrt(2)
    return np.kron(np.eye(mode_count), block)


def real_covariance(sigma: np.ndarray) -> np.ndarray:
    """Symmetrized quadrature covariance (vacuum = identity / 2)."""
    U = quadrature_transform(sigma.shape[0] // 2)
    return (U.conj().T @ sigma @ U.conj()).real


def williamson(cov: np.ndarray):
    """Symplectic diagonalization ``cov = S diag(nu) S^T`` of a real covariance.

    ``S`` preserves ``J`` (block ``[[0, 1], [-1, 0]]`` per mode, i.e.
    ``[x_j, x_k] = i J_jk``) and ``nu`` repeats each symplectic eigenvalue twice.

    Returns:
        tuple[np.ndarray, np.ndarray]: ``(nu, S)``
    """
    n = cov.shape[0] // 2
    J = omega(n).real
    w, Q = np.linalg.eigh(cov)
    if w.min() <= 0:
        raise PhysicsError("covariance is not positive definite")
    half = (Q * np.sqrt(w)) @ Q.T
    mhalf = (Q / np.sqrt(w)) @ Q.T
    T, O = schur(mhalf @ J @ mhalf, output="real")
    for k in range(n):
        if T[2 * k, 2 * k + 1] < 0:
            O[:, [2 * k, 2 * k + 1]] = O[:, [2 * k + 1, 2 * k]]
            T[2 * k, 2 * k + 1] *= -1
    nu = np.repeat(1.0 / T[2 * np.arange(n), 2 * np.arange(n) + 1], 2)
    S = half @ O / np.sqrt(nu)
    return nu, S
