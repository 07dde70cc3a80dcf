"""Brute-force number-basis oracle.

Everything here is built from truncated ladder operators and exponentials of
the elements' quadratic generators; nothing is shared with the
covariance-matrix engine except the :class:`~gaussmetro.elements.Pipeline`
description.  Loss is the amplitude-damping channel in Kraus form.

The density operator is stored as a factor ``rho = W W^dag`` with one column
per Kraus branch of the pure input.  Unitaries act on ``W`` through dense
propagators of the small blocks their generators conserve, so a two-mode
state with ~10^4 basis vectors never needs a 10^4 x 10^4 matrix.  The dense ``rho`` is available on
demand for small spaces.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm
from scipy.sparse.csgraph import connected_components
from scipy.special import gammaln

from .elements import BeamSplitter, Loss, Opa, PhaseShifter, Pipeline
from .errors import GaussMetroError, PhysicsError, TruncationError
from .state import InputSpec

logger = logging.getLogger(__name__)

DEFAULT_DIM = 30
# truncations tried by :func:`escalate`; the top rung is a dense-memory ceiling for two modes
DIMS_LADDER = (30, 45, 60, 80, 100, 120)
TRACE_GATE = 1e-8
TAIL_GATE = 1e-10
KRAUS_DEFICIT = 1e-12
FD_STEP = 1e-3
# unitaries run in a space padded by this many levels per mode, then truncated
PAD = 10
DENSE_LIMIT = 2500
MAX_ENTRIES = 4e7


@dataclass(frozen=True)
class TruncationReport:
    trace_deficit: float
    tail_population: float

    @property
    def ok(self) -> bool:
        return self.trace_deficit < TRACE_GATE and self.tail_population < TAIL_GATE


@dataclass(frozen=True)
class FockDensityMatrix:
    """Truncated number-basis state ``rho = factor @ factor^dag``.

    Args:
        dims: per-mode truncation
        factor: ``(prod(dims), R)`` array; column ``c`` is an unnormalized
            pure component of the mixture
        compressed: True once the columns were re-derived from an
            eigendecomposition (they no longer follow Kraus branches)
        kraus_counts: Kraus terms kept per mode by each loss applied so far
    """

    dims: tuple
    factor: np.ndarray
    compressed: bool = False
    kraus_counts: tuple = field(default=(), compare=False)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        W = np.asarray(self.factor, dtype=complex)
        if W.ndim == 1:
            W = W[:, None]
        if W.shape[0] != int(np.prod(dims)):
            raise PhysicsError(f"factor has {W.shape[0]} rows, dims {dims} need {int(np.prod(dims))}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "factor", W)

    @classmethod
    def from_ket(cls, dims, psi: np.ndarray) -> "FockDensityMatrix":
        return cls(tuple(dims), np.asarray(psi, dtype=complex)[:, None])

    @property
    def mode_count(self) -> int:
        return len(self.dims)

    @property
    def rank(self) -> int:
        return self.factor.shape[1]

    @cached_property
    def rho(self) -> np.ndarray:
        D = self.factor.shape[0]
        if D > DENSE_LIMIT:
            raise GaussMetroError(f"dense density matrix of size {D} exceeds the oracle limit {DENSE_LIMIT}")
        return self.factor @ self.factor.conj().T

    def trace(self) -> float:
        return float(np.sum(np.abs(self.factor) ** 2))

    def report(self) -> TruncationReport:
        deficit = abs(1.0 - self.trace())
        tail = max(float(self.populations(k)[-2:].sum()) for k in range(self.mode_count))
        return TruncationReport(deficit, tail)

    def check(self, where: str = "") -> "FockDensityMatrix":
        rep = self.report()
        if not rep.ok:
            raise TruncationError(
                f"truncation gate failed{' after ' + where if where else ''}: "
                f"trace deficit {rep.trace_deficit:.2e}, tail {rep.tail_population:.2e}; "
                f"increase dims beyond {self.dims}"
            )
        return self

    def populations(self, mode: int) -> np.ndarray:
        """Photon-number distribution of one mode (0-based)."""
        p = (np.abs(self.factor) ** 2).reshape(self.dims + (-1,)).sum(axis=-1)
        others = tuple(k for k in range(self.mode_count) if k != mode)
        return p.sum(axis=others) if others else p

    def purity(self) -> float:
        gram = self.factor.conj().T @ self.factor
        return float(np.sum(np.abs(gram) ** 2))

    def expectation(self, op) -> complex:
        """``Tr[rho op]`` for a dense or sparse operator."""
        return complex(np.vdot(self.factor, op @ self.factor))


def destroy(d: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, d, dtype=float)), 1, shape=(d, d), format="csr", dtype=complex)


@lru_cache(maxsize=32)
def ladder_ops(dims: tuple) -> tuple:
    """Sparse annihilation operators of each mode on the tensor-product space."""
    ops = []
    for k in range(len(dims)):
        op = sp.identity(1, dtype=complex, format="csr")
        for j, dj in enumerate(dims):
            op = sp.kron(op, destroy(dj) if j == k else sp.identity(dj, format="csr"), format="csr")
        ops.append(op)
    return tuple(ops)


@lru_cache(maxsize=32)
def number_ops(dims: tuple) -> tuple:
    """Diagonals of the per-mode number operators."""
    grids = np.meshgrid(*[np.arange(d, dtype=float) for d in dims], indexing="ij")
    return tuple(g.ravel() for g in grids)


def _dims(dims, mode_count: int) -> tuple:
    if np.isscalar(dims):
        return (int(dims),) * mode_count
    dims = tuple(int(d) for d in dims)
    if len(dims) != mode_count:
        raise PhysicsError(f"need {mode_count} truncation dims, got {dims}")
    return dims


def _single_mode_ket(alpha: float, r: float, d: int) -> np.ndarray:
    """``D(alpha) S(r)|0>`` computed with ``max(PAD, d)`` spare levels, then cut to ``d``."""
    big = d + max(PAD, d)
    a = destroy(big).toarray()
    ad = a.conj().T
    psi = np.zeros(big, dtype=complex)
    psi[0] = 1.0
    if r:
        psi = expm(r * (ad @ ad - a @ a) / 2) @ psi
    if alpha:
        psi = expm(alpha * (ad - a)) @ psi
    return psi[:d]


def build_state(spec: InputSpec, dims=DEFAULT_DIM, mode_count: int = 2) -> FockDensityMatrix:
    """``D(alpha)`` on mode 1 and ``S(r)`` on the last mode, acting on vacuum."""
    dims = _dims(dims, mode_count)
    if mode_count == 1:
        psi = _single_mode_ket(spec.alpha, spec.r, dims[0])
    else:
        psi = np.kron(_single_mode_ket(spec.alpha, 0.0, dims[0]), _single_mode_ket(0.0, spec.r, dims[1]))
    return FockDensityMatrix.from_ket(dims, psi).check("input preparation")


@lru_cache(maxsize=32)
def _generator(kind: str, param: float, sign: int, dims: tuple) -> sp.csr_matrix:
    """Anti-Hermitian ``K`` with the element's unitary ``exp(K)``."""
    ops = ladder_ops(dims)
    if kind == "bs":
        a1, a2 = ops
        return ((np.pi / 4) * (a1.conj().T @ a2 - a2.conj().T @ a1)).tocsr()
    if kind == "opa2":
        a1, a2 = ops
        return ((sign * param) * (a1.conj().T @ a2.conj().T - a1 @ a2)).tocsr()
    if kind == "opa1":
        (a,) = ops
        ad = a.conj().T
        return ((sign * param / 2) * (ad @ ad - a @ a)).tocsr()
    raise ValueError(kind)


@lru_cache(maxsize=16)
def _propagator_blocks(kind: str, param: float, sign: int, dims: tuple) -> tuple:
    """Blocks of ``cut(exp(K) pad(.))`` for a generator ``K`` on the padded space.

    The quadratic generators conserve ``n1 + n2``, ``n1 - n2`` or parity, so the
    padded propagator splits into small connected components, each
    exponentiated densely.  Returns ``(out_rows, in_rows, U)`` triples indexing
    the unpadded space.
    """
    big = tuple(d + PAD for d in dims)
    K = _generator(kind, param, sign, big)
    ncomp, labels = connected_components(K != 0, directed=False)
    grid = np.indices(big).reshape(len(big), -1)
    inside = np.all(grid < np.asarray(dims)[:, None], axis=0)
    small_index = np.ravel_multi_index(grid[:, inside], dims)
    small_of = np.full(labels.size, -1)
    small_of[inside] = small_index
    blocks = []
    order = np.argsort(labels, kind="stable")
    bounds = np.searchsorted(labels[order], np.arange(ncomp + 1))
    for c in range(ncomp):
        idx = order[bounds[c]:bounds[c + 1]]
        keep = inside[idx]
        if not keep.any():
            continue
        U = expm(K[idx][:, idx].toarray())
        if kind == "bs":
            # e^{i pi n2} turns the rotation into a1 -> (a1 + a2)/sqrt2, a2 -> (a1 - a2)/sqrt2
            U = np.exp(1j * np.pi * number_ops(big)[1][idx])[:, None] * U
        rows = small_of[idx[keep]]
        blocks.append((rows, np.ascontiguousarray(U[np.ix_(keep, keep)])))
    return tuple(blocks)


def _propagate(kind: str, param: float, sign: int, dims: tuple, W: np.ndarray) -> np.ndarray:
    out = np.zeros(W.shape, dtype=complex)
    for rows, U in _propagator_blocks(kind, param, sign, dims):
        out[rows] = U @ W[rows]
    return out


def phase_diagonal(phi: float, dims: tuple) -> np.ndarray:
    """Diagonal of the phase unitary: ``e^{i phi (n1 - n2)/2}`` or ``e^{-i phi n}``."""
    ns = number_ops(dims)
    if len(dims) == 2:
        return np.exp(0.5j * phi * (ns[0] - ns[1]))
    return np.exp(-1j * phi * ns[0])


def apply_unitary(state: FockDensityMatrix, element, phi: float = 0.0) -> FockDensityMatrix:
    """Apply a lossless element (beam splitter, phase, OPA or squeezer)."""
    dims = state.dims
    if len(dims) != element.modes:
        raise PhysicsError(f"{type(element).__name__} acts on {element.modes} modes, state has {len(dims)}")
    if isinstance(element, PhaseShifter):
        angle = phi if element.is_carrier else float(element.value)
        W = phase_diagonal(angle, dims)[:, None] * state.factor
        return FockDensityMatrix(dims, W, state.compressed, state.kraus_counts)
    if isinstance(element, BeamSplitter):
        kind, param, sign = "bs", 0.0, 1
    elif isinstance(element, Opa):
        kind, param, sign = ("opa2" if element.modes == 2 else "opa1"), float(element.g), element.sign
    else:
        raise PhysicsError(f"oracle does not know element {element!r}")
    if kind != "bs" and param == 0.0:
        return state
    W = _propagate(kind, param, sign, tuple(dims), state.factor)
    return FockDensityMatrix(dims, W, state.compressed, state.kraus_counts)


def _kraus_coefficients(xi: float, d: int, m: int) -> np.ndarray:
    """Entries ``<n-m| K_m |n> = sqrt(C(n, m) (1-xi)^m xi^(n-m))`` for ``n = m..d-1``."""
    src = np.arange(m, d)
    if xi == 0.0:
        return (src == m).astype(float)
    logw = gammaln(src + 1) - gammaln(m + 1) - gammaln(src - m + 1)
    logw = logw + m * np.log1p(-xi) + (src - m) * np.log(xi)
    return np.exp(0.5 * logw)


def kraus_count(pops: np.ndarray, xi: float) -> int:
    """Smallest number of Kraus terms leaving less than ``KRAUS_DEFICIT`` weight unaccounted for."""
    d = pops.size
    if xi == 1.0:
        return 1
    covered = np.zeros(d)
    for m in range(d):
        covered[m:] += _kraus_coefficients(xi, d, m) ** 2
        if float(np.dot(pops, 1 - covered)) < KRAUS_DEFICIT:
            return m + 1
    return d


def _compress(state: FockDensityMatrix) -> FockDensityMatrix:
    lam, V = np.linalg.eigh(state.rho)
    keep = lam > 1e-16 * max(lam.max(), 1e-300)
    W = V[:, keep] * np.sqrt(lam[keep])
    return FockDensityMatrix(state.dims, W, True, state.kraus_counts)


def apply_loss(state: FockDensityMatrix, xi, counts: Optional[tuple] = None) -> FockDensityMatrix:
    """Independent amplitude damping with transmissivity ``xi[k]`` on each mode.

    Each Kraus term ``K_m`` becomes a block of columns of the factor.  Terms
    are added until the population they miss falls below ``KRAUS_DEFICIT``
    unless ``counts`` fixes how many to keep per mode (used to keep the
    column structure identical between nearby phases).
    """
    xi = tuple(float(x) for x in np.atleast_1d(xi))
    dims = state.dims
    if len(xi) != len(dims):
        raise PhysicsError(f"loss needs {len(dims)} transmissivities, got {len(xi)}")
    used = []
    W = state.factor
    for k, x in enumerate(xi):
        if not 0 <= x <= 1:
            raise PhysicsError(f"transmissivity {x} outside [0, 1]")
        M = counts[k] if counts is not None else kraus_count(FockDensityMatrix(dims, W).populations(k), x)
        used.append(M)
        if x == 1.0:
            continue
        d = dims[k]
        t = np.moveaxis(W.reshape(dims + (-1,)), k, 0)
        blocks = []
        for m in range(M):
            out = np.zeros_like(t)
            c = _kraus_coefficients(x, d, m).reshape((-1,) + (1,) * (t.ndim - 1))
            out[: d - m] = c * t[m:]
            blocks.append(np.moveaxis(out, 0, k).reshape(W.shape[0], -1))
        W = np.concatenate(blocks, axis=1)
        if W.size > MAX_ENTRIES:
            raise GaussMetroError(f"oracle factor with {W.shape[1]} columns exceeds the memory budget")
    out = FockDensityMatrix(dims, W, state.compressed, state.kraus_counts + tuple(used))
    if out.rank > out.factor.shape[0] and out.factor.shape[0] <= DENSE_LIMIT:
        out = _compress(out)
    return out


def apply_element(state: FockDensityMatrix, element, phi: float, counts=None) -> FockDensityMatrix:
    if isinstance(element, Loss):
        return apply_loss(state, element.xi, counts)
    return apply_unitary(state, element, phi)


def _carrier_index(pipeline: Pipeline) -> int:
    return next(i for i, el in enumerate(pipeline.elements) if isinstance(el, PhaseShifter) and el.is_carrier)


class _Chain:
    """Pipeline evaluator caching the state just before the phase carrier."""

    def __init__(self, pipeline: Pipeline, dims, prune: bool = False):
        self.dims = _dims(dims, pipeline.mode_count)
        idx = _carrier_index(pipeline)
        state = build_state(pipeline.input, self.dims, pipeline.mode_count)
        for el in pipeline.elements[:idx]:
            state = apply_element(state, el, 0.0).check(type(el).__name__)
        self.prefix = state
        self.carrier = pipeline.elements[idx]
        suffix = list(pipeline.elements[idx + 1:])
        if prune:
            # parameter-independent unitaries after the last channel leave the QFI unchanged
            while suffix and not isinstance(suffix[-1], Loss):
                suffix.pop()
        self.suffix = tuple(suffix)

    def __call__(self, phi: float, plan: Optional[list] = None) -> FockDensityMatrix:
        state = apply_element(self.prefix, self.carrier, phi)
        fixed = iter(plan) if plan is not None else None
        for el in self.suffix:
            counts = next(fixed) if fixed is not None and isinstance(el, Loss) else None
            state = apply_element(state, el, phi, counts).check(type(el).__name__)
        return state

    def loss_plan(self, state: FockDensityMatrix) -> list:
        """Per-loss-element Kraus counts recorded while producing ``state``."""
        flat = list(state.kraus_counts[len(self.prefix.kraus_counts):])
        n = len(self.dims)
        return [tuple(flat[i:i + n]) for i in range(0, len(flat), n)]


def evolve(pipeline: Pipeline, phi: float = 0.0, dims=DEFAULT_DIM) -> FockDensityMatrix:
    """Output state of the pipeline at phase ``phi`` (gate-checked)."""
    return _Chain(pipeline, dims)(phi).check("pipeline")


def qfi_from_rho(rho: np.ndarray, drho: np.ndarray, cutoff: float = 1e-12) -> float:
    """``sum 2 |<j|rho'|k>|^2 / (l_j + l_k)`` over pairs with ``l_j + l_k > cutoff``."""
    rho = 0.5 * (rho + rho.conj().T)
    drho = 0.5 * (drho + drho.conj().T)
    lam, V = np.linalg.eigh(rho)
    D = V.conj().T @ drho @ V
    denom = lam[:, None] + lam[None, :]
    mask = denom > cutoff
    return float(np.sum(2 * np.abs(D[mask]) ** 2 / denom[mask]))


def qfi_from_factor(W: np.ndarray, dW: np.ndarray, cutoff: float = 1e-12) -> float:
    """Same sum as :func:`qfi_from_rho` for ``rho = W W^dag``, ``rho' = dW W^dag + W dW^dag``.

    Eigenvectors come from a thin SVD of ``W``.  Pairs with one partner in
    the kernel of ``rho`` contribute ``4/l_j`` times the part of
    ``rho' |j>`` that leaves the support, so the kernel never has to be
    formed explicitly.
    """
    U, s, _ = np.linalg.svd(W, full_matrices=False)
    lam = s**2
    keep = lam > cutoff / 2
    U, lam = U[:, keep], lam[keep]
    R = dW @ (W.conj().T @ U) + W @ (dW.conj().T @ U)
    D = U.conj().T @ R
    denom = lam[:, None] + lam[None, :]
    inner = float(np.sum(2 * np.abs(D) ** 2 / denom))
    leak = np.sum(np.abs(R) ** 2, axis=0) - np.sum(np.abs(D) ** 2, axis=0)
    big = lam > cutoff
    outer = float(np.sum(4 * np.clip(leak[big], 0, None) / lam[big]))
    return inner + outer


def _richardson(fm2, fm1, fp1, fp2, h):
    d1 = (fp1 - fm1) / (2 * h)
    d2 = (fp2 - fm2) / (4 * h)
    return (4 * d1 - d2) / 3


def qfi_fock(pipeline: Pipeline, phi: float = 0.0, dims=DEFAULT_DIM, h: float = FD_STEP) -> float:
    """QFI of the pipeline output from the oracle's own ``rho(phi)``.

    ``rho'`` comes from central differences at ``h`` and ``2h`` combined by
    one Richardson step.  Unitaries after the last loss are dropped: they do
    not depend on the phase and cannot change the QFI.
    """
    chain = _Chain(pipeline, dims, prune=True)
    base = chain(phi).check("pipeline")
    plan = chain.loss_plan(base)
    shifted = [chain(phi + k * h, plan) for k in (-2, -1, 1, 2)]
    factored = not base.compressed and all(
        not s.compressed and s.factor.shape == base.factor.shape for s in shifted
    )
    if factored:
        dW = _richardson(*[s.factor for s in shifted], h)
        F = qfi_from_factor(base.factor, dW)
    else:
        drho = _richardson(*[s.rho for s in shifted], h)
        F = qfi_from_rho(base.rho, drho)
    logger.debug("oracle QFI %.12g at dims %s (rank %d)", F, chain.dims, base.rank)
    return F


def escalate(fn, dims_seq=DIMS_LADDER):
    """Call ``fn(dims)`` on successively larger truncations until the gate passes.

    Returns:
        tuple: ``(fn(dims), dims)`` for the first ``dims`` that succeeds

    Raises:
        TruncationError: from the largest truncation if every attempt fails
    """
    last = None
    for d in dims_seq:
        try:
            return fn(d), d
        except TruncationError as exc:
            logger.debug("dims %s rejected: %s", d, exc)
            last = exc
    raise last


def observable_matrix(A0: np.ndarray, b0: np.ndarray, state: FockDensityMatrix) -> sp.csr_matrix:
    """Sparse matrix of ``1/2 a~^T A0 a~ + a^T b0`` with ``a~`` centred on the state's own mean."""
    ops = []
    for a in ladder_ops(state.dims):
        ops += [a, a.conj().T.tocsr()]
    D = state.factor.shape[0]
    eye = sp.identity(D, dtype=complex, format="csr")
    centred = [op - state.expectation(op) * eye for op in ops]
    M = sp.csr_matrix((D, D), dtype=complex)
    for j, oj in enumerate(centred):
        for k, ok in enumerate(centred):
            if A0[j, k] != 0:
                M = M + 0.5 * A0[j, k] * (oj @ ok)
        if b0[j] != 0:
            M = M + b0[j] * ops[j]
    return M.tocsr()


def observable_stats(det, state: FockDensityMatrix):
    """Mean and variance of a quadratic detector in ``state``.

    Returns:
        tuple[float, float]
    """
    state.check("observable evaluation")
    M = observable_matrix(np.asarray(det.A0), np.asarray(det.b0), state)
    W = state.factor
    MW = M @ W
    mean = np.vdot(W, MW)
    second = np.vdot(M.conj().T @ W, MW)
    return float(mean.real), float((second - mean**2).real)


def fidelity_with_pure(state: FockDensityMatrix, psi: np.ndarray) -> float:
    return float(np.sum(np.abs(psi.conj() @ state.factor) ** 2))


def coherent_ket(alpha: float, d: int) -> np.ndarray:
    """Analytic number-basis amplitudes ``e^{-alpha^2/2} alpha^n / sqrt(n!)`` for real ``alpha``."""
    amp = np.zeros(d)
    amp[0] = np.exp(-alpha**2 / 2)
    for k in range(1, d):
        amp[k] = amp[k - 1] * alpha / np.sqrt(k)
    return amp.astype(complex)
