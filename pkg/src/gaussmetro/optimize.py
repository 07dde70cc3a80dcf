"""Deterministic scalar optimization and parameter sweeps."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import formulas
from .elements import build_mzi, build_single_mode_chain, g_from_gain, propagate_with_derivative
from .errors import PhysicsError
from .estimation import qfi
from .state import InputSpec

GOLDEN = (np.sqrt(5) - 1) / 2
COARSE_POINTS = 32


@dataclass(frozen=True)
class ScalarMinimum:
    """Minimizer ``x``, value ``fun`` and the search metadata.

    Unpacks as ``x, fun = minimize_scalar(...)``.
    """

    x: float
    fun: float
    iterations: int
    bracket: tuple

    def __iter__(self):
        return iter((self.x, self.fun))


def _finite(f, x):
    y = float(f(x))
    if not np.isfinite(y):
        raise PhysicsError(f"objective is not finite at x={x!r}: {y}")
    return y


def minimize_scalar(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-8,
                    coarse: int = COARSE_POINTS) -> ScalarMinimum:
    """Golden-section search seeded by a coarse grid.

    The grid picks the best of ``coarse`` equally spaced points, and the
    search then runs on the two neighbouring cells, so a wrong unimodality
    assumption costs at most one grid cell.  Endpoints are compared with the
    interior result, which makes monotone objectives return the boundary.

    Args:
        f: objective
        lo: lower end of the search interval
        hi: upper end of the search interval
        tol: final bracket width relative to ``max(1, |x|)``
        coarse: number of grid points (>= 3)

    Returns:
        ScalarMinimum

    Raises:
        PhysicsError: if the interval is empty or ``f`` returns a non-finite value
    """
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        raise PhysicsError(f"invalid interval [{lo}, {hi}]")
    grid = np.linspace(lo, hi, max(coarse, 3))
    values = np.array([_finite(f, x) for x in grid])
    k = int(np.argmin(values))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    bracket = (float(a), float(b))

    c, d = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
    fc, fd = _finite(f, c), _finite(f, d)
    it = 0
    while (b - a) > tol * max(1.0, abs(a), abs(b)) and it < 500:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = _finite(f, c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = _finite(f, d)
        it += 1
    x, fx = (c, fc) if fc <= fd else (d, fd)
    # the grid point itself (possibly an endpoint) can beat the interior estimate
    if values[k] < fx:
        x, fx = float(grid[k]), float(values[k])
    return ScalarMinimum(float(x), float(fx), it, bracket)


def maximize_scalar(f, lo, hi, tol: float = 1e-8) -> ScalarMinimum:
    res = minimize_scalar(lambda x: -f(x), lo, hi, tol)
    return ScalarMinimum(res.x, -res.fun, res.iterations, res.bracket)


def library_qfi(pipeline, phi: float = 0.0) -> float:
    state, deriv = propagate_with_derivative(pipeline, phi)
    return qfi(state, deriv)


def mzi_qcrb2(n_c: float, n_s: float, xi1: float, xi2: float, phi: float = 0.0) -> float:
    """``Delta^2 phi = 1/F`` of the lossy MZI."""
    spec = InputSpec.from_photons(max(n_c, 0.0), max(n_s, 0.0))
    F = library_qfi(build_mzi(xi1, xi2, spec), phi)
    if not F > 0:
        return np.inf
    return 1.0 / F


def optimize_ns(n: float, xi1: float = 1.0, xi2: float = 1.0, tol: float = 1e-8):
    """Split a photon budget ``n = n_c + n_s`` to minimize the MZI QCRB.

    Returns:
        tuple[float, float]: ``(n_s*, Delta^2 phi*)``
    """
    if not n > 0:
        raise PhysicsError("total photon number must be positive")
    res = minimize_scalar(lambda ns: mzi_qcrb2(n - ns, ns, xi1, xi2), 0.0, float(n), tol)
    return res.x, res.fun


@dataclass(frozen=True)
class PhiGainOptimum:
    phi: float
    F: float
    xi: float
    iterations: int


def optimize_phi_gain(alpha: float, r: float, xi: float = 1.0, tol: float = 1e-10) -> PhiGainOptimum:
    """Best phase for the single-mode chain in the infinite-gain limit.

    The limit does not depend on ``xi``; use :func:`single_mode_gain_curve`
    for the finite-gain behaviour at the returned phase.
    """
    if not 0 < xi <= 1:
        raise PhysicsError(f"transmissivity must lie in (0, 1], got {xi}")
    res = maximize_scalar(lambda p: formulas.f_single_mode_limit(alpha, r, p), 0.0, np.pi / 2, tol)
    return PhiGainOptimum(res.x, res.fun, xi, res.iterations)


def single_mode_gain_curve(alpha: float, r: float, xi: float, phi: float, gains: Sequence[float]) -> np.ndarray:
    """Library QFI of the single-mode chain for each spontaneous photon number ``G = sinh^2 g``."""
    spec = InputSpec(alpha, r)
    return np.array([library_qfi(build_single_mode_chain(g_from_gain(G, 1), xi, spec), phi) for G in gains])


@dataclass(frozen=True)
class SweepResult:
    """Rows of a one-dimensional sweep in axis order."""

    axis: str
    grid: np.ndarray
    F: np.ndarray
    dphi: np.ndarray
    detectors: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        if grid.size > 1 and not np.all(np.diff(grid) > 0):
            raise PhysicsError("sweep grid must be strictly increasing")
        F, dphi = np.asarray(self.F, float), np.asarray(self.dphi, float)
        cols = [F, dphi] + [np.asarray(v, float) for v in self.detectors.values()]
        for col in cols:
            if col.shape != grid.shape:
                raise PhysicsError("sweep column length differs from the grid")
        # dphi is infinite exactly where the state carries no phase information
        if not (np.all(np.isfinite(F)) and np.all(np.isfinite(dphi) | (F == 0))):
            raise PhysicsError("sweep produced non-finite values")
        if not all(np.all(np.isfinite(c)) for c in cols[2:]):
            raise PhysicsError("sweep produced non-finite detector values")
        object.__setattr__(self, "grid", grid)

    def columns(self) -> dict:
        out = {self.axis: self.grid, "F": np.asarray(self.F), "dphi": np.asarray(self.dphi)}
        out.update({k: np.asarray(v) for k, v in self.detectors.items()})
        return out


def worker_count() -> int:
    """Parallelism cap from ``GAUSSMETRO_THREADS`` (default 1)."""
    raw = os.environ.get("GAUSSMETRO_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise PhysicsError(f"GAUSSMETRO_THREADS must be an integer, got {raw!r}") from None


def parallel_map(fn: Callable, items: Sequence) -> list:
    """``[fn(x) for x in items]`` with up to :func:`worker_count` threads, order preserved."""
    workers = worker_count()
    if workers == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
