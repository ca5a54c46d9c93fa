"""Exact real-space evolution on a finite cell window and its Fourier-side twin."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import ARCS, Arc, SitePosition, WindowOverflowError, flat_index, window_size
from .rw import RWParams
from .spectral import coin_operator, twisted_unitary_stack

NORM_TOL = 1e-10


class QuadratureError(RuntimeError):
    pass


@dataclass
class StateVector:
    """Amplitudes over ``window = (jmin, jmax)``, stored as ``(cells, 6)``."""

    window: tuple[int, int]
    amplitudes: np.ndarray

    def __post_init__(self):
        self.window = (int(self.window[0]), int(self.window[1]))
        amp = np.asarray(self.amplitudes, dtype=complex)
        shape = (window_size(self.window), 6)
        if amp.shape != shape:
            amp = amp.reshape(shape)
        self.amplitudes = amp

    @classmethod
    def zeros(cls, window: tuple[int, int]) -> "StateVector":
        return cls(window, np.zeros((window_size(window), 6), dtype=complex))

    @classmethod
    def basis(cls, site: SitePosition, window: tuple[int, int]) -> "StateVector":
        state = cls.zeros(window)
        state.amplitudes.flat[flat_index(site, window)] = 1.0
        return state

    @property
    def cells(self) -> np.ndarray:
        return np.arange(self.window[0], self.window[1] + 1)

    def flat(self) -> np.ndarray:
        return self.amplitudes.ravel()

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def __getitem__(self, site: SitePosition) -> complex:
        return self.amplitudes.flat[flat_index(site, self.window)]

    def copy(self) -> "StateVector":
        return StateVector(self.window, self.amplitudes.copy())


@dataclass
class Distribution:
    """Probability mass per cell on ``window``."""

    window: tuple[int, int]
    masses: np.ndarray

    @property
    def cells(self) -> np.ndarray:
        return np.arange(self.window[0], self.window[1] + 1)

    def total(self) -> float:
        return float(self.masses.sum())

    def __getitem__(self, cell: int) -> float:
        if not self.window[0] <= cell <= self.window[1]:
            return 0.0
        return float(self.masses[cell - self.window[0]])

    def as_dict(self, eps: float = 0.0) -> dict[int, float]:
        return {int(j): float(m) for j, m in zip(self.cells, self.masses) if m > eps}


@dataclass(frozen=True)
class InitialEnsemble:
    """Classical mixture of basis states at cell 0."""

    arcs: tuple[Arc, ...] = ARCS
    weights: tuple[float, ...] = field(default=(1.0 / 6,) * 6)

    def __post_init__(self):
        if len(self.arcs) != len(self.weights):
            raise ValueError("arcs and weights differ in length")
        if abs(sum(self.weights) - 1.0) > 1e-12:
            raise ValueError("ensemble weights must sum to 1")


MIXED = InitialEnsemble()


def default_window(steps: int, center: int = 0) -> tuple[int, int]:
    return (center - steps - 2, center + steps + 2)


def _check_margin(amp: np.ndarray, window) -> None:
    # amp has shape (..., cells, 6); the edge cells must be empty before a step
    if np.any(amp[..., 0, :]) or np.any(amp[..., -1, :]):
        raise WindowOverflowError(
            f"state reaches the boundary of window [{window[0]}, {window[1]}]; "
            "enlarge the window radius"
        )


def _step_array(amp: np.ndarray, coin: np.ndarray) -> np.ndarray:
    """Reverse every arc (with the e-/e-bar cell shift), then apply the coin."""
    out = np.zeros_like(amp)
    out[..., Arc.E0] = amp[..., Arc.E0_BAR]
    out[..., Arc.E0_BAR] = amp[..., Arc.E0]
    out[..., Arc.E_PLUS] = amp[..., Arc.E_PLUS_BAR]
    out[..., Arc.E_PLUS_BAR] = amp[..., Arc.E_PLUS]
    out[..., 1:, Arc.E_MINUS] = amp[..., :-1, Arc.E_MINUS_BAR]
    out[..., :-1, Arc.E_MINUS_BAR] = amp[..., 1:, Arc.E_MINUS]
    return out @ coin.T


def step(params: RWParams, state: StateVector, coin: np.ndarray | None = None) -> StateVector:
    coin = coin_operator(params) if coin is None else coin
    _check_margin(state.amplitudes, state.window)
    return StateVector(state.window, _step_array(state.amplitudes, coin))


def evolve(params: RWParams, state: StateVector, n: int, coin: np.ndarray | None = None) -> StateVector:
    if n < 0:
        raise ValueError("number of steps must be nonnegative")
    coin = coin_operator(params) if coin is None else coin
    amp = state.amplitudes.copy()
    for _ in range(n):
        _check_margin(amp, state.window)
        amp = _step_array(amp, coin)
    return StateVector(state.window, amp)


def distribution(state: StateVector) -> Distribution:
    return Distribution(state.window, np.sum(np.abs(state.amplitudes) ** 2, axis=1))


def _ensemble_start(ensemble: InitialEnsemble, window) -> np.ndarray:
    amp = np.zeros((len(ensemble.arcs), window_size(window), 6), dtype=complex)
    for i, arc in enumerate(ensemble.arcs):
        amp[i, -window[0], arc] = 1.0
    return amp


def ensemble_history(params: RWParams, ensemble: InitialEnsemble, n: int,
                     window: tuple[int, int] | None = None,
                     coin: np.ndarray | None = None) -> tuple[tuple[int, int], np.ndarray]:
    """Mixture distributions ``mu_t`` for ``t = 0..n`` as an ``(n+1, cells)`` array."""
    window = default_window(n) if window is None else window
    if not window[0] < 0 < window[1]:
        raise WindowOverflowError(f"window {window} must contain cell 0 in its interior")
    coin = coin_operator(params) if coin is None else coin
    weights = np.asarray(ensemble.weights)
    amp = _ensemble_start(ensemble, window)
    out = np.empty((n + 1, window_size(window)))
    for t in range(n + 1):
        out[t] = np.einsum("i,icj->c", weights, np.abs(amp) ** 2)
        if t < n:
            _check_margin(amp, window)
            amp = _step_array(amp, coin)
    return window, out


def ensemble_distribution(params: RWParams, ensemble: InitialEnsemble = MIXED, n: int = 0,
                          window: tuple[int, int] | None = None) -> Distribution:
    """Weighted average of the per-state distributions (a classical mixture)."""
    window = default_window(n) if window is None else window
    coin = coin_operator(params)
    weights = np.asarray(ensemble.weights)
    amp = _ensemble_start(ensemble, window)
    for _ in range(n):
        _check_margin(amp, window)
        amp = _step_array(amp, coin)
    return Distribution(window, np.einsum("i,icj->c", weights, np.abs(amp) ** 2))


def moments(dist: Distribution, order: int) -> float:
    j = dist.cells.astype(float)
    return float(np.sum(j**order * dist.masses))


def char_fn(dist: Distribution, xi: float) -> complex:
    return complex(np.sum(np.exp(1j * xi * dist.cells) * dist.masses))


def _fiber_char_fn(params, ensemble, n, xi, grid):
    ks = 2.0 * np.pi * np.arange(grid) / grid
    u0 = twisted_unitary_stack(params, ks)
    u1 = twisted_unitary_stack(params, ks + xi)
    p0 = np.broadcast_to(np.eye(6, dtype=complex), u0.shape).copy()
    p1 = p0.copy()
    for _ in range(n):
        p0 = u0 @ p0
        p1 = u1 @ p1
    idx = [int(a) for a in ensemble.arcs]
    # <U_k^n d_e, U_{k+xi}^n d_e> for each start arc e
    diag = np.einsum("kae,kae->ke", p0[:, :, idx].conj(), p1[:, :, idx])
    return complex(np.mean(diag @ np.asarray(ensemble.weights)))


def fourier_char_fn(params: RWParams, ensemble: InitialEnsemble, n: int, xi: float,
                    grid: int = 4096, tol: float = 1e-8) -> complex:
    """``E[exp(i xi X_n)]`` from the k-integral over Fourier fibers (trapezoid rule).

    The integral is also evaluated on half the grid; a disagreement above
    ``tol`` raises :class:`QuadratureError`.
    """
    if grid < 16 or grid & (grid - 1):
        raise ValueError("quadrature grid must be a power of two >= 16")
    fine = _fiber_char_fn(params, ensemble, n, xi, grid)
    coarse = _fiber_char_fn(params, ensemble, n, xi, grid // 2)
    if abs(fine - coarse) > tol:
        raise QuadratureError(
            f"k-grid of {grid} points unresolved (change {abs(fine - coarse):.3e}); use a finer grid"
        )
    return fine
