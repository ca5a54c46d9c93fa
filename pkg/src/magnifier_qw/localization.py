"""Localized +-i eigenspaces spanned by round-trip path vectors.

For the path ``p_j`` with arcs ``f1 = (j, e0bar)``, ``f2 = (j, e+)``,
``f3 = (j, e-bar)``, ``f4 = (j+1, e0)`` the vector

    w(p_j) = sum_m  r_m [ (-i)^(m-1) delta_{f_m} + i^m delta_{rev f_m} ]

satisfies ``U w = i w`` and its complex conjugate ``U conj(w) = -i conj(w)``.
Neighbouring vectors share the arcs of cell ``j+1`` and overlap by
``2 r1 r4``, so projections go through the (tridiagonal) Gram matrix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, sparse

from .graph import Arc, SitePosition, WindowOverflowError, flat_index, lifted_reverse, window_size
from .rw import RWParams
from .spectral import boundary_ops, coin_operator, twisted_shift, zero_eigenvector
from .szegedy import (
    Distribution,
    InitialEnsemble,
    MIXED,
    StateVector,
    _step_array,
    ensemble_history,
)

EIGEN_TOL = 1e-12
ORTHO_TOL = 1e-12

_PATH = ((0, Arc.E0_BAR), (0, Arc.E_PLUS), (0, Arc.E_MINUS_BAR), (1, Arc.E0))


def path_weights(params: RWParams) -> np.ndarray:
    """``(r1, r2, r3, r4)``."""
    p, q, r = params.as_tuple()
    return np.sqrt([r * p * q, q * (1 - r), (1 - r) * (1 - q), (1 - q) * (1 - p) * r])


def round_trip_norm2(params: RWParams) -> float:
    p, q, r = params.as_tuple()
    return 2.0 * ((1 - r) + r * (p * q + (1 - p) * (1 - q)))


def neighbour_overlap(params: RWParams) -> float:
    """``<w(p_j), w(p_{j+1})>``, real and positive."""
    rm = path_weights(params)
    return 2.0 * rm[0] * rm[3]


@dataclass(frozen=True)
class RoundTripVector:
    cell: int
    entries: dict  # SitePosition -> complex

    def conj(self) -> "RoundTripVector":
        return RoundTripVector(self.cell, {s: np.conj(v) for s, v in self.entries.items()})

    def norm2(self) -> float:
        return float(sum(abs(v) ** 2 for v in self.entries.values()))

    def to_state(self, window: tuple[int, int]) -> StateVector:
        state = StateVector.zeros(window)
        for site, val in self.entries.items():
            state.amplitudes.flat[flat_index(site, window)] += val
        return state

    def inner(self, other: "RoundTripVector") -> complex:
        return complex(sum(np.conj(v) * other.entries.get(s, 0.0) for s, v in self.entries.items()))


def _raw_round_trip(params: RWParams, j: int) -> RoundTripVector:
    entries = {}
    for m, ((dj, arc), rm) in enumerate(zip(_PATH, path_weights(params)), start=1):
        site = SitePosition(j + dj, arc)
        entries[site] = rm * (-1j) ** (m - 1)
        entries[lifted_reverse(site)] = rm * (1j) ** m
    return RoundTripVector(j, entries)


def eigen_residual(params: RWParams, vec: RoundTripVector, eigenvalue: complex) -> float:
    """``max |U w - lambda w|`` on a local window around the path."""
    window = (vec.cell - 1, vec.cell + 2)
    amp = vec.to_state(window).amplitudes
    out = _step_array(amp, coin_operator(params))
    return float(np.max(np.abs(out - eigenvalue * amp)))


def round_trip_vector(params: RWParams, j: int, window: tuple[int, int] | None = None,
                      tol: float = EIGEN_TOL) -> RoundTripVector:
    if window is not None and not (window[0] <= j and j + 1 <= window[1]):
        raise WindowOverflowError(f"path p_{j} needs cells {j}..{j + 1} inside {window}")
    vec = _raw_round_trip(params, j)
    res = eigen_residual(params, vec, 1j)
    if res > tol:
        raise RuntimeError(f"round-trip vector fails U w = i w (residual {res:.3e})")
    return vec


def _family_matrix(params: RWParams, window: tuple[int, int]) -> sparse.csr_matrix:
    """Rows are ``w(p_j)`` for every path fully inside ``window``."""
    rows, cols, vals = [], [], []
    js = range(window[0], window[1])
    for row, j in enumerate(js):
        for site, val in _raw_round_trip(params, j).entries.items():
            rows.append(row)
            cols.append(flat_index(site, window))
            vals.append(val)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(len(js), 6 * window_size(window)))


def _banded_solve(diag: float, off: float, rhs: np.ndarray) -> np.ndarray:
    n = rhs.shape[0]
    ab = np.zeros((3, n), dtype=complex)
    ab[0, 1:] = off
    ab[1, :] = diag
    ab[2, :-1] = np.conj(off)
    return linalg.solve_banded((1, 1), ab, rhs)


def decay_rate(params: RWParams) -> float:
    """Per-cell decay of the inverse Gram matrix (a root of ``o t^2 - d t + o``)."""
    d, o = round_trip_norm2(params), neighbour_overlap(params)
    return (d - math.sqrt(d * d - 4 * o * o)) / (2 * o)


def default_pad(params: RWParams, eps: float = 1e-17) -> int:
    return int(math.ceil(math.log(eps) / math.log(decay_rate(params)))) + 2


@dataclass
class LocalizedComponents:
    plus: StateVector
    minus: StateVector
    cross_overlap: float
    joint: bool  # True when L+ and L- were not orthogonal and a joint solve was used


def project_localized(params: RWParams, state: StateVector, pad: int | None = None,
                      ortho_tol: float = ORTHO_TOL) -> LocalizedComponents:
    """Orthogonal projections of ``state`` onto ``L+`` and ``L-``.

    The state is embedded in a window padded by ``pad`` cells so that truncating
    the path family does not bias cells near the support.  Outputs live on the
    original window.
    """
    pad = default_pad(params) if pad is None else pad
    lo, hi = state.window
    big = (lo - pad, hi + pad)
    psi = np.zeros((window_size(big), 6), dtype=complex)
    psi[pad:pad + window_size(state.window)] = state.amplitudes
    psi = psi.ravel()

    wp = _family_matrix(params, big)
    wm = wp.conj()
    cross = abs(wp.conj() @ wm.T).max() if wp.shape[0] else 0.0
    d, o = round_trip_norm2(params), neighbour_overlap(params)
    if cross <= ortho_tol:
        cp = _banded_solve(d, o, wp.conj() @ psi)
        cm = _banded_solve(d, o, wm.conj() @ psi)
        plus, minus, joint = wp.T @ cp, wm.T @ cm, False
    else:
        both = sparse.vstack([wp, wm]).tocsr()
        gram = (both.conj() @ both.T).toarray()
        coef = linalg.solve(gram, both.conj() @ psi, assume_a="her")
        n = wp.shape[0]
        plus, minus, joint = wp.T @ coef[:n], wm.T @ coef[n:], True

    def crop(vec):
        return StateVector(state.window, vec.reshape(-1, 6)[pad:pad + window_size(state.window)])

    return LocalizedComponents(crop(plus), crop(minus), float(cross), joint)


@dataclass
class LocalizationProfile:
    """Asymptotic per-cell mass; ``parity`` is 'even', 'odd' or 'average'."""

    window: tuple[int, int]
    masses: np.ndarray
    parity: str

    @property
    def cells(self) -> np.ndarray:
        return np.arange(self.window[0], self.window[1] + 1)

    def total(self) -> float:
        return float(self.masses.sum())

    def as_distribution(self) -> Distribution:
        return Distribution(self.window, self.masses)


def _profile_from(comp: LocalizedComponents, parity: str) -> np.ndarray:
    a, b = comp.plus.amplitudes, comp.minus.amplitudes
    if parity == "even":
        return np.sum(np.abs(a + b) ** 2, axis=1)
    if parity == "odd":
        return np.sum(np.abs(a - b) ** 2, axis=1)
    if parity == "average":
        return np.sum(np.abs(a) ** 2 + np.abs(b) ** 2, axis=1)
    raise ValueError(f"parity must be 'even', 'odd' or 'average', not {parity!r}")


def localization_profile(params: RWParams, initial: StateVector, parity: str = "average",
                         pad: int | None = None) -> LocalizationProfile:
    """Limit of ``mu_n(j)`` along even or odd ``n`` (or their mean)."""
    comp = project_localized(params, initial, pad=pad)
    return LocalizationProfile(initial.window, _profile_from(comp, parity), parity)


def ensemble_profile(params: RWParams, ensemble: InitialEnsemble = MIXED, radius: int = 20,
                     parity: str = "average", pad: int | None = None) -> LocalizationProfile:
    """Mixture of the per-state profiles over cells ``|j| <= radius``."""
    window = (-radius, radius)
    masses = np.zeros(window_size(window))
    for arc, w in zip(ensemble.arcs, ensemble.weights):
        start = StateVector.basis(SitePosition(0, arc), window)
        masses += w * localization_profile(params, start, parity, pad=pad).masses
    return LocalizationProfile(window, masses, parity)


def time_averaged_distribution(params: RWParams, ensemble: InitialEnsemble, t_lo: int, t_hi: int,
                               window_radius: int) -> Distribution:
    """``(1/(t_hi - t_lo)) sum_{n=t_lo}^{t_hi-1} mu_n(j)`` for ``|j| <= window_radius``."""
    if not t_hi > t_lo >= 0:
        raise ValueError("need t_hi > t_lo >= 0")
    window, hist = ensemble_history(params, ensemble, t_hi - 1)
    avg = hist[t_lo:t_hi].mean(axis=0)
    cells = np.arange(window[0], window[1] + 1)
    keep = np.abs(cells) <= window_radius
    masses = np.zeros(2 * window_radius + 1)
    masses[cells[keep] + window_radius] = avg[keep]
    return Distribution((-window_radius, window_radius), masses)


def fiber_eigenvectors(params: RWParams, ks: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Normalized ``v+-(k) ~ (1 +- i S_k) d_A* f0(k)`` for eigenvalues ``+-i``."""
    _, d_star = boundary_ops(params)
    f0 = np.stack([zero_eigenvector(params, k) for k in ks])
    base = f0 @ d_star.T
    shifted = np.einsum("kab,kb->ka", twisted_shift(ks), base)
    vp = base + 1j * shifted
    vm = base - 1j * shifted
    vp /= np.linalg.norm(vp, axis=1, keepdims=True)
    vm /= np.linalg.norm(vm, axis=1, keepdims=True)
    return vp, vm


def fiber_localized_components(params: RWParams, arc: Arc, cells: np.ndarray,
                               grid: int = 1024) -> tuple[np.ndarray, np.ndarray]:
    """Fourier-side ``Pi_{L+-} delta_(0,arc)`` evaluated on ``cells``.

    Uses ``(Pi psi)(x) = int Pi_{v(k)} psi_hat(k) e^{-ikx} dk/2pi`` with the
    trapezoid rule; independent of the real-space path family.
    """
    ks = 2.0 * np.pi * np.arange(grid) / grid
    vp, vm = fiber_eigenvectors(params, ks)
    phase = np.exp(-1j * np.outer(cells, ks))
    out = []
    for v in (vp, vm):
        fib = v * np.conj(v[:, int(arc)])[:, None]
        out.append(phase @ fib / grid)
    return out[0], out[1]
