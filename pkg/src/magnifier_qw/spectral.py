"""Fourier-fiber operators of the walk: coin, twisted shift and the band function.

The real-space walk reverses every arc and then scatters at the new origin
vertex, ``U = C R``.  On the fiber over ``k`` this becomes ``U_k = C S_k`` with
``(S_k psi)(e) = exp(-i theta(e)) psi(reverse(e))`` and the one-form ``theta``
supported on the cell-crossing arcs e- (``-k``) and e-bar (``+k``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import ARCS, Arc, Vertex, out_arcs, reverse
from .rw import VERTEX_ORDER, RWParams, spectral_params, transition_probs, twisted_matrix

BAND_EDGE_TOL = 1e-8
EIGEN_TOL = 1e-10


class BandEdgeError(ValueError):
    pass


def one_form(k: float) -> np.ndarray:
    """theta(e) for each arc in storage order."""
    theta = np.zeros(6)
    theta[Arc.E_MINUS] = -k
    theta[Arc.E_MINUS_BAR] = k
    return theta


def coin_operator(params: RWParams) -> np.ndarray:
    """Block reflection ``2 v v^T - 1`` per origin vertex, ``v = sqrt(p(e))``."""
    probs = transition_probs(params)
    coin = np.zeros((6, 6))
    for vertex in VERTEX_ORDER:
        idx = [int(a) for a in out_arcs(vertex)]
        v = np.sqrt(probs[idx])
        coin[np.ix_(idx, idx)] = 2.0 * np.outer(v, v) - np.eye(len(idx))
    return coin


def coin_block(params: RWParams, vertex: Vertex) -> np.ndarray:
    idx = [int(a) for a in out_arcs(vertex)]
    return coin_operator(params)[np.ix_(idx, idx)]


def twisted_shift(k) -> np.ndarray:
    """Phase-weighted arc reversal; accepts a scalar or an array of ``k``."""
    k = np.asarray(k, dtype=float)
    out = np.zeros(k.shape + (6, 6), dtype=complex)
    for arc in ARCS:
        phase = np.exp(-1j * one_form(1.0)[arc] * k)
        out[..., arc, reverse(arc)] = phase
    return out


@dataclass(frozen=True)
class TwistedUnitary:
    k: float
    matrix: np.ndarray


def twisted_szegedy_unitary(params: RWParams, k: float) -> TwistedUnitary:
    return TwistedUnitary(float(k), coin_operator(params) @ twisted_shift(k))


def twisted_unitary_stack(params: RWParams, ks: np.ndarray, coin: np.ndarray | None = None) -> np.ndarray:
    """``U_k`` for every k in ``ks``, shape ``(len(ks), 6, 6)``."""
    coin = coin_operator(params) if coin is None else coin
    return coin @ twisted_shift(ks)


def phi_qw(z):
    """``(z + 1/z) / 2``."""
    return 0.5 * (z + 1.0 / z)


def expected_unitary_spectrum(params: RWParams, k: float) -> np.ndarray:
    nu = Band(params).nu(k)
    return np.array([1j, -1j, np.exp(1j * nu), np.exp(-1j * nu),
                     -np.exp(1j * nu), -np.exp(-1j * nu)])


def _match_sets(found: np.ndarray, expected: np.ndarray) -> float:
    """Largest distance in an optimal one-to-one pairing of two small sets."""
    from scipy.optimize import linear_sum_assignment

    cost = np.abs(found[:, None] - expected[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


@dataclass(frozen=True)
class SpectralMapReport:
    passed: bool
    max_deviation: float
    unitary_deviation: float
    mapped_deviation: float


def spectral_map_check(params: RWParams, k: float, tol: float = EIGEN_TOL) -> SpectralMapReport:
    """Compare ``spec(U_k)`` against its predicted lift and against ``spec(J_k)``.

    Eigenvalues of ``U_k`` are pushed through ``phi_qw`` (real part on the unit
    circle) and paired with ``spec(J_k)``, each value taken twice.
    """
    try:
        evals = np.linalg.eigvals(twisted_szegedy_unitary(params, k).matrix)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigensolver failed at k={k}") from exc
    dev_u = _match_sets(evals, expected_unitary_spectrum(params, k))
    mapped = phi_qw(evals).real
    jvals = np.linalg.eigvalsh(twisted_matrix(params, k))
    dev_j = _match_sets(np.sort(mapped), np.sort(np.repeat(jvals, 2)))
    dev = max(dev_u, dev_j)
    return SpectralMapReport(dev < tol, dev, dev_u, dev_j)


def boundary_ops(params: RWParams) -> tuple[np.ndarray, np.ndarray]:
    """``d_A`` (3x6) and its adjoint ``d_A*`` (6x3)."""
    probs = transition_probs(params)
    d_a = np.zeros((3, 6))
    for i, vertex in enumerate(VERTEX_ORDER):
        for arc in out_arcs(vertex):
            d_a[i, arc] = math.sqrt(probs[arc])
    return d_a, d_a.T.copy()


def zero_eigenvector(params: RWParams, k: float) -> np.ndarray:
    """Kernel vector of ``J_k`` (unnormalized), components (R, S, T)."""
    p, q, r = params.as_tuple()
    return np.array([
        math.sqrt((1 - p) * (1 - q) * r) * np.exp(1j * k) + math.sqrt(r * p * q),
        0.0,
        -math.sqrt(1 - r),
    ], dtype=complex)


def lift_eigenvector(params: RWParams, k: float, f: np.ndarray, nu: float,
                     tol: float = EIGEN_TOL) -> np.ndarray:
    """Lift ``J_k f = cos(nu) f`` to ``psi = (1 - e^{-i nu} S_k) d_A* f``.

    The returned vector satisfies ``U_k psi = e^{i nu} psi``; both the input
    and the output relations are checked against ``tol``.
    """
    f = np.asarray(f, dtype=complex)
    if abs(abs(math.cos(nu)) - 1.0) < tol:
        raise ValueError("cos(nu) = +-1 has no lift of this form")
    jk = twisted_matrix(params, k)
    scale = max(np.linalg.norm(f), 1.0)
    if np.linalg.norm(jk @ f - math.cos(nu) * f) > tol * scale:
        raise ValueError(f"f is not an eigenvector of J_k for cos(nu)={math.cos(nu):.6g}")
    _, d_star = boundary_ops(params)
    psi = (np.eye(6) - np.exp(-1j * nu) * twisted_shift(k)) @ (d_star @ f)
    u = twisted_szegedy_unitary(params, k).matrix
    resid = np.linalg.norm(u @ psi - np.exp(1j * nu) * psi)
    if not np.linalg.norm(psi) > 0 or resid > tol * max(np.linalg.norm(psi), 1.0):
        raise RuntimeError(f"lifted vector fails the eigen-relation (residual {resid:.3e})")
    return psi


class Band:
    """``nu(k) = arccos sqrt(a + b cos k)`` with its first two derivatives."""

    def __init__(self, params: RWParams):
        self.params = params
        self.sp = spectral_params(params)

    def nu(self, k):
        sp = self.sp
        return np.arccos(np.sqrt(np.clip(sp.a + sp.b * np.cos(k), 0.0, 1.0)))

    def _sin2nu(self, k):
        s = np.sin(2.0 * self.nu(k))
        if np.any(np.abs(s) <= BAND_EDGE_TOL):
            bad = np.atleast_1d(np.asarray(k, dtype=float))[np.abs(np.atleast_1d(s)) <= BAND_EDGE_TOL]
            raise BandEdgeError(f"sin 2nu(k) vanishes at band edge k={bad[0]:.6g}")
        return s

    def dnu(self, k):
        return self.sp.b * np.sin(k) / self._sin2nu(k)

    def d2nu(self, k):
        s2 = self._sin2nu(k)
        x = self.sp.b * np.sin(k) / s2
        ab = self.sp.alpha + self.sp.beta
        return (1.0 - ab) / (2.0 * s2) + 0.5 * (1.0 - 4.0 * x**2) * np.cos(2.0 * self.nu(k)) / s2

    def max_velocity(self, n: int = 200_001) -> float:
        """Grid estimate of ``sup |nu'(k)|`` over an open k grid."""
        ks = (np.arange(n) + 0.5) / n * 2.0 * np.pi
        return float(np.max(np.abs(self.dnu(ks))))
