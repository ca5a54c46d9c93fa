"""Drifted random walk on the magnifier graph and its closed-form spectrum."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .graph import ARCS, Arc, SitePosition, Vertex, lifted_endpoints

RECURRENCE_TOL = 1e-12

# row/column order of the 3x3 vertex-space matrices
VERTEX_ORDER = (Vertex.R, Vertex.S, Vertex.T)
_VIDX = {v: i for i, v in enumerate(VERTEX_ORDER)}


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class RWParams:
    """Transition parameters ``(p, q, r)``, each strictly inside (0, 1)."""

    p: float
    q: float
    r: float

    def __post_init__(self):
        for name in ("p", "q", "r"):
            val = getattr(self, name)
            if not (isinstance(val, (int, float)) and 0.0 < val < 1.0):
                raise ValueError(f"{name}={val!r} violates 0 < {name} < 1")
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "q", float(self.q))
        object.__setattr__(self, "r", float(self.r))

    def swapped(self) -> "RWParams":
        return RWParams(self.q, self.p, self.r)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.p, self.q, self.r)


GROVER = RWParams(0.5, 0.5, 2.0 / 3.0)


@dataclass(frozen=True)
class SpectralParams:
    a: float
    b: float
    lambda0: float
    lambda1: float
    theta0: float
    theta1: float
    kappa: float
    params: RWParams = field(repr=False)

    @property
    def alpha(self) -> float:
        """lambda1 squared."""
        return self.a + self.b

    @property
    def beta(self) -> float:
        """lambda0 squared."""
        return self.a - self.b

    def as_dict(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "lambda0": self.lambda0,
            "lambda1": self.lambda1,
            "theta0": self.theta0,
            "theta1": self.theta1,
            "kappa": self.kappa,
        }


def transition_prob(params: RWParams, arc: Arc) -> float:
    p, q, r = params.as_tuple()
    return {
        Arc.E0: 1.0 - r,
        Arc.E_PLUS: r * p,
        Arc.E_MINUS: r * (1.0 - p),
        Arc.E0_BAR: 1.0,
        Arc.E_PLUS_BAR: q,
        Arc.E_MINUS_BAR: 1.0 - q,
    }[Arc(arc)]


def transition_probs(params: RWParams) -> np.ndarray:
    """All six arc probabilities in storage order."""
    return np.array([transition_prob(params, a) for a in ARCS])


def reversible_measure(params: RWParams, cell: int, vertex: Vertex) -> float:
    p, q, r = params.as_tuple()
    m_s = (p * (1.0 - q) / ((1.0 - p) * q)) ** cell
    if vertex is Vertex.S:
        return m_s
    if vertex is Vertex.T:
        return r * p / q * m_s
    if vertex is Vertex.R:
        return (1.0 - r) * m_s
    raise ValueError(f"unknown vertex {vertex!r}")


def twisted_matrix(params: RWParams, k: float) -> np.ndarray:
    """Fourier fiber ``J_k`` of the symmetrized transition operator, rows (R, S, T)."""
    p, q, r = params.as_tuple()
    st = math.sqrt(r * (1 - p) * (1 - q)) * np.exp(1j * k) + math.sqrt(r * p * q)
    rs = math.sqrt(1 - r)
    return np.array(
        [[0, rs, 0],
         [rs, 0, st],
         [0, np.conj(st), 0]],
        dtype=complex,
    )


def twisted_eigenvalues(params: RWParams, k) -> np.ndarray:
    """Closed form ``{-sqrt(a + b cos k), 0, +sqrt(a + b cos k)}``, ascending."""
    sp = spectral_params(params)
    lam = np.sqrt(sp.a + sp.b * np.cos(np.asarray(k, dtype=float)))
    return np.stack([-lam, np.zeros_like(lam), lam], axis=-1)


def spectral_params(params: RWParams) -> SpectralParams:
    p, q, r = params.as_tuple()
    a = 1.0 - r * (p * (1 - q) + q * (1 - p))
    b = 2.0 * r * math.sqrt(p * q * (1 - p) * (1 - q))
    lam1 = math.sqrt(min(a + b, 1.0))
    lam0 = math.sqrt(a - b)
    th0, th1 = math.acos(lam0), math.acos(lam1)
    return SpectralParams(
        a=a, b=b, lambda0=lam0, lambda1=lam1,
        theta0=th0, theta1=th1, kappa=0.5 * math.sin(th0 - th1),
        params=params,
    )


def is_recurrent(params: RWParams, tol: float = RECURRENCE_TOL) -> bool:
    return abs(params.p - params.q) < tol


def symmetrized_operator(params: RWParams, window: tuple[int, int]) -> sparse.csr_matrix:
    """Real-space ``J`` restricted to the vertices of ``window`` (cell-major, R,S,T)."""
    jmin, jmax = window
    ncell = jmax - jmin + 1
    probs = {a: transition_prob(params, a) for a in ARCS}
    rows, cols, vals = [], [], []
    for j in range(jmin, jmax + 1):
        for arc in (Arc.E0, Arc.E_PLUS, Arc.E_MINUS):
            (jo, vo), (jt, vt) = lifted_endpoints(SitePosition(j, arc))
            if not jmin <= jt <= jmax:
                continue
            w = math.sqrt(probs[arc] * probs[Arc((arc + 3) % 6)])
            io = 3 * (jo - jmin) + _VIDX[vo]
            it = 3 * (jt - jmin) + _VIDX[vt]
            rows += [io, it]
            cols += [it, io]
            vals += [w, w]
    n = 3 * ncell
    return sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))


def rw_power_iterate(params: RWParams, window: tuple[int, int] = (-200, 200),
                     steps: int = 2000, tol: float = 1e-10) -> float:
    """Power-method estimate of ``sup |spec(J)|`` on a finite window.

    Iterates ``J^2`` from the top Bloch vector of ``J_0`` under a half-sine
    envelope and returns the square root of the Rayleigh quotient.  Raises
    :class:`ConvergenceError` if successive estimates still move by more than
    ``tol`` (relative) after ``steps`` iterations.
    """
    jop = symmetrized_operator(params, window)
    ncell = window[1] - window[0] + 1
    vals, vecs = np.linalg.eigh(twisted_matrix(params, 0.0))
    bloch = np.abs(vecs[:, np.argmax(vals)])
    envelope = np.sin(np.pi * (np.arange(ncell) + 1) / (ncell + 1))
    x = np.kron(envelope, bloch)
    x /= np.linalg.norm(x)
    est = prev = 0.0
    for _ in range(steps):
        y = jop @ (jop @ x)
        est = math.sqrt(max(float(x @ y), 0.0))
        nrm = np.linalg.norm(y)
        if nrm == 0.0:
            return 0.0
        x = y / nrm
        if prev and abs(est - prev) <= tol * est:
            return est
        prev = est
    raise ConvergenceError(
        f"power iteration did not settle within {steps} steps "
        f"(last change {abs(est - prev):.3e}, estimate {est:.12f})"
    )
