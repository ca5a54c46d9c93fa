"""Weak limit of ``X_n / n`` under the mixed initial state.

The limit is an atom of mass 1/3 at the origin plus a continuous part of mass
2/3.  The continuous part is the law of the group velocity ``nu'(K)`` with
``K`` uniform on the circle.  Writing ``x = nu'(k)``, ``cos 2nu(k)`` takes one
of the two values ``h+-(x)`` and the Jacobian on each branch is

    1 / |nu''| = 2 sqrt(H+-(x)) / ((1 - 4x^2) sqrt(phi(x))).

Splitting each branch against the single-wave shape
``2 lambda0 / ((1 - 4x^2) sqrt(u(x)))`` gives the weights ``gamma+-``; in the
recurrent case ``gamma+ = 1``, ``gamma- = 0`` and the law reduces to a
rescaled Konno density.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate

from .rw import RWParams, SpectralParams, is_recurrent, spectral_params
from .szegedy import Distribution

ATOM_MASS = 1.0 / 3.0
CONTINUOUS_MASS = 2.0 / 3.0
R_UPPER_GUARD = 1e-9
NEG_TOL = 1e-12


class LimitDomainError(ValueError):
    pass


def _arr(x):
    return np.asarray(x, dtype=float)


def konno_density(x, kappa: float):
    """``sqrt(1 - kappa^2) / (pi (1 - x^2) sqrt(kappa^2 - x^2))`` on ``(-kappa, kappa)``."""
    if not 0.0 < kappa < 1.0:
        raise LimitDomainError(f"kappa={kappa} must lie in (0, 1)")
    x = _arr(x)
    if np.any(np.abs(x) == kappa):
        raise LimitDomainError(f"Konno density is singular at |x| = kappa = {kappa}")
    inside = np.abs(x) < kappa
    xi = np.where(inside, x, 0.0)
    val = math.sqrt(1 - kappa**2) / (np.pi * (1 - xi**2) * np.sqrt(kappa**2 - xi**2))
    out = np.where(inside, val, 0.0)
    return out if out.ndim else float(out)


def konno_cdf(x, kappa: float):
    """Closed-form CDF of the Konno density."""
    x = np.clip(_arr(x), -kappa, kappa)
    s = math.sqrt(1 - kappa**2)
    # d/dx arctan(s x / sqrt(k^2 - x^2)) = s k^2 / ((k^2 - (1 - s^2) x^2)... ) = pi * density
    t = np.arctan2(s * x, np.sqrt(kappa**2 - x**2))
    out = 0.5 + t / np.pi
    return out if out.ndim else float(out)


def phi(x, lam1: float, lam0: float):
    al, be = lam1**2, lam0**2
    x = _arr(x)
    return 16 * x**4 - 8 * (al * (1 - be) + be * (1 - al)) * x**2 + (al - be) ** 2


def _phi_roots(lam1, lam0):
    """Roots ``y1 <= y2`` of ``phi`` as a quadratic in ``y = x^2``."""
    al, be = lam1**2, lam0**2
    c = al * (1 - be) + be * (1 - al)
    disc = max(c * c - (al - be) ** 2, 0.0)
    # product y1 y2 = (al - be)^2 / 16; take the large root first for stability
    y2 = (c + math.sqrt(disc)) / 4
    y1 = (al - be) ** 2 / (16 * y2) if y2 > 0 else 0.0
    return y1, y2


def _sqrt_phi(x, lam1, lam0):
    x = _arr(x)
    ph = phi(x, lam1, lam0)
    if np.any(ph < -NEG_TOL):
        raise LimitDomainError("phi(x) < 0: x lies outside the support")
    y1, y2 = _phi_roots(lam1, lam0)
    x2 = x**2
    return 4 * np.sqrt(np.maximum((y1 - x2) * (y2 - x2), 0.0))


def h_branches(x, lam1: float, lam0: float, tol: float = 1e-9):
    """The two solutions ``cos 2nu = h+-(x)`` of ``f(cos 2nu) = x^2``."""
    al, be = lam1**2, lam0**2
    x = _arr(x)
    if np.any(np.isclose(4 * x**2, 1.0)):
        raise LimitDomainError("4x^2 = 1")
    s = _sqrt_phi(x, lam1, lam0)
    num = 1 - (al + be)
    hp = (num + s) / (4 * x**2 - 1)
    hm = (num - s) / (4 * x**2 - 1)
    lo, hi = 2 * be - 1 - tol, 2 * al - 1 + tol
    for h in (hp, hm):
        if np.any((h < lo) | (h > hi)):
            raise LimitDomainError("branch of cos 2nu outside [2 lambda0^2 - 1, 2 lambda1^2 - 1]")
    return hp, hm


def higuchi_f(t, lam1: float, lam0: float):
    """``x^2`` as a function of ``t = cos 2nu``."""
    al, be = lam1**2, lam0**2
    t = _arr(t)
    return 0.25 * (1 - 2 * al + t) * (1 - 2 * be + t) / (t**2 - 1)


def big_h(x, lam1: float, lam0: float, sign: int):
    """``H+-(x)``.  The branch whose two terms cancel is taken from the product
    ``H+ H- = 16 alpha beta (1 - alpha)(1 - beta)(1 - 4x^2)^2``."""
    al, be = lam1**2, lam0**2
    x = _arr(x)
    s = _sqrt_phi(x, lam1, lam0)
    base = 8 * (-1 + (1 - al) * be + (1 - be) * al) * x**2 + 2 * (al * (1 - al) + be * (1 - be))
    lead = np.sign(al + be - 1) or 1.0
    big = base + 2 * abs(al + be - 1) * s
    if sign == lead:
        val = big
    else:
        prod = 16 * al * be * (1 - al) * (1 - be) * (1 - 4 * x**2) ** 2
        val = np.divide(prod, big, out=np.zeros_like(big), where=big > 0)
    if np.any(val < -NEG_TOL):
        raise LimitDomainError("H(x) < 0")
    return val


def branch_jacobian(x, lam1: float, lam0: float, sign: int):
    """``1 / |nu''|`` on branch ``sign``: ``2 sqrt(H) / ((1 - 4x^2) sqrt(phi))``."""
    x = _arr(x)
    h = np.maximum(big_h(x, lam1, lam0, sign), 0.0)
    return 2.0 * np.sqrt(h) / ((1 - 4 * x**2) * _sqrt_phi(x, lam1, lam0))


def u_fn(x, lam0: float):
    return (1 - lam0**2) - 4 * _arr(x) ** 2


def eta_fn(x, lam1: float, lam0: float):
    al, be = lam1**2, lam0**2
    return 8 * (1 - 2 * be) * _arr(x) ** 2 - (1 + al - 2 * be)


def zeta_fn(x, lam1: float, lam0: float, sign: int):
    al, be = lam1**2, lam0**2
    return 4 * (2 * be - 1) * _arr(x) ** 2 + al + sign * _sqrt_phi(x, lam1, lam0)


def wave_prefactor(x, lam0: float):
    """Single-wave shape ``2 lambda0 / ((1 - 4x^2) sqrt(u(x)))``; equals ``2 pi f_K(2x; sqrt(1 - lambda0^2))``."""
    x = _arr(x)
    u = u_fn(x, lam0)
    if np.any(u <= 0):
        raise LimitDomainError("u(x) = (1 - lambda0^2) - 4x^2 vanishes inside the support")
    return 2 * lam0 / ((1 - 4 * x**2) * np.sqrt(u))


def gamma_weights(x, lam1: float, lam0: float, sign: int):
    """Branch weight ``gamma+-(x) = sqrt(u H+-) / (2 lambda0 sqrt(phi))``.

    ``(gamma+ + gamma-) * wave_prefactor`` reproduces half the branch-summed
    Jacobian; ``gamma+ = 1`` and ``gamma- = 0`` exactly when ``lambda1 = 1``.
    """
    x = _arr(x)
    u = u_fn(x, lam0)
    if np.any(u <= 0):
        raise LimitDomainError("u(x) = (1 - lambda0^2) - 4x^2 vanishes inside the support")
    h = np.maximum(big_h(x, lam1, lam0, sign), 0.0)
    return np.sqrt(u * h) / (2 * lam0 * _sqrt_phi(x, lam1, lam0))


def _theta_integral(fn, lo: float, hi: float) -> float:
    """Adaptive quadrature of a smooth integrand in the angle variable."""
    val, _ = integrate.quad(fn, lo, hi, epsabs=1e-14, epsrel=1e-12, limit=200)
    return val


@dataclass
class LimitLaw:
    """Atom at 0 plus continuous density on ``(-kappa, kappa)``.

    ``calibration`` is the constant ``c`` making ``c * sum_branches 1/|nu''|``
    a probability density; it is fitted by quadrature (its exact value is
    ``1/(2 pi)``, the uniform measure on the k-circle).
    """

    params: RWParams
    atom_mass: float = ATOM_MASS
    spectral: SpectralParams = field(init=False)

    def __post_init__(self):
        if self.params.r > 1 - R_UPPER_GUARD:
            raise LimitDomainError("the weak limit requires 0 < r < 1")
        self.spectral = spectral_params(self.params)

    @property
    def kappa(self) -> float:
        return self.spectral.kappa

    @property
    def recurrent(self) -> bool:
        return is_recurrent(self.params)

    @property
    def lam(self) -> tuple[float, float]:
        return self.spectral.lambda1, self.spectral.lambda0

    def jacobian_sum(self, x):
        lam1, lam0 = self.lam
        return branch_jacobian(x, lam1, lam0, +1) + branch_jacobian(x, lam1, lam0, -1)

    @cached_property
    def calibration(self) -> float:
        total = _theta_integral(self._jacobian_theta, -math.pi / 2, math.pi / 2)
        return 1.0 / total

    def _jacobian_theta(self, t):
        """``sum_branches 1/|nu''|`` at ``x = kappa sin t``, times ``dx/dt``.

        ``y1 = kappa^2`` is a root of ``phi``, so the ``kappa cos t`` from
        ``dx/dt`` cancels the ``sqrt(kappa^2 - x^2)`` in ``sqrt(phi)`` and the
        result is smooth on the closed interval.
        """
        lam1, lam0 = self.lam
        x = self.kappa * np.sin(_arr(t))
        if self.recurrent:
            # H+ = 16 lambda0^2 (kappa^2 - x^2) and H- = 0 exactly
            out = 2 * lam0 / (1 - 4 * x * x)
        else:
            _, y2 = _phi_roots(lam1, lam0)
            rest = 4 * np.sqrt(np.maximum(y2 - x * x, 0.0))
            num = sum(2 * np.sqrt(np.maximum(big_h(x, lam1, lam0, sgn), 0.0)) for sgn in (1, -1))
            out = num / ((1 - 4 * x * x) * rest)
        return out if np.ndim(out) else float(out)

    def _check_open(self, x):
        x = _arr(x)
        if np.any(np.abs(x) == self.kappa):
            raise LimitDomainError(f"density is singular at |x| = kappa = {self.kappa}")
        return x

    def density(self, x):
        """Continuous part (total mass 2/3); zero outside ``(-kappa, kappa)``."""
        x = self._check_open(x)
        inside = np.abs(x) < self.kappa
        xi = np.where(inside, x, 0.0)
        val = CONTINUOUS_MASS * self.calibration * self.jacobian_sum(xi)
        out = np.where(inside, val, 0.0)
        return out if out.ndim else float(out)

    def wave(self, x, sign: int):
        """Branch ``sign`` of the density; ``sign=-1`` is the transient-only wave."""
        x = self._check_open(x)
        lam1, lam0 = self.lam
        inside = np.abs(x) < self.kappa
        xi = np.where(inside, x, 0.0)
        val = (CONTINUOUS_MASS * 2 * self.calibration
               * gamma_weights(xi, lam1, lam0, sign) * wave_prefactor(xi, lam0))
        out = np.where(inside, val, 0.0)
        return out if out.ndim else float(out)

    def gamma(self, x, sign: int):
        lam1, lam0 = self.lam
        return gamma_weights(x, lam1, lam0, sign)

    def continuous_cdf(self, x, panels: int = 64, order: int = 24):
        """``int_{-inf}^x density`` by composite Gauss-Legendre in the angle variable."""
        x = _arr(x)
        theta = np.arcsin(np.clip(x.ravel() / self.kappa, -1.0, 1.0))
        brk = np.union1d(np.linspace(-np.pi / 2, np.pi / 2, panels + 1), theta)
        nodes, weights = np.polynomial.legendre.leggauss(order)
        lo, hi = brk[:-1], brk[1:]
        mid, half = (lo + hi) / 2, (hi - lo) / 2
        pts = mid[:, None] + half[:, None] * nodes[None, :]
        vals = self._jacobian_theta(pts.ravel()).reshape(pts.shape)
        piece = half * (vals @ weights)
        cum = np.concatenate([[0.0], np.cumsum(piece)])
        out = CONTINUOUS_MASS * self.calibration * cum[np.searchsorted(brk, theta)]
        out = out.reshape(x.shape)
        return out if out.ndim else float(out)

    def cdf(self, x):
        x = _arr(x)
        out = self.continuous_cdf(x) + self.atom_mass * (x >= 0)
        return out if np.ndim(out) else float(out)

    def pushforward_cdf(self, x):
        """Closed-form CDF via the k-arcs where ``nu'(k) > |x|`` (branch roots)."""
        sp = self.spectral
        lam1, lam0 = self.lam
        x = _arr(x)
        ax = np.minimum(np.abs(x), self.kappa * (1 - 1e-15))
        hp, hm = h_branches(ax, lam1, lam0)
        kk = [np.arccos(np.clip(((h + 1) / 2 - sp.a) / sp.b, -1.0, 1.0)) for h in (hp, hm)]
        above = np.abs(kk[0] - kk[1]) / (2 * np.pi)  # P(nu'(K) > |x|)
        above = np.where(np.abs(x) >= self.kappa, 0.0, above)
        cont = np.where(x >= 0, 1.0 - above, above)
        out = CONTINUOUS_MASS * cont + self.atom_mass * (x >= 0)
        return out if out.ndim else float(out)

    def metadata(self) -> dict:
        meta = {"p": self.params.p, "q": self.params.q, "r": self.params.r}
        meta.update(self.spectral.as_dict())
        meta.update({"atom_mass": self.atom_mass, "calibration_constant": self.calibration,
                     "recurrent": is_recurrent(self.params)})
        return meta


def continuous_density(x, params: RWParams):
    return LimitLaw(params).density(x)


def transient_wave(x, params: RWParams):
    return LimitLaw(params).wave(x, -1)


def limit_cdf(x, params: RWParams):
    return LimitLaw(params).cdf(x)


@dataclass(frozen=True)
class KSReport:
    distance: float        # sup over continuity points away from the atom
    distance_all: float    # sup over every rescaled grid point
    argmax: float
    atom_radius: int


def ks_distance(dist: Distribution, n: int, law: LimitLaw | RWParams,
                atom_radius: int = 20) -> KSReport:
    """Kolmogorov distance between the law of ``X_n / n`` and the limit law.

    The empirical CDF is compared at the cell midpoints ``(j + 1/2) / n``.  The
    atom at 0 occupies a fixed number of lattice cells, so points within
    ``atom_radius`` cells of the origin are not continuity points at any finite
    ``n``; ``distance`` skips them while ``distance_all`` keeps them.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    law = law if isinstance(law, LimitLaw) else LimitLaw(law)
    cells = dist.cells
    emp = np.cumsum(dist.masses)
    x = (cells + 0.5) / n
    diff = np.abs(emp - law.cdf(x))
    keep = np.abs(cells + 0.5) > atom_radius
    far = diff[keep]
    i = int(np.argmax(np.where(keep, diff, -1.0)))
    return KSReport(float(far.max()) if far.size else 0.0, float(diff.max()), float(x[i]), atom_radius)


def pseudo_velocity_empirical(dist: Distribution, n: int, epsilon: float = 1e-3) -> float:
    """Smallest grid ``x = m/n`` with ``P(|X_n / n| < x) >= 1 - epsilon``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    cells = dist.cells
    radius = int(np.max(np.abs(cells))) + 1
    inside = np.zeros(radius + 2)
    np.add.at(inside, np.abs(cells), dist.masses)
    # P(|X| < m) = sum_{|j| <= m-1}
    below = np.concatenate([[0.0], np.cumsum(inside)])
    m = int(np.argmax(below >= 1 - epsilon))
    return m / n
