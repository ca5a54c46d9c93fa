"""Invariant suites shared by ``magnifier-qw verify`` and the test-suite.

Every check returns a :class:`Check` holding the largest observed deviation
and the tolerance it was held to.  Simulation-backed checks (long horizons)
are only run by :func:`run_suites` when ``full=True``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import ARCS, Arc, SitePosition, flat_index
from .limitlaw import LimitLaw, konno_density, ks_distance, pseudo_velocity_empirical, wave_prefactor
from .localization import (
    _raw_round_trip,
    eigen_residual,
    ensemble_profile,
    neighbour_overlap,
    round_trip_norm2,
    time_averaged_distribution,
)
from .rw import GROVER, RWParams, is_recurrent, spectral_params, twisted_matrix
from .spectral import Band, coin_operator, spectral_map_check
from .szegedy import (
    MIXED,
    StateVector,
    char_fn,
    default_window,
    ensemble_distribution,
    evolve,
    fourier_char_fn,
)

# U delta_(0, arc) for the Grover walk, written out cell by cell
GROVER_RULES = {
    Arc.E0: {(0, Arc.E0_BAR): 1.0},
    Arc.E_PLUS: {(0, Arc.E_MINUS_BAR): 1.0},
    Arc.E_MINUS: {(-1, Arc.E_PLUS_BAR): 1.0},
    Arc.E0_BAR: {(0, Arc.E0): -1 / 3, (0, Arc.E_PLUS): 2 / 3, (0, Arc.E_MINUS): 2 / 3},
    Arc.E_PLUS_BAR: {(0, Arc.E0): 2 / 3, (0, Arc.E_PLUS): -1 / 3, (0, Arc.E_MINUS): 2 / 3},
    Arc.E_MINUS_BAR: {(1, Arc.E0): 2 / 3, (1, Arc.E_PLUS): 2 / 3, (1, Arc.E_MINUS): -1 / 3},
}


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    deviation: float
    tol: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f"  {self.detail}" if self.detail else ""
        return f"{status}  {self.name:<32s} dev={self.deviation:.3e}  tol={self.tol:.1e}{extra}"


def _check(name, dev, tol, detail="", smaller=True) -> Check:
    dev = float(dev)
    ok = dev < tol if smaller else dev > tol
    return Check(name, bool(ok and np.isfinite(dev)), dev, tol, detail)


def random_params(count: int, seed: int = 0, lo: float = 0.05, hi: float = 0.95) -> list[RWParams]:
    rng = np.random.default_rng(seed)
    return [RWParams(*rng.uniform(lo, hi, size=3)) for _ in range(count)]


def check_grover_rules(coin: np.ndarray | None = None, tol: float = 1e-15) -> Check:
    window = (-2, 2)
    dev = 0.0
    for arc in ARCS:
        start = StateVector.basis(SitePosition(0, arc), window)
        out = evolve(GROVER, start, 1, coin=coin).flat()
        want = np.zeros_like(out)
        for (cell, target), val in GROVER_RULES[arc].items():
            want[flat_index(SitePosition(cell, target), window)] = val
        dev = max(dev, float(np.max(np.abs(out - want))))
    return _check("grover_rules", dev, tol)


def check_unitarity(params: RWParams, n: int = 1000, coin: np.ndarray | None = None,
                    tol: float = 1e-9) -> Check:
    """Norm drift and mass outside ``[-n, n+1]`` from every basis state at cell 0."""
    window = default_window(n)
    cells = np.arange(window[0], window[1] + 1)
    outside = (cells < -n) | (cells > n + 1)
    drift, leak = 0.0, 0.0
    for arc in ARCS:
        state = evolve(params, StateVector.basis(SitePosition(0, arc), window), n, coin=coin)
        mass = np.sum(np.abs(state.amplitudes) ** 2, axis=1)
        drift = max(drift, abs(mass.sum() - 1.0))
        leak = max(leak, float(mass[outside].sum()))
    return _check("unitarity_light_cone", max(drift, leak), tol, f"drift={drift:.2e} outside={leak:.2e}")


def check_spectral_mapping(samples: int = 20, kgrid: int = 100, seed: int = 0,
                           tol: float = 1e-10) -> Check:
    ks = 2 * np.pi * np.arange(kgrid) / kgrid
    dev = 0.0
    for prm in random_params(samples, seed):
        for k in ks:
            dev = max(dev, spectral_map_check(prm, k, tol).max_deviation)
    return _check("spectral_mapping", dev, tol)


def check_closed_form_spectra(params: RWParams, kgrid: int = 100, tol: float = 1e-10) -> Check:
    """``lambda0`` and ``lambda1`` against extremes of ``spec(J_k)`` over a grid containing 0 and pi."""
    ks = 2 * np.pi * np.arange(kgrid) / kgrid
    tops = np.array([np.linalg.eigvalsh(twisted_matrix(params, k)).max() for k in ks])
    sp = spectral_params(params)
    dev = max(abs(tops.max() - sp.lambda1), abs(tops.min() - sp.lambda0))
    return _check("closed_form_spectra", dev, tol)


def check_grover_constants(tol: float = 1e-14) -> Check:
    sp = spectral_params(GROVER)
    dev = max(abs(sp.lambda0 - 1 / np.sqrt(3)), abs(sp.lambda1 - 1.0), abs(sp.kappa - 1 / np.sqrt(6)))
    return _check("grover_constants", dev, tol)


def check_round_trip(plist, tol: float = 1e-12) -> Check:
    """``U w = i w`` and ``U conj(w) = -i conj(w)``."""
    dev = 0.0
    for prm in plist:
        w = _raw_round_trip(prm, 0)
        dev = max(dev, eigen_residual(prm, w, 1j), eigen_residual(prm, w.conj(), -1j))
    return _check("round_trip_eigen", dev, tol)


def _gram(prm: RWParams, cells: range):
    ws = [_raw_round_trip(prm, j) for j in cells]
    g = np.array([[a.inner(b) for b in ws] for a in ws])
    cross = np.array([[a.inner(b.conj()) for b in ws] for a in ws])
    return g, cross


def check_round_trip_gram(plist, tol: float = 1e-12) -> Check:
    """Tridiagonal Gram matrix (closed-form diagonal and ``2 r1 r4`` off-diagonal); ``L+`` orthogonal to ``L-``."""
    dev = 0.0
    for prm in plist:
        g, cross = _gram(prm, range(-3, 4))
        n = g.shape[0]
        want = (round_trip_norm2(prm) * np.eye(n)
                + neighbour_overlap(prm) * (np.eye(n, k=1) + np.eye(n, k=-1)))
        dev = max(dev, float(np.max(np.abs(g - want))), float(np.max(np.abs(cross))))
    return _check("round_trip_gram", dev, tol)


def round_trip_pairwise_overlap(plist) -> float:
    """Largest ``|<w(p_j), w(p_j')>|`` over ``j != j'``."""
    dev = 0.0
    for prm in plist:
        g, _ = _gram(prm, range(-3, 4))
        off = g - np.diag(np.diag(g))
        dev = max(dev, float(np.max(np.abs(off))))
    return dev


def check_localized_mass_analytic(params: RWParams, tol: float = 1e-10) -> Check:
    prof = ensemble_profile(params, MIXED, radius=40)
    return _check("localized_mass_analytic", abs(prof.total() - 1 / 3), tol)


def ballistic_background(params: RWParams, t_lo: int, t_hi: int, radius: int) -> float:
    """Mass the continuous part puts on ``|j| <= radius``, averaged over ``t_lo <= n < t_hi``."""
    law = LimitLaw(params)
    j = np.arange(-radius, radius + 1)
    return float(np.mean([np.sum(law.density(j / n)) / n for n in range(max(t_lo, 1), t_hi)]))


def check_time_averaged(params: RWParams, t_lo: int = 500, t_hi: int = 1000, radius: int = 20,
                        tol_total: float = 1e-2, tol_cell: float = 1e-2):
    sim = time_averaged_distribution(params, MIXED, t_lo, t_hi, radius)
    prof = ensemble_profile(params, MIXED, radius=radius)
    back = ballistic_background(params, t_lo, t_hi, radius)
    total = _check("localized_mass_time_average", abs(sim.total() - 1 / 3), tol_total,
                   f"total={sim.total():.5f} less_background={sim.total() - back:.5f}")
    cell = _check("pointwise_localization", np.max(np.abs(sim.masses - prof.masses)), tol_cell)
    return total, cell


def check_weak_limit(params: RWParams, n: int = 1000, tol_ks: float = 0.05, tol_tail: float = 1e-2,
                     tol_kappa: float = 0.02, atom_radius: int = 20):
    law = LimitLaw(params)
    dist = ensemble_distribution(params, MIXED, n)
    ks = ks_distance(dist, n, law, atom_radius=atom_radius)
    tail = float(dist.masses[np.abs(dist.cells / n) > law.kappa + 0.02].sum())
    vel = pseudo_velocity_empirical(dist, n, 1e-3)
    return (
        _check("ks_distance", ks.distance, tol_ks, f"unrestricted={ks.distance_all:.4f}"),
        _check("tail_beyond_kappa", tail, tol_tail),
        _check("pseudo_velocity", abs(vel - law.kappa), tol_kappa, f"empirical={vel:.4f} kappa={law.kappa:.4f}"),
    )


def _x_grid(law: LimitLaw, size: int) -> np.ndarray:
    return law.kappa * (2 * (np.arange(size) + 0.5) / size - 1)


def gamma_identity_deviation(params: RWParams, grid: int = 1000) -> float:
    """Largest ``|(gamma+ + gamma-) * prefactor - pi * c * sum_branches 1/|nu''||``.

    ``c`` is the calibrated normalization, so the right side is ``pi`` times the
    probability density of ``nu'(K)``; nothing about the factor is assumed.
    """
    law = LimitLaw(params)
    _, lam0 = law.lam
    x = _x_grid(law, grid)
    lhs = (law.gamma(x, 1) + law.gamma(x, -1)) * wave_prefactor(x, lam0)
    rhs = np.pi * law.calibration * law.jacobian_sum(x)
    return float(np.max(np.abs(lhs - rhs)))


def check_gamma_identity(params: RWParams, grid: int = 1000, tol: float = 1e-8) -> Check:
    return _check("gamma_branch_identity", gamma_identity_deviation(params, grid), tol)


def _five_point(fn, ks, h):
    return (fn(ks - 2 * h) - 8 * fn(ks - h) + 8 * fn(ks + h) - fn(ks + 2 * h)) / (12 * h)


def check_band_derivatives(params: RWParams, grid: int = 400, h: float = 1e-4, tol: float = 1e-6) -> Check:
    """``nu'`` and ``nu''`` against five-point differences, away from ``k = 0, pi``."""
    band = Band(params)
    ks = np.linspace(0.05, np.pi - 0.05, grid)
    ks = np.concatenate([ks, ks + np.pi])
    fd1 = _five_point(band.nu, ks, h)
    fd2 = _five_point(band.dnu, ks, h)
    r1 = np.abs(fd1 - band.dnu(ks)) / np.maximum(np.abs(band.dnu(ks)), 1e-3)
    r2 = np.abs(fd2 - band.d2nu(ks)) / np.maximum(np.abs(band.d2nu(ks)), 1e-3)
    return _check("band_derivatives", max(r1.max(), r2.max()), tol)


def check_total_mass(params: RWParams, tol: float = 1e-6) -> Check:
    law = LimitLaw(params)
    total = law.atom_mass + law.continuous_cdf(np.array(law.kappa * 2))
    return _check("total_mass", abs(total - 1.0), tol, f"calibration={law.calibration:.12f}")


def check_recurrent_collapse(params: RWParams, grid: int = 1000, tol: float = 1e-8) -> Check:
    """``p = q``: density is ``(2/3) 2 f_K(2x; sqrt(1 - lambda0^2))``, ``gamma+ = 1`` and ``gamma- = 0``."""
    if not is_recurrent(params):
        raise ValueError("recurrent collapse needs p == q")
    law = LimitLaw(params)
    x = _x_grid(law, grid)
    k = np.sqrt(1 - law.spectral.lambda0**2)
    ref = (2 / 3) * 2 * konno_density(2 * x, k)
    dev_d = np.max(np.abs(law.density(x) - ref) / np.maximum(1.0, ref))
    dev_g = max(np.max(np.abs(law.gamma(x, 1) - 1)), np.max(np.abs(law.gamma(x, -1))))
    return _check("recurrent_collapse", max(dev_d, dev_g), tol)


def check_transient_wave(params: RWParams, grid: int = 1000, floor: float = 1e-6) -> Check:
    law = LimitLaw(params)
    peak = float(np.max(law.wave(_x_grid(law, grid), -1)))
    return _check("transient_wave_present", peak, floor, smaller=False)


def check_char_fn(params: RWParams, max_n: int = 10, xis=(0.1, 0.5, 1.0), grid: int = 4096,
                  tol: float = 1e-8) -> Check:
    dev = 0.0
    for n in range(max_n + 1):
        dist = ensemble_distribution(params, MIXED, n)
        for xi in xis:
            dev = max(dev, abs(char_fn(dist, xi) - fourier_char_fn(params, MIXED, n, xi, grid)))
    return _check("fourier_char_fn", dev, tol)


def check_equivalence(params: RWParams, grid: int = 1000, tol: float = 1e-10) -> Check:
    a, b = LimitLaw(params), LimitLaw(params.swapped())
    dev = max(abs(a.spectral.lambda0 - b.spectral.lambda0), abs(a.spectral.lambda1 - b.spectral.lambda1))
    x = _x_grid(a, grid)
    dev = max(dev, float(np.max(np.abs(a.density(x) - b.density(x)))))
    return _check("equivalence_class", dev, tol)


def check_band_pushforward(params: RWParams, kgrid: int = 200_000, xgrid: int = 401,
                           tol: float = 1e-3) -> Check:
    """Limit CDF against the law of ``nu'(K)`` on a uniform k grid (both band signs) plus the atom."""
    law = LimitLaw(params)
    ks = (np.arange(kgrid) + 0.5) * 2 * np.pi / kgrid
    vel = np.sort(Band(params).dnu(ks))
    neg = np.sort(-vel)
    x = np.linspace(-1.2 * law.kappa, 1.2 * law.kappa, xgrid)
    emp = ((np.searchsorted(vel, x, side="right") + np.searchsorted(neg, x, side="right"))
           / (3 * kgrid) + (x >= 0) / 3)
    return _check("band_pushforward", np.max(np.abs(emp - law.cdf(x))), tol)


def run_suites(params: RWParams = GROVER, full: bool = False, steps: int = 1000, kgrid: int = 100,
               quad: int = 4096, coin: np.ndarray | None = None, tols: dict | None = None) -> list[Check]:
    """Run the invariant suites for ``params``.

    ``coin`` replaces the walk's coin in the evolution suites (a hook for
    negative controls).  ``full`` adds the long-horizon simulation suites.
    """
    tols = tols or {}
    plist = [params, *random_params(19, seed=1)]
    checks = [
        check_grover_rules(coin=coin),
        check_unitarity(params, min(steps, 1000), coin=coin, tol=tols.get("unitarity", 1e-9)),
        check_spectral_mapping(kgrid=kgrid, tol=tols.get("spectral", 1e-10)),
        check_closed_form_spectra(params, kgrid),
        check_grover_constants(),
        check_round_trip(plist, tol=tols.get("eigen", 1e-12)),
        check_round_trip_gram(plist, tol=tols.get("eigen", 1e-12)),
        check_localized_mass_analytic(params),
        check_gamma_identity(params, tol=tols.get("density", 1e-8)),
        check_band_derivatives(params),
        check_total_mass(params, tol=tols.get("mass", 1e-6)),
        check_equivalence(params),
        check_band_pushforward(params),
        check_char_fn(params, grid=quad, tol=tols.get("charfn", 1e-8)),
    ]
    if is_recurrent(params):
        checks.append(check_recurrent_collapse(params, tol=tols.get("density", 1e-8)))
    else:
        checks.append(check_transient_wave(params))
    if full:
        checks.extend(check_time_averaged(params, steps // 2, steps, tol_total=tols.get("total", 1e-2),
                                          tol_cell=tols.get("cell", 1e-2)))
        checks.extend(check_weak_limit(params, steps, tol_ks=tols.get("ks", 0.05)))
    return checks
