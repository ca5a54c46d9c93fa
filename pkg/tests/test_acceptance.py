"""Acceptance criteria 1 to 12, each at its stated tolerance.

Every test records one line through the ``report`` fixture; the lines are
collected in the terminal summary under "acceptance criteria".
"""
import math

import numpy as np
import pytest

from magnifier_qw import verify
from magnifier_qw.limitlaw import LimitLaw, konno_cdf
from magnifier_qw.rw import GROVER, RWParams, spectral_params
from magnifier_qw.szegedy import MIXED, ensemble_distribution

TRANSIENT = RWParams(0.7, 0.3, 0.5)
RANDOM20 = verify.random_params(20, seed=7)


def test_criterion_01_grover_rules(report):
    chk = verify.check_grover_rules(tol=1e-15)
    report(1, chk.passed, f"max coefficient error {chk.deviation:.1e} (tol 1e-15)")
    assert chk.passed


def test_criterion_02_unitarity_light_cone(report):
    checks = [verify.check_unitarity(prm, 1000, tol=1e-9) for prm in (GROVER, TRANSIENT)]
    ok = all(c.passed for c in checks)
    report(2, ok, "; ".join(c.detail for c in checks) + " over 1000 steps, all six basis states (tol 1e-9)")
    assert ok


def test_criterion_03_spectral_mapping(report):
    chk = verify.check_spectral_mapping(samples=20, kgrid=100, seed=0, tol=1e-10)
    report(3, chk.passed, f"max eigenvalue mismatch {chk.deviation:.1e} over 20 triples x 100 k (tol 1e-10)")
    assert chk.passed


def test_criterion_04_closed_form_spectra(report):
    checks = [verify.check_closed_form_spectra(prm, 100, tol=1e-10) for prm in [GROVER, *RANDOM20]]
    const = verify.check_grover_constants(tol=1e-10)
    dev = max(c.deviation for c in checks)
    ok = all(c.passed for c in checks) and const.passed
    sp = spectral_params(GROVER)
    report(4, ok, f"extremes error {dev:.1e}; Grover lambda0={sp.lambda0:.12f} lambda1={sp.lambda1:.1f} "
                  f"kappa={sp.kappa:.12f} (1/sqrt6={1 / math.sqrt(6):.12f})")
    assert ok


def test_criterion_05_round_trip_vectors(report):
    eigen = verify.check_round_trip(RANDOM20, tol=1e-12)
    overlap = verify.round_trip_pairwise_overlap(RANDOM20)
    ok = eigen.passed and overlap < 1e-12
    report(5, ok, f"eigen residual {eigen.deviation:.1e} (tol 1e-12); largest pairwise overlap "
                  f"{overlap:.3e} (tol 1e-12; neighbours share cell j+1 and overlap by 2 r1 r4)")
    assert eigen.passed
    assert overlap < 1e-12


@pytest.fixture(scope="module")
def time_averages():
    return {name: verify.check_time_averaged(prm, 500, 1000, 20, tol_total=1e-2, tol_cell=1e-2)
            for name, prm in (("grover", GROVER), ("(0.7,0.3,0.5)", TRANSIENT))}


def test_criterion_06_localized_mass(report, time_averages):
    totals = {name: pair[0] for name, pair in time_averages.items()}
    ok = all(c.passed for c in totals.values())
    text = "; ".join(f"{name}: {c.detail} |total-1/3|={c.deviation:.4f}" for name, c in totals.items())
    report(6, ok, text + " (tol 0.01)")
    assert ok


def test_criterion_07_pointwise_localization(report, time_averages):
    cells = {name: pair[1] for name, pair in time_averages.items()}
    ok = all(c.passed for c in cells.values())
    report(7, ok, "; ".join(f"{name}: max cell deviation {c.deviation:.2e}" for name, c in cells.items())
           + " (tol 1e-2)")
    assert ok


def _konno_reference_cdf(x):
    kappa = math.sqrt(2 / 3)
    return (x >= 0) / 3 + (2 / 3) * konno_cdf(2 * np.clip(x, -0.5 * kappa, 0.5 * kappa), kappa)


def test_criterion_08_weak_limit_recurrent(report):
    n, atom_radius = 1000, 20
    dist = ensemble_distribution(GROVER, MIXED, n)
    cells = dist.cells
    diff = np.abs(np.cumsum(dist.masses) - _konno_reference_cdf((cells + 0.5) / n))
    ks = float(diff[np.abs(cells + 0.5) > atom_radius].max())
    tail = float(dist.masses[np.abs(cells / n) > 1 / math.sqrt(6) + 0.02].sum())
    ok = ks < 0.05 and tail < 0.01
    report(8, ok, f"KS {ks:.4f} (tol 0.05, cells |j|<={atom_radius} excluded; all cells {diff.max():.4f}); "
                  f"tail beyond 1/sqrt6+0.02 {tail:.1e} (tol 0.01)")
    assert ks < 0.05
    assert tail < 0.01


def test_criterion_09_weak_limit_transient(report):
    ks, _, _ = verify.check_weak_limit(TRANSIENT, 1000, tol_ks=0.05)
    wave = verify.check_transient_wave(TRANSIENT)
    gamma_dev = 0.0
    for p in (0.2, 0.5, 0.8):
        for r in (0.3, 2 / 3, 0.9):
            law = LimitLaw(RWParams(p, p, r))
            x = law.kappa * np.linspace(-0.999, 0.999, 1001)
            gamma_dev = max(gamma_dev, np.max(np.abs(law.gamma(x, 1) - 1)), np.max(np.abs(law.gamma(x, -1))))
    ok = ks.passed and wave.passed and gamma_dev < 1e-10
    report(9, ok, f"KS {ks.deviation:.4f} ({ks.detail}, tol 0.05); peak rho* {wave.deviation:.3f}; "
                  f"p=q gamma error {gamma_dev:.1e} (tol 1e-10)")
    assert ok


def test_criterion_10_limit_formula_consistency(report):
    plist = [GROVER, TRANSIENT, RWParams(0.2, 0.9, 0.4), RWParams(0.6, 0.1, 0.8)]
    gamma = max(verify.gamma_identity_deviation(prm, 1000) for prm in plist)
    deriv = max(verify.check_band_derivatives(prm, tol=1e-6).deviation for prm in plist)
    mass = max(verify.check_total_mass(prm, tol=1e-6).deviation for prm in plist)
    ok = gamma < 1e-8 and deriv < 1e-6 and mass < 1e-6
    report(10, ok, f"gamma branch identity {gamma:.1e} (tol 1e-8, calibrated constant "
                   f"{LimitLaw(GROVER).calibration:.12f}); nu', nu'' relative {deriv:.1e} (tol 1e-6); "
                   f"total mass {mass:.1e} (tol 1e-6)")
    assert ok


def test_criterion_11_characteristic_function(report):
    checks = [verify.check_char_fn(prm, 10, (0.1, 0.5, 1.0), grid=4096, tol=1e-8) for prm in (GROVER, TRANSIENT)]
    dev = max(c.deviation for c in checks)
    ok = all(c.passed for c in checks)
    report(11, ok, f"Fourier vs real-space characteristic function {dev:.1e} (tol 1e-8)")
    assert ok


def test_criterion_12_equivalence_classes(report):
    checks = [verify.check_equivalence(prm, tol=1e-10) for prm in [TRANSIENT, *RANDOM20[:8]]]
    dev = max(c.deviation for c in checks)
    ok = all(c.passed for c in checks)
    report(12, ok, f"(p,q,r) vs (q,p,r) lambda and density difference {dev:.1e} (tol 1e-10)")
    assert ok
