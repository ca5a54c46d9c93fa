import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from magnifier_qw.graph import ARCS, Arc, Vertex, out_arcs
from magnifier_qw.rw import (
    GROVER,
    RWParams,
    is_recurrent,
    reversible_measure,
    rw_power_iterate,
    spectral_params,
    transition_prob,
    twisted_eigenvalues,
    twisted_matrix,
)

unit = st.floats(0.02, 0.98)
triples = st.builds(RWParams, unit, unit, unit)


def test_params_validation_names_bound():
    with pytest.raises(ValueError, match="0 < q < 1"):
        RWParams(0.5, 1.0, 0.5)
    with pytest.raises(ValueError, match="0 < r < 1"):
        RWParams(0.5, 0.5, 0.0)


def test_transition_prob_examples():
    assert transition_prob(RWParams(0.7, 0.3, 0.5), Arc.E0_BAR) == 1.0
    assert transition_prob(RWParams(0.7, 0.3, 0.5), Arc.E_PLUS) == pytest.approx(0.35)
    assert transition_prob(GROVER, Arc.E_PLUS) == pytest.approx(1 / 3)


@given(triples)
def test_outgoing_probabilities_sum_to_one(prm):
    for v in Vertex:
        assert sum(transition_prob(prm, a) for a in out_arcs(v)) == pytest.approx(1.0)


def test_reversible_measure_examples():
    assert reversible_measure(GROVER, 3, Vertex.S) == pytest.approx(1.0)
    assert reversible_measure(RWParams(0.7, 0.3, 0.5), 1, Vertex.S) == pytest.approx(0.49 / 0.09)
    assert reversible_measure(RWParams(0.2, 0.6, 0.4), 0, Vertex.R) == pytest.approx(0.6)


@given(triples, st.integers(-4, 4))
def test_detailed_balance(prm, j):
    # m(o(e)) p(e) = m(t(e)) p(rev e) on the three edge types
    m = lambda cell, v: reversible_measure(prm, cell, v)  # noqa: E731
    assert m(j, Vertex.S) * transition_prob(prm, Arc.E0) == pytest.approx(m(j, Vertex.R))
    assert m(j, Vertex.S) * transition_prob(prm, Arc.E_PLUS) == pytest.approx(
        m(j, Vertex.T) * transition_prob(prm, Arc.E_PLUS_BAR))
    assert m(j, Vertex.S) * transition_prob(prm, Arc.E_MINUS) == pytest.approx(
        m(j - 1, Vertex.T) * transition_prob(prm, Arc.E_MINUS_BAR))


def test_twisted_matrix_grover_entry():
    jk = twisted_matrix(GROVER, 0.0)
    assert jk[1, 2] == pytest.approx(2 * math.sqrt(1 / 6))
    assert np.allclose(jk, jk.real) and np.allclose(jk, jk.T)


@given(triples, st.floats(0, 2 * np.pi))
def test_twisted_spectrum_closed_form(prm, k):
    num = np.linalg.eigvalsh(twisted_matrix(prm, k))
    assert np.allclose(num, twisted_eigenvalues(prm, k), atol=1e-12)


def test_spectral_params_examples():
    g = spectral_params(GROVER)
    assert g.lambda0 == pytest.approx(1 / math.sqrt(3), abs=1e-14)
    assert g.lambda1 == 1.0
    assert g.kappa == pytest.approx(1 / math.sqrt(6), abs=1e-14)
    t = spectral_params(RWParams(0.7, 0.3, 0.5))
    assert (t.a, t.b) == (pytest.approx(0.71), pytest.approx(0.21))
    assert t.lambda0 == pytest.approx(0.70711, abs=1e-5)
    assert t.lambda1 == pytest.approx(0.95917, abs=1e-5)
    assert t.kappa == pytest.approx(0.2392, abs=1e-4)


@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_lambda0_when_p_plus_q_is_one(p, r):
    assert spectral_params(RWParams(p, 1 - p, r)).lambda0 ** 2 == pytest.approx(1 - r)


@given(triples)
def test_spectral_ordering(prm):
    sp = spectral_params(prm)
    assert sp.lambda0**2 >= 1 - prm.r - 1e-12
    assert sp.lambda0 <= sp.lambda1 <= 1.0
    assert 0 <= sp.kappa <= 0.5


def test_recurrence():
    assert is_recurrent(GROVER)
    assert not is_recurrent(RWParams(0.7, 0.3, 0.5))
    assert is_recurrent(RWParams(0.4, 0.4, 0.9))


@pytest.mark.parametrize("prm", [GROVER, RWParams(0.7, 0.3, 0.5)])
def test_power_iteration_reaches_lambda1(prm):
    assert rw_power_iterate(prm) == pytest.approx(spectral_params(prm).lambda1, abs=1e-3)


def test_power_iteration_single_cell_below_lambda1():
    prm = RWParams(0.7, 0.3, 0.5)
    assert rw_power_iterate(prm, window=(0, 0)) < spectral_params(prm).lambda1
