import pytest
from hypothesis import given, strategies as st

from magnifier_qw.graph import (
    ARCS,
    Arc,
    SitePosition,
    Vertex,
    WindowOverflowError,
    flat_index,
    lifted_endpoints,
    lifted_reverse,
    origin,
    out_arcs,
    reverse,
    site_at,
    terminal,
    window_size,
)


def test_reverse_pairs():
    assert reverse(Arc.E_PLUS) is Arc.E_PLUS_BAR
    assert reverse(Arc.E0_BAR) is Arc.E0
    assert reverse(Arc.E_MINUS) is Arc.E_MINUS_BAR


@pytest.mark.parametrize("arc", ARCS)
def test_reverse_is_involution(arc):
    assert reverse(reverse(arc)) is arc
    assert reverse(arc) is not arc


def test_origins_and_terminals():
    assert origin(Arc.E0) is origin(Arc.E_PLUS) is origin(Arc.E_MINUS) is Vertex.S
    assert terminal(Arc.E0) is Vertex.R
    assert terminal(Arc.E_PLUS) is terminal(Arc.E_MINUS) is Vertex.T
    assert out_arcs(Vertex.R) == (Arc.E0_BAR,)
    assert out_arcs(Vertex.T) == (Arc.E_PLUS_BAR, Arc.E_MINUS_BAR)


def test_lifted_endpoints_examples():
    assert lifted_endpoints(SitePosition(5, Arc.E_MINUS)) == ((5, Vertex.S), (4, Vertex.T))
    assert lifted_endpoints(SitePosition(0, Arc.E0)) == ((0, Vertex.S), (0, Vertex.R))
    assert lifted_endpoints(SitePosition(2, Arc.E_PLUS_BAR)) == ((2, Vertex.T), (2, Vertex.S))


@given(st.integers(-50, 50), st.sampled_from(ARCS))
def test_lifted_reverse_swaps_endpoints(cell, arc):
    pos = SitePosition(cell, arc)
    back = lifted_reverse(pos)
    o, t = lifted_endpoints(pos)
    assert lifted_endpoints(back) == (t, o)
    assert lifted_reverse(back) == pos


def test_flat_index_layout():
    window = (-3, 4)
    assert flat_index(SitePosition(-3, Arc.E0), window) == 0
    assert flat_index(SitePosition(-3, Arc.E_MINUS_BAR), window) == 5
    assert flat_index(SitePosition(-2, Arc.E0), window) == 6
    assert window_size(window) == 8


def test_flat_index_overflow():
    with pytest.raises(WindowOverflowError):
        flat_index(SitePosition(5, Arc.E0), (-3, 4))
    with pytest.raises(WindowOverflowError):
        site_at(48, (-3, 4))


@given(st.integers(-20, 0), st.integers(0, 20), st.data())
def test_site_at_inverts_flat_index(lo, hi, data):
    window = (lo, hi)
    idx = data.draw(st.integers(0, 6 * window_size(window) - 1))
    assert flat_index(site_at(idx, window), window) == idx


def test_arc_labels_round_trip():
    for arc in ARCS:
        assert Arc.from_label(arc.label) is arc
    with pytest.raises(ValueError):
        Arc.from_label("e7")
