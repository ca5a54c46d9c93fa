"""Quotient graph M = ({R, S, T}, {RS, ST, ST}) and its lift to the magnifier graph.

Arcs of the cover are labelled ``(cell, arc)`` where ``cell`` is the cell of the
arc's *origin*.  Every arc stays inside its cell except the two crossing arcs:

    (j, e-)    : (j, S) -> (j-1, T)
    (j, e-bar) : (j, T) -> (j+1, S)

so the lifted reversal of ``(j, e-)`` is ``(j-1, e-bar)``.
"""
from __future__ import annotations

from enum import Enum, IntEnum
from typing import NamedTuple


class WindowOverflowError(RuntimeError):
    """A site or a state's support left the finite cell window."""


class Vertex(str, Enum):
    R = "R"
    S = "S"
    T = "T"


class Arc(IntEnum):
    """The six symmetric arcs of M, in the fixed storage order."""

    E0 = 0
    E_PLUS = 1
    E_MINUS = 2
    E0_BAR = 3
    E_PLUS_BAR = 4
    E_MINUS_BAR = 5

    @property
    def label(self) -> str:
        return _LABELS[self]

    @classmethod
    def from_label(cls, text: str) -> "Arc":
        for arc, lab in _LABELS.items():
            if lab == text:
                return arc
        raise ValueError(f"unknown arc label {text!r}")


_LABELS = {
    Arc.E0: "e0",
    Arc.E_PLUS: "e+",
    Arc.E_MINUS: "e-",
    Arc.E0_BAR: "e0bar",
    Arc.E_PLUS_BAR: "e+bar",
    Arc.E_MINUS_BAR: "e-bar",
}

ARCS: tuple[Arc, ...] = tuple(Arc)
N_ARCS = len(ARCS)

_ORIGIN = {
    Arc.E0: Vertex.S,
    Arc.E_PLUS: Vertex.S,
    Arc.E_MINUS: Vertex.S,
    Arc.E0_BAR: Vertex.R,
    Arc.E_PLUS_BAR: Vertex.T,
    Arc.E_MINUS_BAR: Vertex.T,
}

# cell offset of the terminal vertex relative to the origin cell
_CELL_SHIFT = {Arc.E_MINUS: -1, Arc.E_MINUS_BAR: +1}


class SitePosition(NamedTuple):
    cell: int
    arc: Arc


def reverse(arc: Arc) -> Arc:
    """Inverse arc in M (e0 <-> e0bar, e+ <-> e+bar, e- <-> e-bar)."""
    return Arc((arc + 3) % 6)


def origin(arc: Arc) -> Vertex:
    return _ORIGIN[arc]


def terminal(arc: Arc) -> Vertex:
    return _ORIGIN[reverse(arc)]


def out_arcs(vertex: Vertex) -> tuple[Arc, ...]:
    """Arcs of M leaving ``vertex``, in storage order."""
    return tuple(a for a in ARCS if _ORIGIN[a] is vertex)


def cell_shift(arc: Arc) -> int:
    return _CELL_SHIFT.get(arc, 0)


def lifted_endpoints(pos: SitePosition) -> tuple[tuple[int, Vertex], tuple[int, Vertex]]:
    """Return ``((cell, origin), (cell, terminal))`` of a lifted arc."""
    j, arc = pos.cell, Arc(pos.arc)
    return (j, origin(arc)), (j + cell_shift(arc), terminal(arc))


def lifted_reverse(pos: SitePosition) -> SitePosition:
    """Inverse arc in the cover; it lives in the cell of the old terminal."""
    j, arc = pos.cell, Arc(pos.arc)
    return SitePosition(j + cell_shift(arc), reverse(arc))


def window_size(window: tuple[int, int]) -> int:
    jmin, jmax = window
    if jmax < jmin:
        raise ValueError(f"empty window {window}")
    return jmax - jmin + 1


def flat_index(pos: SitePosition, window: tuple[int, int]) -> int:
    """Cell-major index of a site inside ``window = (jmin, jmax)``."""
    jmin, jmax = window
    if not jmin <= pos.cell <= jmax:
        raise WindowOverflowError(f"cell {pos.cell} outside window [{jmin}, {jmax}]")
    return N_ARCS * (pos.cell - jmin) + int(pos.arc)


def site_at(index: int, window: tuple[int, int]) -> SitePosition:
    """Inverse of :func:`flat_index`."""
    n = N_ARCS * window_size(window)
    if not 0 <= index < n:
        raise WindowOverflowError(f"index {index} outside [0, {n})")
    cell, arc = divmod(index, N_ARCS)
    return SitePosition(window[0] + cell, Arc(arc))
