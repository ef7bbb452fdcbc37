"""The planar tree shift and its reverse.

Every atom's mother is the first atom hit when a horizontal interval of
length one centred at the atom is swept upward.  Sisters are ordered by
x-coordinate, the oldest having the smallest x.  The shift walks the forest
in depth-first preorder (oldest daughter first); the reverse walks it in
the opposite direction.

Two geometries are supported.  In window mode the configuration carries its
observation window as a :class:`RegionMark` and every mother or daughter
set that might depend on atoms outside the window raises :class:`Censored`.
Without a window the group torus is used as is, with a cycle guard.
"""

from __future__ import annotations

import numpy as np

from .measures import Configuration, PointMeasure, RegionMark
from .shifts import Censored, ShiftRule

HALF = 0.5


class _Forest:
    """Lazy mother/daughter relations of a planar point measure."""

    def __init__(self, xi: PointMeasure, window=None):
        g = xi.group
        if g.kind != "torus" or g.d != 2:
            raise ValueError("tree shift needs a two-dimensional torus")
        self.g = g
        self.xi = xi
        self.xy = g.signed(xi.locations)
        self.windowed = window is not None
        if self.windowed:
            if len(window.corners) != 1:
                raise ValueError("window must be a single box")
            self.lo = g.signed(window.corners[0])
            self.hi = self.lo + window.extents[0]
        self._mother: dict[int, int] = {}
        self._daughters: dict[int, np.ndarray] = {}

    def dx(self, i: int) -> np.ndarray:
        return self.g.signed(self.xy[:, 0] - self.xy[i, 0])

    def dy(self, i: int) -> np.ndarray:
        d = self.xy[:, 1] - self.xy[i, 1]
        return d if self.windowed else np.mod(d, self.g.L)

    def _inside_x(self, i: int, half: float) -> bool:
        x = self.xy[i, 0]
        return self.lo[0] <= x - half and x + half <= self.hi[0]

    def mother(self, i: int) -> int:
        if i in self._mother:
            return self._mother[i]
        if self.windowed and not self._inside_x(i, HALF):
            raise Censored("mother strip leaves the window")
        dx, dy = self.dx(i), self.dy(i)
        cand = (np.abs(dx) <= HALF) & (dy > 0)
        cand[i] = False
        idx = np.flatnonzero(cand)
        if len(idx) == 0:
            raise Censored("upward sweep finds no atom")
        j = int(idx[np.lexsort((dx[idx], dy[idx]))[0]])
        self._mother[i] = j
        return j

    def daughters(self, i: int) -> np.ndarray:
        """Daughters of atom ``i`` sorted by age (ascending x)."""
        if i in self._daughters:
            return self._daughters[i]
        dx, dy = self.dx(i), self.dy(i)
        if self.windowed:
            if not self._inside_x(i, 2 * HALF):
                raise Censored("daughter strip leaves the window")
            below = dy < 0
            blockers = np.flatnonzero((np.abs(dx) <= 2 * HALF) & below)
            if not _covers(dx[blockers]):
                raise Censored("daughters may lie below the window")
        else:
            below = np.ones(len(dx), dtype=bool)
        cand = (np.abs(dx) <= HALF) & below
        cand[i] = False
        kids = np.array([j for j in np.flatnonzero(cand) if self.mother(int(j)) == i], dtype=int)
        kids = kids[np.argsort(dx[kids], kind="stable")] if len(kids) else kids
        self._daughters[i] = kids
        return kids

    def younger_sisters(self, i: int) -> np.ndarray:
        sis = self.daughters(self.mother(i))
        return sis[self.dx(i)[sis] > 0]

    def older_sisters(self, i: int) -> np.ndarray:
        sis = self.daughters(self.mother(i))
        return sis[self.dx(i)[sis] < 0]

    def forward(self, o: int) -> int:
        kids = self.daughters(o)
        if len(kids):
            return int(kids[0])
        node, seen = o, {o}
        while True:
            sis = self.younger_sisters(node)
            if len(sis):
                return int(sis[0])
            node = self.mother(node)
            if node in seen:
                raise Censored("ancestor line closes a cycle")
            seen.add(node)

    def backward(self, o: int) -> int:
        older = self.older_sisters(o)
        if not len(older):
            return self.mother(o)
        node, seen = int(older[-1]), {o}
        while True:
            kids = self.daughters(node)
            if not len(kids):
                return node
            seen.add(node)
            node = int(kids[-1])
            if node in seen:
                raise Censored("offspring line closes a cycle")


def _covers(centres: np.ndarray) -> bool:
    """Whether intervals ``[c - 1/2, c + 1/2]`` cover ``[-1/2, 1/2]``."""
    reach = -HALF
    for c in np.sort(centres):
        if c - HALF > reach:
            return False
        reach = max(reach, c + HALF)
        if reach >= HALF:
            return True
    return False


def _window_of(c: Configuration):
    return c.mark.region if isinstance(c.mark, RegionMark) else None


def _index(xi: PointMeasure, p) -> int:
    i = xi.index_of(p)
    if i is None:
        raise ValueError("point is not an atom")
    return i


def tree_mother(xi: PointMeasure, p, window=None):
    """Mother of atom ``p``, or ``None`` when the sweep leaves the window or
    finds nothing."""
    f = _Forest(xi, window)
    try:
        return xi.locations[f.mother(_index(xi, p))].copy()
    except Censored:
        return None


def tree_daughters(xi: PointMeasure, p, window=None) -> np.ndarray:
    """Daughters of atom ``p`` oldest first; raises :class:`Censored` in
    window mode when they are not determined by the window."""
    f = _Forest(xi, window)
    return xi.locations[f.daughters(_index(xi, p))].copy()


def _check_margin(c: Configuration, t, margin: float):
    w = _window_of(c)
    if w is None or margin <= 0:
        return
    g = c.group
    lo = g.signed(w.corners[0])
    hi = lo + w.extents[0]
    x = g.signed(t)
    if np.any(x - margin < lo) or np.any(x + margin > hi):
        raise Censored("shift target too close to the window edge")


def tree_shift(c: Configuration, margin: float = 0.0):
    xi = c.measure
    f = _Forest(xi, _window_of(c))
    t = xi.locations[f.forward(_index(xi, c.group.identity))].copy()
    _check_margin(c, t, margin)
    return t


def tree_shift_reverse(c: Configuration, margin: float = 0.0):
    xi = c.measure
    f = _Forest(xi, _window_of(c))
    t = xi.locations[f.backward(_index(xi, c.group.identity))].copy()
    _check_margin(c, t, margin)
    return t


def tree_rule(margin: float = 0.0) -> ShiftRule:
    return ShiftRule("tree", lambda c: tree_shift(c, margin), claims_reversible=True,
                     claims_preserving=True, reverse_name="tree_reverse")


def tree_reverse_rule(margin: float = 0.0) -> ShiftRule:
    return ShiftRule("tree_reverse", lambda c: tree_shift_reverse(c, margin), claims_reversible=True,
                     claims_preserving=True, reverse_name="tree")
