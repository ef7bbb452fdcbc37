"""Point-shift rules, allocations, and reversibility / preservation checks.

A shift rule ``pi`` maps a configuration to a location ``T = pi(X, xi)``.
Its allocation is ``tau(t) = t pi(t^{-1}(X, xi))``.  A rule is reversible
with reverse ``pi'`` when ``pi'(T^{-1} c) = T^{-1}`` and
``pi(T'^{-1} c) = T'^{-1}`` for ``T' = pi'(c)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .measures import Configuration, DensityMeasure, PointBatch, PointMeasure, measures_equal


class Censored(Exception):
    """A rule evaluation needed data outside the observation window."""


@dataclass(frozen=True, eq=False)
class ShiftRule:
    """A named point-shift rule with its claimed properties.

    ``func(c)`` (or ``func(c, rng)`` for randomized rules) returns a group
    element.  ``outcomes(c)``, when given, lists ``(location, probability)``
    for exact enumeration of randomized rules.  ``batch(pb)`` evaluates on a
    :class:`PointBatch` and returns an ``(B, d)`` array.
    """

    name: str
    func: Callable
    arity: str = "measure_only"
    claims_reversible: bool = False
    claims_preserving: bool = False
    reverse_name: str | None = None
    randomized: bool = False
    batch: Callable | None = None
    outcome_func: Callable | None = None

    def __call__(self, c: Configuration, rng=None):
        if self.randomized:
            return self.func(c, rng)
        return self.func(c)

    def outcomes(self, c: Configuration) -> list:
        if self.outcome_func is not None:
            return self.outcome_func(c)
        if self.randomized:
            raise ValueError(f"rule {self.name!r} has no exact outcome enumeration")
        return [(self.func(c), 1.0)]


# --------------------------------------------------------------------------
# circle enumeration T_n


def _require_circle(g):
    if g.kind != "torus" or g.d != 1:
        raise ValueError("rule needs a one-dimensional torus (circle)")


def _origin_index(xi: PointMeasure) -> int:
    i = xi.index_of(xi.group.identity)
    if i is None:
        raise ValueError("origin not in support")
    return i


def shift_tn_circle(xi: PointMeasure, n: int) -> np.ndarray:
    """The ``n``-th atom after the origin in positive orientation (``n < 0``:
    negative orientation), counting cyclically around the circle."""
    g = xi.group
    _require_circle(g)
    i0 = _origin_index(xi)
    x = xi.locations[:, 0]
    order = np.argsort(x, kind="stable")
    rank = int(np.flatnonzero(order == i0)[0])
    return xi.locations[order[(rank + n) % len(x)]].copy()


def tn_batch(pb: PointBatch, n: int) -> np.ndarray:
    g = pb.group
    _require_circle(g)
    seg = pb.segment
    x = pb.locations[:, 0]
    order = np.lexsort((x, seg))
    xs, ss = x[order], seg[order]
    is_o = np.abs(g.signed(xs)) <= g.tol
    segs_o, first = np.unique(ss[is_o], return_index=True)
    if len(segs_o) != len(pb):
        raise ValueError("origin not in support")
    pos_o = np.flatnonzero(is_o)[first]
    start, k = pb.offsets[:-1], pb.counts
    target = start + np.mod(pos_o - start + n, k)
    return xs[target].reshape(-1, 1)


def tn_rule(n: int) -> ShiftRule:
    return ShiftRule(f"tn:{n}", lambda c: shift_tn_circle(c.measure, n), claims_reversible=True,
                     claims_preserving=True, reverse_name=f"tn:{-n}", batch=lambda pb: tn_batch(pb, n))


# --------------------------------------------------------------------------
# closest point


def shift_nearest(xi: PointMeasure) -> np.ndarray:
    """Nearest other atom in the wrapped Euclidean metric.

    Exact distance ties go to the lexicographically smallest coordinates.
    """
    g = xi.group
    if g.kind != "torus":
        raise ValueError("nearest-point rule needs a torus")
    i0 = _origin_index(xi)
    if len(xi) < 2:
        raise ValueError("nearest-point rule needs at least two atoms")
    others = np.delete(xi.locations, i0, axis=0)
    dist = np.sqrt(np.sum(g.signed(others) ** 2, axis=1))
    keys = [others[:, j] for j in range(g.d - 1, -1, -1)] + [dist]
    return others[np.lexsort(keys)[0]].copy()


def nearest_batch(pb: PointBatch) -> np.ndarray:
    g = pb.group
    if g.kind != "torus":
        raise ValueError("nearest-point rule needs a torus")
    dist = np.sqrt(np.sum(g.signed(pb.locations) ** 2, axis=1))
    keep = dist > g.tol
    idx = np.flatnonzero(keep)
    seg = pb.segment[idx]
    keys = [pb.locations[idx, j] for j in range(g.d - 1, -1, -1)] + [dist[idx], seg]
    order = np.lexsort(keys)
    segs, first = np.unique(seg[order], return_index=True)
    if len(segs) != len(pb):
        raise ValueError("nearest-point rule needs at least two atoms")
    return pb.locations[idx[order[first]]]


def nearest_rule() -> ShiftRule:
    return ShiftRule("nearest", lambda c: shift_nearest(c.measure), batch=nearest_batch)


# --------------------------------------------------------------------------
# simple rules


def identity_rule() -> ShiftRule:
    return ShiftRule("identity", lambda c: c.group.identity, claims_reversible=True,
                     claims_preserving=True, reverse_name="identity")


def constant_rule(t) -> ShiftRule:
    """``pi == t``; its allocation is ``tau(s) = s t``."""
    return ShiftRule(f"constant:{np.asarray(t).tolist()}", lambda c: c.group.check(t))


def shift_mutual_nearest_circle(xi: PointMeasure) -> np.ndarray:
    """Match the origin with its circle neighbour when they are mutual nearest
    neighbours among adjacent atoms; otherwise stay.  Self-reverse."""
    g = xi.group
    _require_circle(g)
    k = len(xi)
    if k == 1:
        return g.identity
    L = g.L
    right = shift_tn_circle(xi, 1)[0]
    left = shift_tn_circle(xi, -1)[0]
    r, l = right, L - left
    if k == 2:
        return np.array([right])
    if r < l:
        second = shift_tn_circle(xi, 2)[0]
        if r < np.mod(second - right, L):
            return np.array([right])
    elif l < r:
        second = shift_tn_circle(xi, -2)[0]
        if l < np.mod(left - second, L):
            return np.array([left])
    return g.identity


def matching_rule() -> ShiftRule:
    return ShiftRule("mutual_nearest", lambda c: shift_mutual_nearest_circle(c.measure), claims_reversible=True,
                     claims_preserving=True, reverse_name="mutual_nearest")


# --------------------------------------------------------------------------
# circular lexicographic shift driven by a lattice background


def circular_lex_shift(Z, xi: PointMeasure, reverse: bool = False) -> np.ndarray:
    """Shift to the ``floor(U k)``-th atom after the origin in circular
    lexicographic order of the atoms in the lattice cell holding the origin.

    ``Z`` is ``TupleMark((LatticeMark, FixedMark(U)))`` and ``k`` is the
    ``xi``-mass of the cell.  With ``reverse`` the ordering is reversed.
    """
    lattice, u = Z.items[0], Z.items[1].value
    g = xi.group
    i0 = xi.index_of(g.identity)
    if i0 is None:
        raise ValueError("origin outside cell: no atom at the origin")
    corner = lattice.cell_containing_origin()
    rel = np.mod(xi.locations - corner, g.L)
    inside = np.all(rel < lattice.spacing, axis=1)
    if not inside[i0]:
        raise ValueError("origin outside cell")
    idx = np.flatnonzero(inside)
    sub = rel[idx]
    order = idx[np.lexsort(sub.T[::-1])]
    k = len(order)
    n = int(np.floor(u * xi.weights[idx].sum()))
    pos = int(np.flatnonzero(order == i0)[0])
    step = -n if reverse else n
    return xi.locations[order[(pos + step) % k]].copy()


def circular_lex_rule(reverse: bool = False) -> ShiftRule:
    name = "circular_lex_reverse" if reverse else "circular_lex"
    other = "circular_lex" if reverse else "circular_lex_reverse"
    return ShiftRule(name, lambda c: circular_lex_shift(c.mark.items[0], c.measure, reverse),
                     arity="with_background", claims_reversible=True, claims_preserving=True, reverse_name=other)


# --------------------------------------------------------------------------
# Bernoulli transports


def stay_probability_table(table: dict) -> Callable:
    """Stay probability as a function of the mass at the origin."""
    table = {float(k): float(v) for k, v in table.items()}
    for v in table.values():
        if not 0.0 <= v <= 1.0:
            raise ValueError("stay probabilities must lie in [0, 1]")

    def p(c):
        m = c.measure.mass_at(c.group.identity)
        if m not in table:
            raise ValueError(f"no stay probability for origin mass {m}")
        return table[m]

    return p


def bernoulli_transport(base: ShiftRule, p, rng=None) -> ShiftRule:
    """Randomized rule: stay at the origin with probability ``p(c)``, else
    follow ``base``.

    ``p`` is a callable on configurations, a constant, or a mapping
    ``{origin mass: stay probability}``.  A generator passed here is the
    default stream when evaluation supplies none.
    """
    if isinstance(p, dict):
        p = stay_probability_table(p)
    elif not callable(p):
        const = float(p)
        if not 0.0 <= const <= 1.0:
            raise ValueError("stay probability must lie in [0, 1]")
        p = lambda c, _v=const: _v

    def prob(c):
        q = float(p(c))
        if not 0.0 <= q <= 1.0:
            raise ValueError(f"stay probability {q} outside [0, 1]")
        return q

    def func(c, r):
        r = rng if r is None else r
        if r is None:
            raise ValueError("randomized rule needs an rng")
        return c.group.identity if r.random() < prob(c) else base(c)

    def outcomes(c):
        q = prob(c)
        out = []
        if q > 0:
            out.append((c.group.identity, q))
        if q < 1:
            out.extend((loc, (1 - q) * w) for loc, w in base.outcomes(c))
        return out

    return ShiftRule(f"bernoulli[{base.name}]", func, claims_preserving=True, randomized=True, outcome_func=outcomes)


# --------------------------------------------------------------------------
# allocations


@dataclass(frozen=True, eq=False)
class Allocation:
    """``tau(t) = t pi(t^{-1} c)`` for a fixed configuration ``c``."""

    rule: ShiftRule
    config: Configuration

    def __call__(self, t, rng=None):
        g = self.config.group
        return g.compose(t, self.rule(self.config.shift(g.inverse(t)), rng))

    def outcomes(self, t) -> list:
        g = self.config.group
        return [(g.compose(t, s), p) for s, p in self.rule.outcomes(self.config.shift(g.inverse(t)))]


def build_allocation(pi: ShiftRule, c: Configuration) -> Allocation:
    return Allocation(pi, c)


def _support(c: Configuration) -> PointMeasure:
    xi = c.measure
    return xi.atomize() if isinstance(xi, DensityMeasure) else xi


def expected_pushforward(tau: Allocation) -> PointMeasure:
    """``E[xi(tau in .)]``, exact over the coins of a randomized rule."""
    xi = _support(tau.config)
    g = xi.group
    locs, ws = [], []
    for s, w in zip(xi.locations, xi.weights):
        s = int(s) if g.kind == "finite" else s
        for loc, p in tau.outcomes(s):
            if p > 0:
                locs.append(loc)
                ws.append(w * p)
    if not locs:
        return PointMeasure.empty(g)
    locs = np.array(locs) if g.kind == "torus" else locs
    return PointMeasure(g, locs, ws)


def check_preserving(tau: Allocation, c: Configuration | None = None, tol: float = 1e-12) -> bool:
    """Whether the image of ``xi`` under ``tau`` is ``xi`` itself.

    Randomized allocations are checked in expectation over their coins.
    Raises :class:`Censored` if some site cannot be evaluated.
    """
    if c is not None and c is not tau.config:
        tau = Allocation(tau.rule, c)
    return measures_equal(expected_pushforward(tau), _support(tau.config), tol)


def is_bijective_on_support(tau: Allocation) -> bool:
    """For simple ``xi``: ``tau`` maps the atoms one-to-one onto the atoms."""
    xi = tau.config.measure
    g = xi.group
    if not xi.simple:
        raise ValueError("bijectivity check needs a simple point measure")
    images = []
    for s in xi.locations:
        s = int(s) if g.kind == "finite" else s
        img = tau(s)
        if xi.index_of(img) is None:
            return False
        images.append(xi.index_of(img))
    return len(set(images)) == len(xi)


def check_reverse_pair(pi: ShiftRule, pi_rev: ShiftRule, c: Configuration) -> bool | None:
    """Both reverse identities on ``c``; ``None`` when an evaluation is censored."""
    g = c.group
    try:
        t = pi(c)
        back = pi_rev(c.shift(g.inverse(t)))
        t2 = pi_rev(c)
        back2 = pi(c.shift(g.inverse(t2)))
    except Censored:
        return None
    return g.equal(back, g.inverse(t)) and g.equal(back2, g.inverse(t2))


def two_point_stay_probabilities(a: float, b: float) -> dict:
    """Stay probabilities on a two-element group with masses ``(a, b)``.

    The base rule moves to the other element.  Balancing the expected
    pushforward gives ``p(max) = (max - min) / max`` and ``p(min) = 0``.
    """
    hi, lo = max(a, b), min(a, b)
    if not lo > 0:
        raise ValueError("masses must be positive")
    return {hi: (hi - lo) / hi, lo: 0.0} if hi != lo else {hi: 0.0}
