"""Battery of real-vector functionals of configurations.

Each :class:`Functional` has a declared output dimension.  Functionals on
torus point measures may also carry a vectorized ``batch`` variant
evaluating a whole :class:`PointBatch`; tests check both paths agree.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

from .measures import (
    Configuration,
    DensityMeasure,
    GridField,
    MeasureMark,
    PointBatch,
    PointMeasure,
    TupleMark,
)


@dataclass(frozen=True, eq=False)
class Functional:
    name: str
    evaluate: Callable[[Configuration], np.ndarray]
    dim: int = 1
    batch: Callable[[PointBatch], np.ndarray] | None = None

    def __call__(self, c: Configuration) -> np.ndarray:
        out = np.asarray(self.evaluate(c), dtype=float).reshape(-1)
        if out.shape != (self.dim,):
            raise ValueError(f"functional {self.name!r} returned shape {out.shape}, declared {self.dim}")
        return out

    def on_batch(self, pb: PointBatch) -> np.ndarray:
        return np.asarray(self.batch(pb), dtype=float).reshape(len(pb), self.dim)


def evaluate_all(fs, c: Configuration) -> np.ndarray:
    return np.concatenate([f(c) for f in fs]) if fs else np.zeros(0)


def evaluate_batch(fs, pb: PointBatch) -> np.ndarray:
    return np.hstack([f.on_batch(pb) for f in fs]) if fs else np.zeros((len(pb), 0))


def _points(c: Configuration) -> PointMeasure:
    xi = c.measure
    if not isinstance(xi, PointMeasure):
        raise ValueError("functional needs a point measure")
    return xi


def _norms(g, locs) -> np.ndarray:
    return np.sqrt(np.sum(g.signed(locs) ** 2, axis=1))


# --------------------------------------------------------------------------
# point-measure functionals on tori


def count_ball(r: float) -> Functional:
    """Mass within wrapped distance ``r`` of the origin."""

    def ev(c):
        xi = _points(c)
        return [xi.weights[_norms(xi.group, xi.locations) <= r].sum()]

    def batch(pb):
        inside = _norms(pb.group, pb.locations) <= r
        return np.bincount(pb.segment, weights=pb.weights * inside, minlength=len(pb))

    return Functional(f"count_ball({r:g})", ev, 1, batch)


def _off_origin(g, locs):
    return _norms(g, locs) > g.tol


def gap_vector() -> Functional:
    """Circle: distances to the nearest atom ahead of and behind the
    origin, excluding an atom at the origin; ``L`` when there is none."""

    def ev(c):
        xi = _points(c)
        g = xi.group
        x = g.signed(xi.locations[:, 0])
        x = x[np.abs(x) > g.tol]
        ahead = np.mod(x, g.L)
        behind = np.mod(-x, g.L)
        return [ahead.min() if len(x) else g.L, behind.min() if len(x) else g.L]

    def batch(pb):
        g = pb.group
        x = g.signed(pb.locations[:, 0])
        keep = np.abs(x) > g.tol
        seg = pb.segment[keep]
        out = np.full((len(pb), 2), g.L)
        np.minimum.at(out[:, 0], seg, np.mod(x[keep], g.L))
        np.minimum.at(out[:, 1], seg, np.mod(-x[keep], g.L))
        return out

    return Functional("gap_vector", ev, 2, batch)


def nearest_distances(k: int = 2, cap: float | None = None) -> Functional:
    """Distances from the origin to its ``k`` nearest atoms other than an
    atom at the origin, clipped at ``cap`` (missing atoms count as ``cap``,
    default half the torus diagonal)."""

    def fill(g):
        return cap if cap is not None else g.L * np.sqrt(g.d) / 2

    def ev(c):
        xi = _points(c)
        g = xi.group
        d = _norms(g, xi.locations)
        d = np.sort(d[d > g.tol])[:k]
        out = np.full(k, fill(g))
        out[: len(d)] = np.minimum(d, fill(g))
        return out

    def batch(pb):
        g = pb.group
        d = _norms(g, pb.locations)
        seg = pb.segment
        keep = d > g.tol
        d, seg = d[keep], seg[keep]
        order = np.lexsort((d, seg))
        d, seg = d[order], seg[order]
        starts = np.searchsorted(seg, np.arange(len(pb)))
        rank = np.arange(len(seg)) - starts[seg]
        out = np.full((len(pb), k), fill(g))
        sel = rank < k
        out[seg[sel], rank[sel]] = np.minimum(d[sel], fill(g))
        return out

    return Functional(f"nearest_distances({k})", ev, k, batch)


def closest_point_indicator() -> Functional:
    """1 if some atom is strictly closer to the origin than to every other
    atom, else 0.  An atom at the origin itself is not a candidate."""

    def indicator(g, locs):
        pts = locs[_off_origin(g, locs)]
        if len(pts) == 0:
            return 0.0
        if len(pts) == 1:
            return 1.0
        dnn, _ = cKDTree(pts, boxsize=g.L).query(pts, k=2)
        return float(np.any(_norms(g, pts) < dnn[:, 1]))

    def ev(c):
        xi = _points(c)
        return [indicator(xi.group, xi.locations)]

    def batch(pb):
        o = pb.offsets
        return np.array([indicator(pb.group, pb.locations[o[i]:o[i + 1]]) for i in range(len(pb))])

    return Functional("closest_point_indicator", ev, 1, batch)


def mass_at_origin() -> Functional:
    def ev(c):
        return [c.measure.mass_at(c.group.identity)]

    return Functional("mass_at_origin", ev, 1)


def mass_vector(n: int) -> Functional:
    """Finite groups of order ``n``: the vector of masses ``xi({s})``."""

    def ev(c):
        return c.measure.dense()

    return Functional("mass_vector", ev, n)


def box_mass(half: float) -> Functional:
    """Mass of ``[-half, half)^d`` (point or density measure)."""

    def ev(c):
        g = c.group
        box = g.box(np.full(g.d, -half), np.full(g.d, 2 * half))
        return [c.measure.mass(box)]

    return Functional(f"box_mass({half:g})", ev, 1)


# --------------------------------------------------------------------------
# mark functionals


def _mark(c: Configuration, index: int | None):
    m = c.mark
    if index is not None:
        if not isinstance(m, TupleMark):
            raise ValueError("mark is not a tuple")
        m = m.items[index]
    return m


def field_at_origin(index: int | None = None) -> Functional:
    def ev(c):
        m = _mark(c, index)
        if not isinstance(m, GridField):
            raise ValueError("mark is not a field")
        return [m.value_at(c.group.identity)]

    return Functional("field_at_origin", ev, 1)


def mark_measure_box(half: float, index: int | None = None) -> Functional:
    """Mass of the mark's measure in ``[-half, half)^d`` (e.g. the Cox driver)."""

    def ev(c):
        m = _mark(c, index)
        if not isinstance(m, MeasureMark):
            raise ValueError("mark carries no measure")
        g = c.group
        box = g.box(np.full(g.d, -half), np.full(g.d, 2 * half))
        return [m.measure.mass(box)]

    return Functional(f"mark_box_mass({half:g})", ev, 1)


def mark_density_at_origin(index: int | None = None) -> Functional:
    def ev(c):
        m = _mark(c, index)
        if not isinstance(m, MeasureMark) or not isinstance(m.measure, DensityMeasure):
            raise ValueError("mark carries no density")
        return [m.measure.density_at(c.group.identity)]

    return Functional("mark_density_at_origin", ev, 1)


# --------------------------------------------------------------------------
# registry for scenario configs


FUNCTIONALS = {
    "count_ball": lambda r=1.0: count_ball(r),
    "gap_vector": lambda: gap_vector(),
    "nearest_distances": lambda k=2, cap=None: nearest_distances(k, cap),
    "closest_point_indicator": lambda: closest_point_indicator(),
    "mass_at_origin": lambda: mass_at_origin(),
    "box_mass": lambda half=1.0: box_mass(half),
    "field_at_origin": lambda index=None: field_at_origin(index),
    "mark_box_mass": lambda half=1.0, index=None: mark_measure_box(half, index),
    "mark_density_at_origin": lambda index=None: mark_density_at_origin(index),
}


def functional_from_descriptor(desc, group=None) -> Functional:
    """Build a functional from ``"name"`` or ``{"name": ..., **params}``."""
    if isinstance(desc, str):
        desc = {"name": desc}
    desc = dict(desc)
    name = desc.pop("name")
    if name == "mass_vector":
        if group is None or group.kind != "finite":
            raise ValueError("mass_vector needs a finite group")
        return mass_vector(group.n)
    if name not in FUNCTIONALS:
        raise KeyError(f"unknown functional {name!r}")
    return FUNCTIONALS[name](**desc)
