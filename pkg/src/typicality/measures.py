"""Measures, marks and configurations on the supported groups.

A configuration is a pair ``(X, xi)`` of a mark ``X`` and a measure ``xi``.
The group acts on both: ``t (X, xi) = (tX, t xi)`` with
``(t xi)(A) = xi(t^{-1} A)``, so an atom at ``s`` moves to ``ts``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable

import numpy as np
from scipy.spatial import cKDTree

from .groups import BoxSet, FiniteGroup, FiniteSet, Group, Torus


# --------------------------------------------------------------------------
# point measures


class PointMeasure:
    """Finite weighted atom list in canonical form.

    Duplicate locations (exact for finite groups, within ``1e-9 L`` on a
    torus) are merged by summing their weights.  Weights must be strictly
    positive.
    """

    __slots__ = ("group", "locations", "weights")

    def __init__(self, group: Group, locations, weights=None):
        self.group = group
        if group.kind == "finite":
            locs = np.asarray(locations, dtype=np.int64).reshape(-1)
            if locs.size and (locs.min() < 0 or locs.max() >= group.n):
                raise ValueError("atom location out of range")
        else:
            locs = group.reduce(np.asarray(locations, dtype=float).reshape(-1, group.d))
        w = np.ones(len(locs)) if weights is None else np.asarray(weights, dtype=float).reshape(-1)
        if len(w) != len(locs):
            raise ValueError("locations and weights differ in length")
        if np.any(~(w > 0)) or np.any(~np.isfinite(w)):
            raise ValueError("atom weights must be strictly positive and finite")
        self.locations, self.weights = _merge(group, locs, w)

    @classmethod
    def _raw(cls, group, locations, weights) -> "PointMeasure":
        # trusted constructor: input already canonical
        obj = cls.__new__(cls)
        obj.group = group
        obj.locations = locations
        obj.weights = weights
        return obj

    @classmethod
    def empty(cls, group: Group) -> "PointMeasure":
        shape = (0,) if group.kind == "finite" else (0, group.d)
        dtype = np.int64 if group.kind == "finite" else float
        return cls._raw(group, np.zeros(shape, dtype=dtype), np.zeros(0))

    @classmethod
    def from_masses(cls, group: FiniteGroup, masses) -> "PointMeasure":
        """Point measure on a finite group from a dense mass vector (zeros dropped)."""
        masses = np.asarray(masses, dtype=float)
        if masses.shape != (group.n,):
            raise ValueError(f"mass vector must have length {group.n}")
        if np.any(masses < 0):
            raise ValueError("masses must be nonnegative")
        nz = np.flatnonzero(masses)
        return cls._raw(group, nz.astype(np.int64), masses[nz].copy())

    @classmethod
    def counting(cls, group: FiniteGroup) -> "PointMeasure":
        return cls.from_masses(group, np.ones(group.n))

    @classmethod
    def from_records(cls, group: Group, records) -> "PointMeasure":
        if not records:
            return cls.empty(group)
        locs, ws = zip(*records)
        return cls(group, list(locs), list(ws))

    def __repr__(self):
        return f"PointMeasure({len(self)} atoms, mass={self.total_mass():g})"

    def __len__(self):
        return len(self.weights)

    @property
    def simple(self) -> bool:
        return bool(np.all(self.weights == 1.0))

    def total_mass(self) -> float:
        return float(self.weights.sum())

    def mask_in(self, C) -> np.ndarray:
        if not len(self):
            return np.zeros(0, dtype=bool)
        return C.contains_many(self.locations)

    def atoms_in(self, C) -> "PointMeasure":
        m = self.mask_in(C)
        return PointMeasure._raw(self.group, self.locations[m], self.weights[m])

    def mass(self, C) -> float:
        return float(self.weights[self.mask_in(C)].sum())

    def shift(self, t) -> "PointMeasure":
        g = self.group
        if g.kind == "finite":
            locs = g.table[g.check(t), self.locations]
            order = np.argsort(locs, kind="stable")
            return PointMeasure._raw(g, locs[order], self.weights[order])
        return PointMeasure._raw(g, g.reduce(self.locations + g.check(t)), self.weights)

    def restrict(self, mask) -> "PointMeasure":
        return PointMeasure._raw(self.group, self.locations[mask], self.weights[mask])

    def add(self, other: "PointMeasure") -> "PointMeasure":
        if other.group != self.group:
            raise ValueError("group mismatch")
        locs = np.concatenate([self.locations, other.locations])
        return PointMeasure(self.group, locs, np.concatenate([self.weights, other.weights]))

    def add_atom(self, location, weight: float = 1.0) -> "PointMeasure":
        loc = np.asarray(location).reshape(1, -1) if self.group.kind == "torus" else [location]
        return self.add(PointMeasure(self.group, loc, [weight]))

    def index_of(self, location) -> int | None:
        """Index of the atom at ``location`` or ``None``."""
        g = self.group
        if not len(self):
            return None
        if g.kind == "finite":
            hit = np.flatnonzero(self.locations == g.check(location))
        else:
            diff = g.signed(self.locations - g.check(location))
            hit = np.flatnonzero(np.all(np.abs(diff) <= g.tol, axis=1))
        return int(hit[0]) if len(hit) else None

    def mass_at(self, location) -> float:
        i = self.index_of(location)
        return 0.0 if i is None else float(self.weights[i])

    def has_origin(self) -> bool:
        return self.index_of(self.group.identity) is not None

    def dense(self) -> np.ndarray:
        if self.group.kind != "finite":
            raise ValueError("dense mass vector only exists on finite groups")
        out = np.zeros(self.group.n)
        out[self.locations] = self.weights
        return out

    def key(self):
        if self.group.kind == "finite":
            return ("pm",) + tuple(self.dense().tolist())
        order = np.lexsort(self.locations.T[::-1])
        return ("pm", tuple(map(tuple, self.locations[order].round(9).tolist())), tuple(self.weights[order].tolist()))

    def to_records(self) -> list:
        if self.group.kind == "finite":
            return [[int(s), float(w)] for s, w in zip(self.locations, self.weights)]
        return [[loc.tolist(), float(w)] for loc, w in zip(self.locations, self.weights)]


def _merge(group, locs, w):
    if len(locs) <= 1:
        return locs, w
    if group.kind == "finite":
        uniq, inv = np.unique(locs, return_inverse=True)
        if len(uniq) == len(locs):
            order = np.argsort(locs, kind="stable")
            return locs[order], w[order]
        return uniq, np.bincount(inv, weights=w, minlength=len(uniq))
    tol = group.tol
    if group.d == 1:
        x = np.sort(locs[:, 0])
        gaps = np.diff(x)
        if (gaps.size == 0 or gaps.min() > tol) and (group.L - x[-1] + x[0]) > tol:
            return locs, w
    tree = cKDTree(locs, boxsize=group.L)
    pairs = tree.query_pairs(r=tol, output_type="ndarray")
    if len(pairs) == 0:
        return locs, w
    parent = np.arange(len(locs))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in pairs:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    roots = np.array([find(i) for i in range(len(locs))])
    uniq, inv = np.unique(roots, return_inverse=True)
    return locs[uniq], np.bincount(inv, weights=w, minlength=len(uniq))


# --------------------------------------------------------------------------
# gridded densities


class DensityMeasure:
    """Piecewise-constant density on a torus grid.

    Cell ``i`` along axis ``a`` covers ``[offset_a + i h_a, offset_a + (i+1) h_a)``
    with ``h_a = L / shape_a``.  Translating the measure only moves the
    offset, so shifts are exact.
    """

    __slots__ = ("group", "values", "offset", "h")

    def __init__(self, group: Torus, values, offset=None):
        if group.kind != "torus":
            raise ValueError("density measures live on tori")
        values = np.asarray(values, dtype=float)
        if values.ndim == 0:
            values = values.reshape((1,) * group.d)
        if values.ndim != group.d:
            raise ValueError(f"density grid must be {group.d}-dimensional")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValueError("density values must be finite and nonnegative")
        self.group = group
        self.values = values
        self.offset = group.reduce(np.zeros(group.d) if offset is None else offset)
        self.h = group.L / np.asarray(values.shape, dtype=float)

    @classmethod
    def uniform(cls, group: Torus, level: float = 1.0) -> "DensityMeasure":
        return cls(group, np.full((1,) * group.d, float(level)))

    def __repr__(self):
        return f"DensityMeasure(shape={self.values.shape}, mass={self.total_mass():g})"

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    def total_mass(self) -> float:
        return float(self.values.sum() * self.cell_volume)

    def shift(self, t) -> "DensityMeasure":
        obj = DensityMeasure.__new__(DensityMeasure)
        obj.group, obj.values, obj.h = self.group, self.values, self.h
        obj.offset = self.group.reduce(self.offset + self.group.check(t))
        return obj

    def _axis_pieces(self, axis: int, a: float, w: float):
        """Overlap of every cell along ``axis`` with the arc ``[a, a + w)``.

        Returns two (start, length) pieces per cell, in absolute coordinates.
        """
        L, h = self.group.L, self.h[axis]
        m = self.values.shape[axis]
        starts = self.offset[axis] + h * np.arange(m)
        s = np.mod(starts - a, L)
        len1 = np.clip(np.minimum(s + h, w) - s, 0, None)
        len2 = np.clip(np.minimum(s + h - L, w), 0, None)
        return (starts, len1), (a, len2)

    def _box_cell_masses(self, corner, extent) -> np.ndarray:
        out = self.values
        overlaps = []
        for axis in range(self.group.d):
            (_, l1), (_, l2) = self._axis_pieces(axis, corner[axis], extent[axis])
            overlaps.append(l1 + l2)
        grid = overlaps[0]
        for ov in overlaps[1:]:
            grid = np.multiply.outer(grid, ov)
        return out * grid

    def mass(self, C: BoxSet) -> float:
        return float(sum(self._box_cell_masses(c, w).sum() for c, w in zip(C.corners, C.extents)))

    def density_at(self, x) -> float:
        idx = self.cell_of(np.asarray(x).reshape(1, -1))[0]
        return float(self.values[tuple(idx)])

    def cell_of(self, xs) -> np.ndarray:
        rel = np.mod(np.asarray(xs, dtype=float) - self.offset, self.group.L)
        idx = np.floor(rel / self.h).astype(np.int64)
        return np.minimum(idx, np.asarray(self.values.shape) - 1)

    def _uniform_in_cell_box(self, cell, corner, extent, rng) -> np.ndarray:
        x = np.empty(self.group.d)
        for axis in range(self.group.d):
            (st, l1), (a, l2) = self._axis_pieces(axis, corner[axis], extent[axis])
            i = cell[axis]
            p1, p2 = l1[i], l2[i]
            if rng.random() * (p1 + p2) < p1:
                # first piece starts at max(cell start, arc start) in arc coordinates
                s = np.mod(st[i] - a, self.group.L)
                x[axis] = a + s + rng.random() * p1
            else:
                x[axis] = a + rng.random() * p2
        return self.group.reduce(x)

    def conditional_sample(self, C: BoxSet, rng):
        """Sample from ``xi(. | C)``; returns ``None`` when ``xi(C) = 0``."""
        masses = [self._box_cell_masses(c, w) for c, w in zip(C.corners, C.extents)]
        totals = np.array([m.sum() for m in masses])
        total = totals.sum()
        if not total > 0:
            return None
        b = rng.choice(len(totals), p=totals / total) if len(totals) > 1 else 0
        flat = masses[b].ravel()
        k = rng.choice(flat.size, p=flat / flat.sum())
        cell = np.unravel_index(k, self.values.shape)
        return self._uniform_in_cell_box(cell, C.corners[b], C.extents[b], rng)

    def sample_points(self, k: int, rng) -> np.ndarray:
        """``k`` i.i.d. points from ``xi(. | G)``."""
        flat = self.values.ravel()
        cells = rng.choice(flat.size, size=k, p=flat / flat.sum())
        idx = np.stack(np.unravel_index(cells, self.values.shape), axis=1)
        pts = self.offset + (idx + rng.random((k, self.group.d))) * self.h
        return self.group.reduce(pts)

    def atomize(self) -> PointMeasure:
        """Point measure with one atom per charged cell, at the cell centre."""
        idx = np.stack(np.unravel_index(np.arange(self.values.size), self.values.shape), axis=1)
        masses = self.values.ravel() * self.cell_volume
        keep = masses > 0
        centres = self.offset + (idx[keep] + 0.5) * self.h
        return PointMeasure(self.group, centres, masses[keep])

    def key(self):
        return ("dm", self.values.shape, tuple(self.offset.round(9).tolist()), self.values.tobytes())


# --------------------------------------------------------------------------
# marks


class Mark:
    """Shiftable auxiliary random element."""

    def shift(self, t) -> "Mark":
        raise NotImplementedError

    def key(self):
        raise NotImplementedError


@dataclass(frozen=True)
class EmptyMark(Mark):
    def shift(self, t):
        return self

    def key(self):
        return ()


@dataclass(frozen=True, eq=False)
class MeasureMark(Mark):
    """A measure carried as a mark (point pattern, density, or the driving
    measure of a Cox process)."""

    measure: Any

    def shift(self, t):
        return MeasureMark(self.measure.shift(t))

    def key(self):
        return self.measure.key()


PointPattern = MeasureMark


@dataclass(frozen=True, eq=False)
class GridField(Mark):
    """Random field ``X = (X_s)`` with ``(tX)_s = X_{t^{-1}s}``.

    On a finite group ``values[s]`` is the value at element ``s``.  On a torus
    the field is constant on grid cells whose origin sits at ``offset``.
    """

    group: Group
    values: np.ndarray
    offset: Any = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if self.group.kind == "finite":
            if vals.shape != (self.group.n,):
                raise ValueError("finite-group field needs one value per element")
        else:
            if vals.ndim != self.group.d:
                raise ValueError("torus field grid has wrong dimension")
            off = np.zeros(self.group.d) if self.offset is None else self.offset
            object.__setattr__(self, "offset", self.group.reduce(off))

    def shift(self, t):
        g = self.group
        if g.kind == "finite":
            return GridField(g, self.values[g.table[g.inverse(t)]])
        return GridField(g, self.values, g.reduce(self.offset + g.check(t)))

    def value_at(self, x) -> float:
        g = self.group
        if g.kind == "finite":
            return float(self.values[g.check(x)])
        h = g.L / np.asarray(self.values.shape)
        idx = np.floor(np.mod(g.check(x) - self.offset, g.L) / h).astype(int)
        idx = np.minimum(idx, np.asarray(self.values.shape) - 1)
        return float(self.values[tuple(idx)])

    def key(self):
        if self.group.kind == "finite":
            return ("field",) + tuple(self.values.tolist())
        return ("field", tuple(self.offset.round(9).tolist()), self.values.tobytes())


@dataclass(frozen=True)
class FixedMark(Mark):
    """Mark left intact by every shift (e.g. an auxiliary uniform variable)."""

    value: Any

    def shift(self, t):
        return self

    def key(self):
        return ("fixed", self.value)


@dataclass(frozen=True, eq=False)
class RegionMark(Mark):
    """A measurable set carried along by shifts (e.g. an observation window)."""

    region: Any

    def shift(self, t):
        return RegionMark(self.region.translate(t))

    def key(self):
        r = self.region
        if isinstance(r, FiniteSet):
            return ("region", r.members)
        return ("region", tuple(r.corners.round(9).ravel().tolist()), tuple(r.extents.ravel().tolist()))


@dataclass(frozen=True, eq=False)
class LatticeMark(Mark):
    """Shifted lattice ``offset + spacing Z^d`` on a torus whose side is a
    multiple of ``spacing``."""

    group: Torus
    offset: Any
    spacing: float = 1.0

    def __post_init__(self):
        ratio = self.group.L / self.spacing
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("torus side must be a multiple of the lattice spacing")
        object.__setattr__(self, "offset", np.mod(np.asarray(self.offset, dtype=float).reshape(self.group.d), self.spacing))

    def shift(self, t):
        return LatticeMark(self.group, self.offset + self.group.check(t), self.spacing)

    def cell_containing_origin(self) -> np.ndarray:
        """Corner ``c`` (chart coordinates, in ``(-spacing, 0]``) of the lattice
        cell ``[c, c + spacing)^d`` that contains the origin."""
        o = np.mod(self.offset, self.spacing)
        return np.where(o > 0, o - self.spacing, 0.0)

    def key(self):
        return ("lattice", tuple(self.offset.round(9).tolist()), self.spacing)


@dataclass(frozen=True)
class TupleMark(Mark):
    items: tuple

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))

    def shift(self, t):
        return TupleMark(tuple(m.shift(t) for m in self.items))

    def key(self):
        return ("tuple",) + tuple(m.key() for m in self.items)

    def __getitem__(self, i):
        return self.items[i]


# --------------------------------------------------------------------------
# configurations


@dataclass(frozen=True, eq=False)
class Configuration:
    """The pair ``(X, xi)``."""

    mark: Mark
    measure: Any

    @property
    def group(self) -> Group:
        return self.measure.group

    def shift(self, t) -> "Configuration":
        return Configuration(self.mark.shift(t), self.measure.shift(t))

    def key(self):
        return (self.mark.key(), self.measure.key())


def shift_measure(t, mu):
    return mu.shift(t)


def shift_config(t, c: Configuration) -> Configuration:
    return c.shift(t)


def total_mass(mu) -> float:
    return mu.total_mass()


def atoms_in(mu: PointMeasure, C) -> PointMeasure:
    return mu.atoms_in(C)


def conditional_sample(xi, C, rng, telemetry: Counter | None = None):
    """Draw from ``xi(. | C)``.

    When ``xi(C) = 0`` the fixed fallback law is the point mass at the
    identity; the event is counted under ``telemetry["fallback"]``.
    """
    g = xi.group
    if isinstance(xi, DensityMeasure):
        out = xi.conditional_sample(C, rng)
        if out is not None:
            return out
    else:
        m = xi.mask_in(C)
        w = xi.weights[m]
        tot = w.sum()
        if tot > 0:
            locs = xi.locations[m]
            i = rng.choice(len(w), p=w / tot) if len(w) > 1 else 0
            return int(locs[i]) if g.kind == "finite" else locs[i].copy()
    if telemetry is not None:
        telemetry["fallback"] += 1
    return g.identity


def conditional_law(xi: PointMeasure, C) -> list:
    """Exact ``xi(. | C)`` as ``[(location, probability)]``; ``[(e, 1)]`` if ``xi(C) = 0``."""
    m = xi.mask_in(C)
    w = xi.weights[m]
    tot = w.sum()
    if not tot > 0:
        return [(xi.group.identity, 1.0)]
    locs = xi.locations[m]
    if xi.group.kind == "finite":
        return [(int(s), float(p)) for s, p in zip(locs, w / tot)]
    return [(s.copy(), float(p)) for s, p in zip(locs, w / tot)]


def pushforward(mu: PointMeasure, f: Callable) -> PointMeasure:
    """Image measure: an atom at ``s`` of weight ``w`` goes to ``f(s)``."""
    if not len(mu):
        return mu
    g = mu.group
    if g.kind == "finite":
        locs = [f(int(s)) for s in mu.locations]
    else:
        locs = np.array([np.asarray(f(s.copy()), dtype=float).reshape(g.d) for s in mu.locations])
    return PointMeasure(g, locs, mu.weights.copy())


def measures_equal(mu: PointMeasure, nu: PointMeasure, tol: float = 1e-12) -> bool:
    """Multiset equality of atoms; weights within ``tol``, torus locations within ``1e-9 L``."""
    if mu.group != nu.group:
        raise ValueError("group mismatch")
    g = mu.group
    if g.kind == "finite":
        return bool(np.all(np.abs(mu.dense() - nu.dense()) <= tol))
    if len(mu) != len(nu):
        return False
    if not len(mu):
        return True
    dist, idx = cKDTree(nu.locations, boxsize=g.L).query(mu.locations, k=1)
    if np.any(dist > g.tol * np.sqrt(g.d)) or len(np.unique(idx)) != len(idx):
        return False
    return bool(np.all(np.abs(mu.weights - nu.weights[idx]) <= tol))


# --------------------------------------------------------------------------
# exact laws of configurations on finite groups


class FiniteLaw:
    """Finitely supported probability law of configurations, keyed by
    :meth:`Configuration.key` (or any hashable outcome)."""

    def __init__(self, pairs: Iterable = ()):
        self._atoms: dict = {}
        for outcome, p in pairs:
            self.add(outcome, p)

    def add(self, outcome, p: float):
        if p == 0:
            return
        k = outcome.key() if hasattr(outcome, "key") else outcome
        if k in self._atoms:
            self._atoms[k][1] += p
        else:
            self._atoms[k] = [outcome, p]

    def __len__(self):
        return len(self._atoms)

    def items(self):
        return [(o, p) for o, p in self._atoms.values()]

    def probabilities(self) -> dict:
        return {k: v[1] for k, v in self._atoms.items()}

    def total(self) -> float:
        return float(sum(p for _, p in self._atoms.values()))

    def normalized(self) -> "FiniteLaw":
        tot = self.total()
        return FiniteLaw((o, p / tot) for o, p in self.items())

    def map(self, fn: Callable) -> "FiniteLaw":
        return FiniteLaw((fn(o), p) for o, p in self.items())

    def expect(self, f: Callable) -> float:
        return float(sum(p * f(o) for o, p in self.items()))

    def sample(self, rng, size: int | None = None):
        outs = self.items()
        probs = np.array([p for _, p in outs])
        idx = rng.choice(len(outs), size=size, p=probs / probs.sum())
        if size is None:
            return outs[int(idx)][0]
        return [outs[int(i)][0] for i in idx]

    def __repr__(self):
        return f"FiniteLaw({len(self)} outcomes)"


# --------------------------------------------------------------------------
# batches of torus point configurations (vectorized Monte Carlo paths)


@dataclass
class PointBatch:
    """``B`` point configurations on a torus in compressed-row layout.

    Atoms of configuration ``i`` are ``locations[offsets[i]:offsets[i+1]]``.
    Marks are empty.
    """

    group: Torus
    offsets: np.ndarray
    locations: np.ndarray
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.weights is None:
            self.weights = np.ones(len(self.locations))

    def __len__(self):
        return len(self.offsets) - 1

    @property
    def counts(self) -> np.ndarray:
        return np.diff(self.offsets)

    @property
    def segment(self) -> np.ndarray:
        return np.repeat(np.arange(len(self)), self.counts)

    def shift(self, ts) -> "PointBatch":
        """Shift configuration ``i`` by ``ts[i]``."""
        ts = np.asarray(ts, dtype=float).reshape(len(self), self.group.d)
        locs = self.group.reduce(self.locations + ts[self.segment])
        return PointBatch(self.group, self.offsets, locs, self.weights)

    def measure(self, i: int) -> PointMeasure:
        a, b = self.offsets[i], self.offsets[i + 1]
        return PointMeasure(self.group, self.locations[a:b], self.weights[a:b])

    def configuration(self, i: int) -> Configuration:
        return Configuration(EmptyMark(), self.measure(i))

    @classmethod
    def from_measures(cls, measures) -> "PointBatch":
        measures = list(measures)
        g = measures[0].group
        counts = np.array([len(m) for m in measures])
        offsets = np.concatenate([[0], np.cumsum(counts)])
        locs = np.concatenate([m.locations for m in measures]) if counts.sum() else np.zeros((0, g.d))
        w = np.concatenate([m.weights for m in measures]) if counts.sum() else np.zeros(0)
        return cls(g, offsets, locs.reshape(-1, g.d), w)
