"""Groups, Haar measure and measurable sets.

Two kinds of group are supported: finite groups given by a Cayley table
(Haar measure = counting measure) and flat tori ``R^d mod L`` (Haar measure =
Lebesgue volume).  Both are unimodular, so the modular function is the
constant 1.

Finite group elements are integer indices ``0..n-1``.  Torus elements are
float vectors of shape ``(d,)`` reduced to ``[0, L)``.
"""

from __future__ import annotations

import itertools
from functools import cached_property

import numpy as np


class Group:
    """Common interface of :class:`FiniteGroup` and :class:`Torus`."""

    kind: str
    abelian: bool
    modular_delta = 1.0

    @property
    def identity(self):
        raise NotImplementedError

    def compose(self, s, t):
        raise NotImplementedError

    def inverse(self, t):
        raise NotImplementedError

    def modular_function(self, t) -> float:
        """Modular function; identically 1 for every supported group."""
        return 1.0

    def act_on_set(self, t, C):
        """Return the left translate ``tC``."""
        self._check_set(C)
        return C.translate(t)

    def haar(self, C) -> float:
        self._check_set(C)
        return C.haar

    def uniform_sample(self, C, rng: np.random.Generator):
        """Draw from ``lambda(. | C)``."""
        self._check_set(C)
        if C.haar <= 0:
            raise ValueError("null set: cannot sample uniformly from a set of Haar measure 0")
        return C.sample(rng)

    def _check_set(self, C):
        if C.group is not self and C.group != self:
            raise ValueError("set does not belong to this group")


class FiniteGroup(Group):
    """Finite group defined by its Cayley table.

    ``table[s, t]`` is the index of the product ``st``.  The group axioms are
    verified exhaustively at construction.
    """

    kind = "finite"

    def __init__(self, table, name: str | None = None, labels=None):
        table = np.asarray(table)
        if table.ndim != 2 or table.shape[0] != table.shape[1] or table.shape[0] == 0:
            raise ValueError("Cayley table must be a non-empty square array")
        if not np.issubdtype(table.dtype, np.integer):
            if not np.all(table == np.round(table)):
                raise ValueError("Cayley table entries must be integers")
        table = table.astype(np.int64)
        n = table.shape[0]
        if table.min() < 0 or table.max() >= n:
            raise ValueError("Cayley table entries must lie in 0..n-1")
        self.table = table
        self.table.setflags(write=False)
        self.n = n
        self.name = name or f"G{n}"
        self.labels = list(labels) if labels is not None else None
        self._identity = self._find_identity()
        self._inverse = self._find_inverses()
        if not self.is_associative():
            raise ValueError("Cayley table is not associative")
        self.abelian = bool(np.array_equal(table, table.T))

    def __repr__(self):
        return f"FiniteGroup({self.name}, n={self.n})"

    def __eq__(self, other):
        return isinstance(other, FiniteGroup) and np.array_equal(self.table, other.table)

    def __hash__(self):
        return hash((self.n, self.table.tobytes()))

    def _find_identity(self) -> int:
        ar = np.arange(self.n)
        for e in range(self.n):
            if np.array_equal(self.table[e], ar) and np.array_equal(self.table[:, e], ar):
                return e
        raise ValueError("Cayley table has no two-sided identity")

    def _find_inverses(self) -> np.ndarray:
        inv = np.empty(self.n, dtype=np.int64)
        for s in range(self.n):
            right = np.flatnonzero(self.table[s] == self._identity)
            if len(right) != 1 or self.table[right[0], s] != self._identity:
                raise ValueError(f"element {s} has no two-sided inverse")
            inv[s] = right[0]
        inv.setflags(write=False)
        return inv

    def is_associative(self) -> bool:
        # (st)u == s(tu) for all triples, as two n^3 gathers
        T = self.table
        left = T[T[:, :, None], np.arange(self.n)[None, None, :]]
        right = T[np.arange(self.n)[:, None, None], T[None, :, :]]
        return bool(np.array_equal(left, right))

    @property
    def identity(self) -> int:
        return self._identity

    @property
    def inverse_table(self) -> np.ndarray:
        return self._inverse

    @property
    def haar_total(self) -> float:
        return float(self.n)

    def elements(self) -> range:
        return range(self.n)

    def check(self, t) -> int:
        if isinstance(t, (bool, np.bool_)) or not isinstance(t, (int, np.integer)):
            raise ValueError(f"finite group element must be an integer index, got {t!r}")
        if not 0 <= t < self.n:
            raise ValueError(f"element index {t} out of range 0..{self.n - 1}")
        return int(t)

    def compose(self, s, t) -> int:
        return int(self.table[self.check(s), self.check(t)])

    def inverse(self, t) -> int:
        return int(self._inverse[self.check(t)])

    def equal(self, s, t) -> bool:
        return self.check(s) == self.check(t)

    def full_set(self) -> "FiniteSet":
        return FiniteSet(self, range(self.n))

    @cached_property
    def left_translation(self) -> np.ndarray:
        """``left_translation[t]`` maps index ``s`` to ``ts``; equal to the table."""
        return self.table

    @classmethod
    def cyclic(cls, n: int) -> "FiniteGroup":
        if n < 1:
            raise ValueError("cyclic group order must be positive")
        ar = np.arange(n)
        return cls((ar[:, None] + ar[None, :]) % n, name=f"Z{n}")

    @classmethod
    def symmetric(cls, k: int) -> "FiniteGroup":
        """Symmetric group on ``k`` letters, ``(st)(i) = s(t(i))``.

        Element 0 is the identity permutation; the rest follow
        :func:`itertools.permutations` order.
        """
        perms = list(itertools.permutations(range(k)))
        index = {p: i for i, p in enumerate(perms)}
        table = np.empty((len(perms), len(perms)), dtype=np.int64)
        for i, s in enumerate(perms):
            for j, t in enumerate(perms):
                table[i, j] = index[tuple(s[t[m]] for m in range(k))]
        return cls(table, name=f"S{k}", labels=perms)

    @classmethod
    def dihedral(cls, m: int) -> "FiniteGroup":
        """Dihedral group of order ``2m``: index ``i < m`` is rotation ``r^i``,
        index ``m + i`` is the reflection ``s r^i``."""
        n = 2 * m
        table = np.empty((n, n), dtype=np.int64)
        for a in range(n):
            fa, ra = divmod(a, m)
            for b in range(n):
                fb, rb = divmod(b, m)
                # s^fa r^ra s^fb r^rb with r s = s r^-1
                r = (rb + (ra if fb == 0 else -ra)) % m
                table[a, b] = ((fa + fb) % 2) * m + r
        return cls(table, name=f"D{m}")


class Torus(Group):
    """Flat torus ``R^d mod L`` under coordinatewise addition."""

    kind = "torus"
    abelian = True

    def __init__(self, d: int, L: float):
        if int(d) != d or d < 1:
            raise ValueError("torus dimension must be a positive integer")
        if not L > 0:
            raise ValueError("torus side length must be positive")
        self.d = int(d)
        self.L = float(L)
        self.tol = 1e-9 * self.L

    def __repr__(self):
        return f"Torus(d={self.d}, L={self.L:g})"

    def __eq__(self, other):
        return isinstance(other, Torus) and other.d == self.d and other.L == self.L

    def __hash__(self):
        return hash(("torus", self.d, self.L))

    @property
    def identity(self) -> np.ndarray:
        return np.zeros(self.d)

    @property
    def haar_total(self) -> float:
        return self.L**self.d

    def reduce(self, x) -> np.ndarray:
        """Reduce coordinates into ``[0, L)``; works on ``(..., d)`` arrays."""
        x = np.mod(np.asarray(x, dtype=float), self.L)
        # np.mod can round tiny negatives up to exactly L
        return np.where(x >= self.L, x - self.L, x)

    def signed(self, x) -> np.ndarray:
        """Chart coordinates in ``[-L/2, L/2)``."""
        return np.mod(np.asarray(x, dtype=float) + self.L / 2, self.L) - self.L / 2

    def check(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if t.shape != (self.d,):
            raise ValueError(f"torus element must have shape ({self.d},), got {t.shape}")
        return self.reduce(t)

    def compose(self, s, t) -> np.ndarray:
        return self.reduce(self.check(s) + self.check(t))

    def inverse(self, t) -> np.ndarray:
        return self.reduce(-self.check(t))

    def equal(self, s, t) -> bool:
        return bool(np.all(np.abs(self.signed(self.check(s) - self.check(t))) <= self.tol))

    def distance(self, a, b) -> float:
        return float(np.sqrt(np.sum(self.signed(np.asarray(a) - np.asarray(b)) ** 2)))

    def full_set(self) -> "BoxSet":
        return BoxSet(self, [np.zeros(self.d)], [np.full(self.d, self.L)])

    def box(self, corner, extent) -> "BoxSet":
        return BoxSet(self, [corner], [extent])


class FiniteSet:
    """Subset of a finite group, stored as a sorted tuple of indices."""

    def __init__(self, group: FiniteGroup, members):
        self.group = group
        members = sorted({group.check(int(m)) for m in members})
        self.members = tuple(members)

    def __repr__(self):
        return f"FiniteSet({list(self.members)})"

    def __eq__(self, other):
        return isinstance(other, FiniteSet) and other.group == self.group and other.members == self.members

    def __hash__(self):
        return hash(self.members)

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)

    @property
    def haar(self) -> float:
        return float(len(self.members))

    def contains(self, t) -> bool:
        return int(t) in self.members

    def contains_many(self, ts) -> np.ndarray:
        return np.isin(np.asarray(ts, dtype=np.int64), self.members)

    def translate(self, t) -> "FiniteSet":
        t = self.group.check(t)
        return FiniteSet(self.group, self.group.table[t, list(self.members)] if self.members else [])

    def sample(self, rng) -> int:
        return int(self.members[rng.integers(len(self.members))])


class BoxSet:
    """Finite disjoint union of half-open boxes ``[c, c + w)`` on a torus.

    Boxes may wrap around.  Overlapping boxes are rejected, so the Haar measure
    is the sum of box volumes.  Boundaries are Lebesgue-null, hence every
    ``BoxSet`` is a continuity set.
    """

    def __init__(self, group: Torus, corners, extents):
        self.group = group
        corners = np.asarray(corners, dtype=float).reshape(-1, group.d)
        extents = np.asarray(extents, dtype=float).reshape(-1, group.d)
        if corners.shape != extents.shape:
            raise ValueError("corners and extents must have matching shapes")
        if np.any(extents < 0) or np.any(extents > group.L):
            raise ValueError("box extents must lie in [0, L]")
        keep = np.all(extents > 0, axis=1)
        self.corners = group.reduce(corners[keep])
        self.extents = extents[keep]
        for i, j in itertools.combinations(range(len(self.corners)), 2):
            if self._overlap(i, j):
                raise ValueError(f"boxes {i} and {j} overlap")
        self.corners.setflags(write=False)
        self.extents.setflags(write=False)

    def __repr__(self):
        parts = [f"{c.tolist()}+{w.tolist()}" for c, w in zip(self.corners, self.extents)]
        return f"BoxSet({', '.join(parts)})"

    def _overlap(self, i, j) -> bool:
        L = self.group.L
        a, w = self.corners[i], self.extents[i]
        b, v = self.corners[j], self.extents[j]
        per_axis = (np.mod(b - a, L) < w - self.group.tol) | (np.mod(a - b, L) < v - self.group.tol)
        return bool(np.all(per_axis))

    @property
    def haar(self) -> float:
        return float(np.sum(np.prod(self.extents, axis=1)))

    def contains_many(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=float).reshape(-1, self.group.d)
        rel = np.mod(xs[:, None, :] - self.corners[None, :, :], self.group.L)
        return np.any(np.all(rel < self.extents[None, :, :], axis=2), axis=1)

    def contains(self, x) -> bool:
        return bool(self.contains_many(self.group.check(x))[0])

    def translate(self, t) -> "BoxSet":
        t = self.group.check(t)
        return BoxSet(self.group, self.corners + t, self.extents)

    def sample(self, rng) -> np.ndarray:
        vol = np.prod(self.extents, axis=1)
        i = rng.choice(len(vol), p=vol / vol.sum()) if len(vol) > 1 else 0
        return self.group.reduce(self.corners[i] + rng.random(self.group.d) * self.extents[i])


def compose(g: Group, s, t):
    return g.compose(s, t)


def inverse(g: Group, t):
    return g.inverse(t)


def act_on_set(g: Group, t, C):
    return g.act_on_set(t, C)


def haar(g: Group, C) -> float:
    return g.haar(C)


def uniform_sample(g: Group, C, rng):
    return g.uniform_sample(C, rng)


def group_from_descriptor(desc: dict) -> Group:
    """Build a group from a config mapping.

    Accepted forms: ``{"kind": "cyclic", "n": 6}``, ``{"kind": "symmetric", "k": 3}``,
    ``{"kind": "dihedral", "m": 4}``, ``{"kind": "table", "cayley": [[...]]}``,
    ``{"kind": "torus", "d": 2, "L": 10.0}``.
    """
    kind = desc.get("kind")
    if kind == "cyclic":
        return FiniteGroup.cyclic(int(desc["n"]))
    if kind == "symmetric":
        return FiniteGroup.symmetric(int(desc.get("k", 3)))
    if kind == "dihedral":
        return FiniteGroup.dihedral(int(desc["m"]))
    if kind == "table":
        return FiniteGroup(desc["cayley"], name=desc.get("name"))
    if kind == "torus":
        return Torus(int(desc.get("d", 1)), float(desc["L"]))
    raise ValueError(f"unknown group kind {kind!r}")
