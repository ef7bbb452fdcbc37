"""Samplers for stationary processes, their Palm versions, Cox processes and
stationary independent backgrounds.

Every sampler is a pure function of its parameters and the passed
``numpy.random.Generator``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .groups import FiniteGroup, Group, Torus
from .measures import (
    Configuration,
    DensityMeasure,
    EmptyMark,
    FiniteLaw,
    FixedMark,
    GridField,
    LatticeMark,
    MeasureMark,
    PointBatch,
    PointMeasure,
    RegionMark,
    TupleMark,
    conditional_sample,
)

# Side of the torus used as a stand-in for the plane: large enough that no
# windowed computation ever sees the wrap-around.
PLANE_L = 1000.0


def plane(d: int = 2) -> Torus:
    return Torus(d, PLANE_L)


@dataclass
class ScenarioSampler:
    """Named generator of i.i.d. configurations.

    ``draw_batch``, when present, returns a :class:`PointBatch` of ``n``
    configurations with empty marks drawn from the same law; it lets the
    Monte Carlo engines vectorize.  ``exact`` holds the law for finite-group
    samplers.
    """

    name: str
    group: Group
    draw: Callable
    claims_stationary: bool = False
    claims_mass_stationary: bool = False
    intensity: float | None = None
    draw_batch: Callable | None = None
    exact: FiniteLaw | None = None
    telemetry: Counter = field(default_factory=Counter)

    def sample(self, rng, n: int) -> list:
        return [self.draw(rng) for _ in range(n)]

    def metadata(self) -> dict:
        return {
            "name": self.name,
            "group": repr(self.group),
            "claims_stationary": self.claims_stationary,
            "claims_mass_stationary": self.claims_mass_stationary,
            "intensity": self.intensity,
        }


def _check_intensity(intensity):
    if not intensity > 0:
        raise ValueError("intensity must be positive")


def sample_poisson(g: Group, intensity: float, rng) -> PointMeasure:
    """Stationary Poisson process on a torus (finite groups: i.i.d. Poisson masses)."""
    _check_intensity(intensity)
    if g.kind == "finite":
        return sample_poisson_counts(g, intensity, rng)
    k = rng.poisson(intensity * g.haar_total)
    return PointMeasure._raw(g, rng.random((k, g.d)) * g.L, np.ones(k))


def sample_poisson_counts(g: FiniteGroup, intensity: float, rng) -> PointMeasure:
    """I.i.d. Poisson(intensity) masses on the elements of a finite group.

    This is a stationary random measure, but not a simple point process.
    """
    _check_intensity(intensity)
    return PointMeasure.from_masses(g, rng.poisson(intensity, size=g.n).astype(float))


def poisson_batch(g: Torus, intensity: float, n: int, rng, with_origin: bool = False) -> PointBatch:
    """``n`` independent torus Poisson processes, optionally each plus an atom at 0."""
    _check_intensity(intensity)
    counts = rng.poisson(intensity * g.haar_total, size=n) + int(with_origin)
    offsets = np.concatenate([[0], np.cumsum(counts)])
    locs = rng.random((offsets[-1], g.d)) * g.L
    if with_origin:
        locs[offsets[:-1]] = 0.0
    return PointBatch(g, offsets, locs)


def palm_of_poisson(g: Group, intensity: float, rng) -> Configuration:
    """``eta + delta_e`` with ``eta`` a stationary Poisson process."""
    eta = sample_poisson(g, intensity, rng)
    if g.kind == "torus":
        locs = np.vstack([np.zeros((1, g.d)), eta.locations])
        return Configuration(EmptyMark(), PointMeasure._raw(g, locs, np.ones(len(locs))))
    return Configuration(EmptyMark(), eta.add_atom(g.identity))


def palm_size_biased(stationary: ScenarioSampler, n: int, rng, telemetry: Counter | None = None) -> list:
    """Weighted Palm sample from draws of a stationary pair.

    Each draw ``(Y, eta)`` is shifted by ``S^{-1}`` with ``S ~ eta(. | G)`` and
    weighted by ``eta(G) / mean(eta(G))``.  Draws with ``eta(G) = 0`` are
    rejected and counted in ``telemetry["rejected"]``.
    """
    if not stationary.claims_stationary:
        raise ValueError(f"sampler {stationary.name!r} does not claim stationarity")
    g = stationary.group
    whole = g.full_set()
    out, masses = [], []
    for _ in range(n):
        c = stationary.draw(rng)
        m = c.measure.total_mass()
        masses.append(m)
        if m <= 0:
            if telemetry is not None:
                telemetry["rejected"] += 1
            continue
        s = conditional_sample(c.measure, whole, rng)
        out.append((c.shift(g.inverse(s)), m))
    mean = float(np.mean(masses))
    return [(c, m / mean) for c, m in out]


def resample_weighted(weighted: list, m: int, rng) -> list:
    """Multinomial resampling of a weighted sample into ``m`` equally weighted draws."""
    w = np.array([x[1] for x in weighted], dtype=float)
    idx = rng.choice(len(weighted), size=m, p=w / w.sum())
    return [weighted[i][0] for i in idx]


def palm_exact(law: FiniteLaw) -> FiniteLaw:
    """Normalized Palm law of a finitely supported stationary law on a finite group.

    ``P0(B) = E[sum_t eta({t}) 1{t^{-1}(Y, eta) in B}] / E[eta(G)]``.
    """
    out = FiniteLaw()
    for c, p in law.items():
        g = c.group
        for t, w in zip(c.measure.locations, c.measure.weights):
            out.add(c.shift(g.inverse(int(t))), p * float(w))
    return out.normalized()


def uniform_translates(g: FiniteGroup, masses=None, field_values=None, probs=None) -> FiniteLaw:
    """Law of ``B (X0, mu0)`` for a fixed pair and random ``B``.

    ``B`` is uniform unless ``probs`` (one weight per group element) is given.
    ``masses`` defaults to counting measure, ``field_values`` to an empty mark.
    """
    mu0 = PointMeasure.counting(g) if masses is None else PointMeasure.from_masses(g, masses)
    mark = EmptyMark() if field_values is None else GridField(g, field_values)
    c0 = Configuration(mark, mu0)
    probs = np.full(g.n, 1.0 / g.n) if probs is None else np.asarray(probs, dtype=float) / np.sum(probs)
    return FiniteLaw((c0.shift(b), float(probs[b])) for b in g.elements())


def uniform_relocation(law: FiniteLaw) -> FiniteLaw:
    """Law of ``S^{-1} X`` with ``S`` uniform on ``G`` and independent of ``X``."""
    out = FiniteLaw()
    for c, p in law.items():
        g = c.group
        for s in g.elements():
            out.add(c.shift(g.inverse(s)), p / g.n)
    return out


def sample_cox(c: Configuration, rng) -> PointMeasure:
    """Poisson process with intensity measure ``c.measure``."""
    xi = c.measure
    g = xi.group
    if isinstance(xi, DensityMeasure):
        k = rng.poisson(xi.total_mass())
        if k == 0:
            return PointMeasure.empty(g)
        return PointMeasure(g, xi.sample_points(k, rng))
    if not len(xi):
        return PointMeasure.empty(g)
    counts = rng.poisson(xi.weights)
    keep = counts > 0
    return PointMeasure(g, xi.locations[keep], counts[keep].astype(float))


def modified_cox(c: Configuration, rng) -> PointMeasure:
    """Cox process driven by ``c`` plus an extra atom at the origin."""
    return sample_cox(c, rng).add_atom(c.group.identity)


BACKGROUND_KINDS = ("uniform_shift_lattice", "iid_grid_field", "independent_poisson")


def background_sampler(kind: str, g: Group, rng, grid: int = 16):
    """Draw a stationary background mark ``Z``.

    ``uniform_shift_lattice`` on a torus is ``(Z^d - U_C, U)`` with ``U_C``
    uniform on ``[0,1)^d`` and ``U`` uniform on ``[0,1)`` and left intact by
    shifts; on a finite group the lattice degenerates to a uniform position.
    """
    if kind == "uniform_shift_lattice":
        u = FixedMark(float(rng.random()))
        if g.kind == "finite":
            pos = MeasureMark(PointMeasure(g, [int(rng.integers(g.n))]))
            return TupleMark((pos, u))
        uc = rng.random(g.d)
        return TupleMark((LatticeMark(g, -uc, 1.0), u))
    if kind == "iid_grid_field":
        if g.kind == "finite":
            return GridField(g, rng.standard_normal(g.n))
        return GridField(g, rng.standard_normal((grid,) * g.d), rng.random(g.d) * g.L)
    if kind == "independent_poisson":
        return MeasureMark(sample_poisson(g, 1.0, rng))
    raise ValueError(f"unknown background kind {kind!r}")


# --------------------------------------------------------------------------
# shipped samplers


def poisson_sampler(g: Group, intensity: float = 1.0) -> ScenarioSampler:
    draw = lambda rng: Configuration(EmptyMark(), sample_poisson(g, intensity, rng))
    batch = (lambda rng, n: poisson_batch(g, intensity, n, rng)) if g.kind == "torus" else None
    return ScenarioSampler(f"poisson({intensity:g})", g, draw, claims_stationary=True, intensity=intensity, draw_batch=batch)


def palm_poisson_sampler(g: Group, intensity: float = 1.0, offset=None) -> ScenarioSampler:
    """Palm version of a Poisson process; a nonzero ``offset`` shifts every
    draw deterministically, which destroys mass-stationarity."""
    if offset is None:
        draw = lambda rng: palm_of_poisson(g, intensity, rng)
        batch = (lambda rng, n: poisson_batch(g, intensity, n, rng, with_origin=True)) if g.kind == "torus" else None
        return ScenarioSampler(f"palm_poisson({intensity:g})", g, draw, claims_mass_stationary=True,
                               intensity=intensity, draw_batch=batch)
    t = g.check(offset)
    draw = lambda rng: palm_of_poisson(g, intensity, rng).shift(t)
    return ScenarioSampler(f"palm_poisson({intensity:g})+shift", g, draw, intensity=intensity)


def window_palm_poisson_sampler(half_width: float = 8.0, intensity: float = 1.0, d: int = 2) -> ScenarioSampler:
    """Plane Poisson process observed in ``[-w, w]^d`` plus a point at the origin.

    The observation window travels with the configuration as a
    :class:`RegionMark`, so shifted configurations know where data ends.
    """
    g = plane(d)
    window = g.box(np.full(d, -half_width), np.full(d, 2 * half_width))
    area = (2 * half_width) ** d

    def draw(rng):
        k = rng.poisson(intensity * area)
        pts = np.vstack([np.zeros((1, d)), (rng.random((k, d)) - 0.5) * 2 * half_width])
        return Configuration(RegionMark(window), PointMeasure._raw(g, g.reduce(pts), np.ones(k + 1)))

    return ScenarioSampler(f"window_palm_poisson({half_width:g})", g, draw, claims_mass_stationary=True, intensity=intensity)


def _bump_shape(g: Torus, rng, bumps: int, width: float, base: float, total: float, grid: int) -> np.ndarray:
    h = g.L / grid
    centres_1d = (np.arange(grid) + 0.5) * h
    axes = np.meshgrid(*([centres_1d] * g.d), indexing="ij")
    pts = np.stack(axes, axis=-1)
    vals = np.full(pts.shape[:-1], base, dtype=float)
    for c in rng.random((bumps, g.d)) * g.L:
        r2 = np.sum(g.signed(pts - c) ** 2, axis=-1)
        vals += np.exp(-0.5 * r2 / width**2)
    return vals * total / (vals.sum() * h**g.d)


def bump_density_sampler(g: Torus, bumps: int = 2, width: float = 0.2, base: float = 0.05,
                         total: float = 10.0, grid: int = 200) -> ScenarioSampler:
    """Stationary diffuse random measure: randomly placed Gaussian bumps on a
    background, rescaled to constant total mass, on a uniformly shifted grid."""

    def draw(rng):
        vals = _bump_shape(g, rng, bumps, width, base, total, grid)
        return Configuration(EmptyMark(), DensityMeasure(g, vals, rng.random(g.d) * g.L))

    return ScenarioSampler("bump_density", g, draw, claims_stationary=True, intensity=total / g.haar_total)


def uniform_density_sampler(g: Torus, level: float = 1.0) -> ScenarioSampler:
    """Deterministic ``xi = level * lambda``: stationary and mass-stationary."""
    c = Configuration(EmptyMark(), DensityMeasure.uniform(g, level))
    return ScenarioSampler("uniform_density", g, lambda rng: c, claims_stationary=True,
                           claims_mass_stationary=True, intensity=level)


def palm_sampler(stationary: ScenarioSampler, mass_bound: float | None = None, offset=None) -> ScenarioSampler:
    """Exact Palm sampler: shift a stationary draw to a point chosen from its mass.

    With constant total mass no size-biasing is needed; otherwise
    ``mass_bound`` enables acceptance-rejection with probability
    ``eta(G) / mass_bound``.  A deterministic ``offset`` applied afterwards
    produces a non-mass-stationary counterpart.
    """
    g = stationary.group
    whole = g.full_set()
    ref = {}

    def draw(rng):
        while True:
            c = stationary.draw(rng)
            m = c.measure.total_mass()
            if mass_bound is None:
                ref.setdefault("mass", m)
                if abs(m - ref["mass"]) > 1e-9 * max(1.0, m):
                    raise ValueError("palm_sampler without mass_bound needs constant total mass")
                break
            if m > mass_bound:
                raise ValueError("total mass exceeds mass_bound")
            if rng.random() * mass_bound < m:
                break
        s = conditional_sample(c.measure, whole, rng)
        out = c.shift(g.inverse(s))
        return out if offset is None else out.shift(g.check(offset))

    name = f"palm[{stationary.name}]" + ("" if offset is None else "+shift")
    return ScenarioSampler(name, g, draw, claims_mass_stationary=offset is None, intensity=stationary.intensity)


def cox_sampler(base: ScenarioSampler, keep_driver: bool = False) -> ScenarioSampler:
    """``(X, N)`` (or ``((X, xi), N)`` with ``keep_driver``) for the modified Cox
    process ``N`` driven by draws of ``base``."""

    def draw(rng):
        c = base.draw(rng)
        n = modified_cox(c, rng)
        mark = TupleMark((c.mark, MeasureMark(c.measure))) if keep_driver else c.mark
        return Configuration(mark, n)

    label = "((X,xi),N)" if keep_driver else "(X,N)"
    return ScenarioSampler(f"cox{label}[{base.name}]", base.group, draw,
                           claims_mass_stationary=base.claims_mass_stationary, intensity=base.intensity)


def with_background(base: ScenarioSampler, kind: str) -> ScenarioSampler:
    """Attach an independent stationary background: ``((Z, X), xi)``."""
    g = base.group

    def draw(rng):
        c = base.draw(rng)
        z = background_sampler(kind, g, rng.spawn(1)[0])
        return Configuration(TupleMark((z, c.mark)), c.measure)

    return ScenarioSampler(f"{base.name}+{kind}", g, draw, claims_stationary=base.claims_stationary,
                           claims_mass_stationary=base.claims_mass_stationary, intensity=base.intensity)


def finite_law_sampler(name: str, law: FiniteLaw, claims_stationary=False, claims_mass_stationary=False) -> ScenarioSampler:
    items = law.items()
    g = items[0][0].group
    return ScenarioSampler(name, g, lambda rng: law.sample(rng), claims_stationary=claims_stationary,
                           claims_mass_stationary=claims_mass_stationary, exact=law)


def iid_field_sampler(g: Group, grid: int = 16, with_lambda: bool = True) -> ScenarioSampler:
    """I.i.d. Gaussian field (uniformly shifted grid on a torus) paired with Haar measure."""
    lam = PointMeasure.counting(g) if g.kind == "finite" else DensityMeasure.uniform(g)
    draw = lambda rng: Configuration(background_sampler("iid_grid_field", g, rng, grid=grid), lam)
    return ScenarioSampler("iid_field", g, draw, claims_stationary=True)


def bump_field_sampler(g: Group, grid: int = 16, height: float = 3.0) -> ScenarioSampler:
    """I.i.d. Gaussian field plus a deterministic bump in the cell at the origin."""
    lam = PointMeasure.counting(g) if g.kind == "finite" else DensityMeasure.uniform(g)

    def draw(rng):
        if g.kind == "finite":
            vals = rng.standard_normal(g.n)
            vals[g.identity] += height
            return Configuration(GridField(g, vals), lam)
        vals = rng.standard_normal((grid,) * g.d)
        vals[(0,) * g.d] += height
        return Configuration(GridField(g, vals, np.zeros(g.d)), lam)

    return ScenarioSampler("bump_field", g, draw)
