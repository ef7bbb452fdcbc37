"""Invariant transport kernels on finite groups and point measures.

A kernel is stored through its section at the origin, ``K_c(e, .)``; the
full kernel is recovered by invariance, ``K_c(t, A) = K_{t^{-1}c}(e, t^{-1}A)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .measures import Configuration, DensityMeasure, FiniteLaw, PointMeasure, measures_equal
from .shifts import Allocation, ShiftRule


@dataclass(frozen=True, eq=False)
class Kernel:
    name: str
    at_origin: Callable[[Configuration], PointMeasure]
    bounded_constant: float = 1.0
    markovian: bool = True
    # Optional direct definition of K_c(t, .), used to cross-check invariance.
    full: Callable[[Configuration, object], PointMeasure] | None = None

    def section(self, c: Configuration) -> PointMeasure:
        mu = self.at_origin(c)
        if np.any(mu.weights < 0):
            raise ValueError(f"kernel {self.name!r} has negative mass")
        if mu.total_mass() > self.bounded_constant * (1 + 1e-12):
            raise ValueError(f"kernel {self.name!r} exceeds its bound {self.bounded_constant}")
        return mu

    def at(self, c: Configuration, t) -> PointMeasure:
        """``K_c(t, .)`` obtained from the origin section by invariance."""
        g = c.group
        return self.section(c.shift(g.inverse(t))).shift(t)


def _outcome_measure(g, outcomes) -> PointMeasure:
    outcomes = [(loc, p) for loc, p in outcomes if p > 0]
    if not outcomes:
        return PointMeasure.empty(g)
    locs = [loc for loc, _ in outcomes]
    locs = np.array(locs) if g.kind == "torus" else locs
    return PointMeasure(g, locs, [p for _, p in outcomes])


def kernel_from_rule(pi: ShiftRule) -> Kernel:
    """``K_c(e, .) = delta_{pi(c)}``, averaged over coins for randomized rules.

    The direct form ``K_c(t, .) = delta_{tau(t)}`` uses the allocation."""
    return Kernel(f"kernel[{pi.name}]", lambda c: _outcome_measure(c.group, pi.outcomes(c)),
                  full=lambda c, t: _outcome_measure(c.group, Allocation(pi, c).outcomes(t)))


def kernel_from_allocation(tau: Allocation | ShiftRule) -> Kernel:
    """Kernel ``K(t, A) = 1_A(tau(t))`` of an allocation."""
    return kernel_from_rule(tau.rule if isinstance(tau, Allocation) else tau)


def kernel_point_shift(t) -> Kernel:
    """``K(e, .) = delta_t`` (the unimodular weight is one); directly,
    ``K(s, .) = delta_{s t}``."""

    def single(g, x):
        return PointMeasure(g, [x] if g.kind == "finite" else np.asarray(x, float).reshape(1, -1), [1.0])

    return Kernel(f"point_shift[{np.asarray(t).tolist()}]", lambda c: single(c.group, c.group.check(t)),
                  full=lambda c, s: single(c.group, c.group.compose(s, t)))


def identity_kernel() -> Kernel:
    return Kernel("identity", lambda c: PointMeasure(c.group, [c.group.identity] if c.group.kind == "finite"
                                                     else c.group.identity.reshape(1, -1), [1.0]))


class KernelCheck(NamedTuple):
    preserving: bool
    invariant: bool


def _sites(c: Configuration) -> PointMeasure:
    xi = c.measure
    return xi.atomize() if isinstance(xi, DensityMeasure) else xi


def check_kernel(k: Kernel, c: Configuration, tol: float = 1e-12) -> KernelCheck:
    """Check ``int K(s, .) xi(ds) = xi`` and the invariance relation.

    Invariance compares the kernel's direct definition ``K_c(t, .)`` (when
    it has one) with the origin section moved by ``t``,
    ``K_{t^{-1}c}(e, t^{-1} .)``, for every site ``t`` of a finite group or
    every atom of a point measure.  Without a direct definition it compares
    ``K_{r^{-1}c}(r^{-1}t, .)`` with the ``r^{-1}``-shift of ``K_c(t, .)``.
    """
    g = c.group
    xi = _sites(c)
    sites = list(g.elements()) if g.kind == "finite" else [s for s in xi.locations]

    locs, ws = [], []
    for s, w in zip(xi.locations, xi.weights):
        s = int(s) if g.kind == "finite" else s
        mu = k.at(c, s)
        locs.extend(mu.locations.tolist())
        ws.extend((w * mu.weights).tolist())
    pushed = PointMeasure(g, np.array(locs) if g.kind == "torus" else locs, ws) if locs else PointMeasure.empty(g)
    preserving = measures_equal(pushed, xi, tol)

    invariant = True
    if k.full is not None:
        for t in sites:
            t = int(t) if g.kind == "finite" else t
            if not measures_equal(k.full(c, t), k.at(c, t), tol):
                invariant = False
        return KernelCheck(bool(preserving), invariant)
    for r in sites if g.kind == "finite" else sites[:4]:
        cr = c.shift(g.inverse(r))
        for t in sites if g.kind == "finite" else sites[:8]:
            lhs = k.at(cr, g.compose(g.inverse(r), t))
            rhs = k.at(c, t).shift(g.inverse(r))
            if not measures_equal(lhs, rhs, tol):
                invariant = False
    return KernelCheck(bool(preserving), invariant)


def eval_kernel_identity(k: Kernel, dist: FiniteLaw, f: Callable) -> tuple[float, float]:
    """``(E int f(s^{-1} c) K_c(e, ds), E f(c))`` by exact enumeration."""
    if not np.isfinite(k.bounded_constant):
        raise ValueError("kernel identity needs a bounded kernel")
    lhs = rhs = 0.0
    for c, p in dist.items():
        g = c.group
        mu = k.section(c)
        for s, w in zip(mu.locations, mu.weights):
            s = int(s) if g.kind == "finite" else s
            lhs += p * w * float(f(c.shift(g.inverse(s))))
        rhs += p * float(f(c))
    return lhs, rhs
