"""Exact and Monte Carlo engines for typicality, stationarity and
shift-invariance claims.

Exact engines enumerate finitely supported laws on finite groups and report
total-variation distances.  Monte Carlo engines compare functional images of
two independent streams with Kolmogorov-Smirnov tests and a Bonferroni
correction over all their cells.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .functionals import Functional, evaluate_all, evaluate_batch
from .groups import BoxSet, FiniteSet, Group
from .kernels import eval_kernel_identity, kernel_point_shift
from .measures import Configuration, FiniteLaw, conditional_law, conditional_sample
from .shifts import (
    Censored,
    ShiftRule,
    build_allocation,
    check_preserving,
    check_reverse_pair,
    is_bijective_on_support,
    tn_rule,
)
from .simulate import ScenarioSampler, cox_sampler, with_background
from .stats import tv_distance_exact, two_sample_test

EXACT_TOL = 1e-12
# Share of censored or fallback draws above which a statistical verdict is
# reported as inconclusive.
MAX_LOSS_RATE = 0.05

_RANK = {"pass": 0, "inconclusive": 1, "fail": 2}


def worst(verdicts) -> str:
    verdicts = list(verdicts)
    return max(verdicts, key=_RANK.__getitem__) if verdicts else "pass"


@dataclass
class Cell:
    """One comparison: exact TV distance or a two-sample statistic and p-value."""

    label: str
    statistic: float
    pvalue: float | None = None

    def to_dict(self) -> dict:
        out = {"label": self.label, "statistic": float(self.statistic)}
        if self.pvalue is not None:
            out["pvalue"] = float(self.pvalue)
        return out


@dataclass
class TestReport:
    """Outcome of one claim check.

    ``data`` keeps raw samples per cell as ``(lhs, rhs)`` arrays for plot
    tables; it is not part of the serialized record.
    """

    __test__ = False

    claim: str
    mode: str
    cells: list
    verdict: str
    alpha: float | None = None
    tolerance: float | None = None
    sample_sizes: dict = field(default_factory=dict)
    seed: Any = None
    telemetry: dict = field(default_factory=dict)
    scenario: dict = field(default_factory=dict)
    children: list = field(default_factory=list)
    data: dict = field(default_factory=dict, repr=False)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    @property
    def max_statistic(self) -> float:
        vals = [c.statistic for c in self.all_cells()]
        return max(vals) if vals else 0.0

    @property
    def min_pvalue(self) -> float | None:
        ps = [c.pvalue for c in self.all_cells() if c.pvalue is not None]
        return min(ps) if ps else None

    def all_cells(self) -> list:
        out = list(self.cells)
        for ch in self.children:
            out.extend(ch.all_cells())
        return out

    def all_data(self) -> dict:
        out = dict(self.data)
        for i, ch in enumerate(self.children):
            out.update({f"{ch.claim}#{i}:{k}": v for k, v in ch.all_data().items()})
        return out

    def to_dict(self) -> dict:
        return {
            "claim": self.claim,
            "mode": self.mode,
            "verdict": self.verdict,
            "alpha": self.alpha,
            "tolerance": self.tolerance,
            "cells": [c.to_dict() for c in self.cells],
            "sample_sizes": dict(self.sample_sizes),
            "seed": self.seed,
            "telemetry": {k: _plain(v) for k, v in self.telemetry.items()},
            "scenario": dict(self.scenario),
            "children": [ch.to_dict() for ch in self.children],
        }

    def summary(self) -> str:
        if self.mode == "exact":
            return f"{self.claim}: {self.verdict} (max TV {self.max_statistic:.3g})"
        p = self.min_pvalue
        p_txt = "n/a" if p is None else f"{p:.3g}"
        return f"{self.claim}: {self.verdict} (min p {p_txt}, {len(self.all_cells())} cells)"


def _plain(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def _seed_of(rng) -> Any:
    try:
        return rng.bit_generator.seed_seq.entropy
    except AttributeError:
        return None


# --------------------------------------------------------------------------
# helpers


def coords(g: Group, x) -> np.ndarray:
    """Real coordinates of a group element (index for finite groups)."""
    if g.kind == "finite":
        return np.array([float(x)])
    return np.asarray(x, dtype=float).reshape(g.d)


def set_label(C) -> str:
    if isinstance(C, FiniteSet):
        return "C=" + "{" + ",".join(map(str, C.members)) + "}"
    parts = [f"{np.round(c, 6).tolist()}+{np.round(e, 6).tolist()}" for c, e in zip(C.corners, C.extents)]
    return "C=" + "|".join(parts)


def all_nonempty_subsets(g: Group) -> list:
    return [FiniteSet(g, m) for r in range(1, g.n + 1) for m in itertools.combinations(range(g.n), r)]


def _mc_cells(prefix: str, lhs: np.ndarray, rhs: np.ndarray, names: list, alpha: float, rng, m_cells: int):
    res = two_sample_test(lhs, rhs, alpha, rng, m_cells=m_cells)
    cells = [Cell(f"{prefix}|{nm}", float(s), float(p))
             for nm, s, p in zip(names, res.coordinate_statistics, res.coordinate_pvalues)]
    data = {f"{prefix}|{nm}": (lhs[:, j], rhs[:, j]) for j, nm in enumerate(names)}
    return cells, data


def _mc_verdict(cells: list, alpha: float, loss_rate: float, max_loss_rate: float = MAX_LOSS_RATE) -> str:
    m = max(1, len(cells))
    if any(c.pvalue <= alpha / m for c in cells):
        return "fail"
    if loss_rate > max_loss_rate:
        return "inconclusive"
    return "pass"


def _names(fs) -> list:
    out = []
    for f in fs:
        out.extend([f.name] if f.dim == 1 else [f"{f.name}[{j}]" for j in range(f.dim)])
    return out


# --------------------------------------------------------------------------
# typicality of the origin in the mass (exact)


def typicality_laws_exact(law: FiniteLaw, C: FiniteSet, telemetry: Counter | None = None) -> tuple[FiniteLaw, FiniteLaw]:
    """Exact laws of ``(V_C^{-1} c, U_C V_C)`` and ``(c, U_C)``."""
    g = C.group
    h = g.haar(C)
    if h == 0:
        raise ValueError("null set: haar(C) = 0")
    lhs, rhs = FiniteLaw(), FiniteLaw()
    for c, p in law.items():
        key = c.key()
        for u in C.members:
            rhs.add((key, u), p / h)
            A = g.act_on_set(g.inverse(u), C)
            if c.measure.mass(A) == 0 and telemetry is not None:
                telemetry["fallback_probability"] += p / h
            for v, q in conditional_law(c.measure, A):
                lhs.add((c.shift(g.inverse(v)).key(), g.compose(u, v)), p * q / h)
    return lhs, rhs


def mass_stationarity_test_exact(law: FiniteLaw, Cs=None, tol: float = EXACT_TOL, claim: str = "thm-2.4") -> TestReport:
    """Exact TV between both sides of the typicality identity for each ``C``."""
    items = law.items()
    if not items:
        raise ValueError("empty law")
    g = items[0][0].group
    if g.kind != "finite":
        raise ValueError("exact mode needs a finite group")
    Cs = all_nonempty_subsets(g) if Cs is None else list(Cs)
    tel = Counter()
    cells = []
    for C in Cs:
        lhs, rhs = typicality_laws_exact(law, C, tel)
        cells.append(Cell(set_label(C), tv_distance_exact(lhs, rhs)))
    verdict = "pass" if max(c.statistic for c in cells) <= tol else "fail"
    return TestReport(claim, "exact", cells, verdict, tolerance=tol, sample_sizes={"sets": len(Cs), "support": len(items)},
                      telemetry=dict(tel))


# --------------------------------------------------------------------------
# typicality of the origin in the mass (Monte Carlo)


def _typical_lhs(s: ScenarioSampler, C, rng, telemetry: Counter):
    g = s.group
    c = s.draw(rng)
    u = g.uniform_sample(C, rng)
    v = conditional_sample(c.measure, g.act_on_set(g.inverse(u), C), rng, telemetry)
    return c.shift(g.inverse(v)), g.compose(u, v)


def _typical_rhs(s: ScenarioSampler, C, rng):
    return s.draw(rng), s.group.uniform_sample(C, rng)


def typicality_pair_sampler(s: ScenarioSampler, C, rng, telemetry: Counter | None = None):
    """One draw of each side: ``(V_C^{-1} c, U_C V_C)`` and an independent ``(c', U_C')``."""
    if s.group.haar(C) == 0:
        raise ValueError("null set: haar(C) = 0")
    tel = Counter() if telemetry is None else telemetry
    return _typical_lhs(s, C, rng, tel), _typical_rhs(s, C, rng)


def mass_stationarity_test_mc(s: ScenarioSampler, Cs, fs, n: int = 10_000, alpha: float = 0.01, rng=None,
                              claim: str = "def-3.1") -> TestReport:
    """Two-sample tests of ``(f(V_C^{-1} c), U_C V_C)`` against ``(f(c), U_C)``."""
    rng = np.random.default_rng(0) if rng is None else rng
    g = s.group
    Cs = list(Cs)
    for C in Cs:
        if g.haar(C) == 0:
            raise ValueError("null set: haar(C) = 0")
    names = _names(fs) + [f"u[{j}]" for j in range(1 if g.kind == "finite" else g.d)]
    m_cells = len(Cs)
    tel = Counter()
    cells, data = [], {}
    streams = rng.spawn(2 * len(Cs) + 1)
    for j, C in enumerate(Cs):
        lr, rr = streams[2 * j], streams[2 * j + 1]
        lhs = np.empty((n, len(names)))
        rhs = np.empty((n, len(names)))
        for i in range(n):
            c, w = _typical_lhs(s, C, lr, tel)
            lhs[i] = np.concatenate([evaluate_all(fs, c), coords(g, w)])
            c, w = _typical_rhs(s, C, rr)
            rhs[i] = np.concatenate([evaluate_all(fs, c), coords(g, w)])
        cc, dd = _mc_cells(set_label(C), lhs, rhs, names, alpha, streams[-1], m_cells)
        cells.extend(cc)
        data.update(dd)
    rate = tel["fallback"] / (n * len(Cs))
    tel = {"fallback": tel["fallback"], "fallback_rate": rate}
    return TestReport(claim, "monte_carlo", cells, _mc_verdict(cells, alpha, rate), alpha=alpha,
                      sample_sizes={"lhs": n, "rhs": n, "sets": len(Cs)}, seed=_seed_of(rng), telemetry=tel,
                      scenario=s.metadata(), data=data)


# --------------------------------------------------------------------------
# shift invariance


def _shift_rows(rule: ShiftRule, s: ScenarioSampler, fs, n: int, rng, use_batch: bool):
    g = s.group
    if use_batch:
        pb = s.draw_batch(rng, n)
        t = rule.batch(pb)
        return evaluate_batch(fs, pb.shift(-t)), 0
    rows, censored = [], 0
    for _ in range(n):
        c = s.draw(rng)
        try:
            t = rule(c, rng)
        except Censored:
            censored += 1
            continue
        rows.append(evaluate_all(fs, c.shift(g.inverse(t))))
    return np.array(rows).reshape(-1, sum(f.dim for f in fs)), censored


def _reference_rows(s: ScenarioSampler, fs, n: int, rng, use_batch: bool) -> np.ndarray:
    if use_batch:
        return evaluate_batch(fs, s.draw_batch(rng, n))
    return np.array([evaluate_all(fs, s.draw(rng)) for _ in range(n)])


def shift_invariance_suite(rules, s: ScenarioSampler, fs, n: int = 10_000, alpha: float = 0.01, rng=None,
                           background: str | None = None, claim: str = "eq-4.1", batch: bool = True,
                           max_loss_rate: float = MAX_LOSS_RATE) -> TestReport:
    """Test ``f(T^{-1} c) =D f(c)`` for each rule against one shared reference sample.

    Censored draws are excluded; if the largest per-rule censoring rate
    exceeds ``max_loss_rate`` a non-rejecting verdict becomes inconclusive.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    rules = list(rules)
    if background is not None:
        s = with_background(s, background)
    use_batch = (batch and s.draw_batch is not None and all(r.batch is not None for r in rules)
                 and all(f.batch is not None for f in fs))
    names = _names(fs)
    streams = rng.spawn(len(rules) + 2)
    ref = _reference_rows(s, fs, n, streams[0], use_batch)
    cells, data, censored = [], {}, {}
    for rule, r in zip(rules, streams[1:-1]):
        rows, cens = _shift_rows(rule, s, fs, n, r, use_batch)
        censored[rule.name] = cens
        if len(rows) < 2:
            raise ValueError(f"rule {rule.name!r} was censored on every draw")
        cc, dd = _mc_cells(rule.name, rows, ref, names, alpha, streams[-1], len(rules))
        cells.extend(cc)
        data.update(dd)
    rate = max(censored.values()) / n if censored else 0.0
    tel = {"censored": censored, "censoring_rate": rate, "max_loss_rate": max_loss_rate, "vectorized": use_batch}
    return TestReport(claim, "monte_carlo", cells, _mc_verdict(cells, alpha, rate, max_loss_rate), alpha=alpha,
                      sample_sizes={"attempted": n, "reference": n, "rules": len(rules)}, seed=_seed_of(rng),
                      telemetry=tel, scenario=s.metadata(), data=data)


def shift_invariance_test(pi: ShiftRule, s: ScenarioSampler, fs, n: int = 10_000, alpha: float = 0.01, rng=None,
                          background: str | None = None, claim: str = "eq-4.1",
                          max_loss_rate: float = MAX_LOSS_RATE) -> TestReport:
    return shift_invariance_suite([pi], s, fs, n, alpha, rng, background, claim, max_loss_rate=max_loss_rate)


def shifted_law_exact(rule: ShiftRule, law: FiniteLaw) -> FiniteLaw:
    """Exact law of ``T^{-1} c`` with ``T = pi(c)``, enumerating randomized coins."""
    out = FiniteLaw()
    for c, p in law.items():
        g = c.group
        for t, q in rule.outcomes(c):
            out.add(c.shift(g.inverse(t)), p * q)
    return out


def shift_invariance_exact(rules, law: FiniteLaw, tol: float = EXACT_TOL, claim: str = "eq-5.1") -> TestReport:
    cells = [Cell(rule.name, tv_distance_exact(shifted_law_exact(rule, law), law)) for rule in rules]
    verdict = "pass" if max(c.statistic for c in cells) <= tol else "fail"
    return TestReport(claim, "exact", cells, verdict, tolerance=tol, sample_sizes={"support": len(law)})


# --------------------------------------------------------------------------
# stationarity


def stationarity_test_exact(law: FiniteLaw, ts=None, tol: float = EXACT_TOL, claim: str = "thm-2.2") -> TestReport:
    """Exact TV between the laws of ``t c`` and ``c`` for each ``t``."""
    g = law.items()[0][0].group
    ts = list(g.elements()) if ts is None else list(ts)
    cells = [Cell(f"t={t}", tv_distance_exact(law.map(lambda c, t=t: c.shift(t)), law)) for t in ts]
    verdict = "pass" if max(c.statistic for c in cells) <= tol else "fail"
    return TestReport(claim, "exact", cells, verdict, tolerance=tol, sample_sizes={"support": len(law), "shifts": len(ts)})


def law_equality_exact(p: FiniteLaw, q: FiniteLaw, tol: float = EXACT_TOL, claim: str = "law-equality",
                       label: str = "TV") -> TestReport:
    tv = tv_distance_exact(p, q)
    return TestReport(claim, "exact", [Cell(label, tv)], "pass" if tv <= tol else "fail", tolerance=tol)


def stationarity_test(s: ScenarioSampler, ts, fs, n: int = 10_000, alpha: float = 0.01, rng=None,
                      claim: str = "thm-2.2") -> TestReport:
    """Two-sample tests of ``f(t c)`` against ``f(c)`` for fixed ``t``."""
    rng = np.random.default_rng(0) if rng is None else rng
    ts = list(ts)
    names = _names(fs)
    streams = rng.spawn(len(ts) + 2)
    ref = np.array([evaluate_all(fs, s.draw(streams[0])) for _ in range(n)])
    cells, data = [], {}
    for t, r in zip(ts, streams[1:-1]):
        rows = np.array([evaluate_all(fs, s.draw(r).shift(t)) for _ in range(n)])
        cc, dd = _mc_cells(f"t={np.asarray(t).tolist()}", rows, ref, names, alpha, streams[-1], len(ts))
        cells.extend(cc)
        data.update(dd)
    return TestReport(claim, "monte_carlo", cells, _mc_verdict(cells, alpha, 0.0), alpha=alpha,
                      sample_sizes={"lhs": n, "rhs": n, "shifts": len(ts)}, seed=_seed_of(rng),
                      scenario=s.metadata(), data=data)


# --------------------------------------------------------------------------
# Cox reduction


def _default_cox_sets(g: Group) -> list:
    if g.kind == "finite":
        return [g.full_set()]
    a, b = 1.0, 2.5
    return [g.box(np.full(g.d, -a / 2), np.full(g.d, a)), g.box(np.full(g.d, -b / 2), np.full(g.d, b))]


def cox_reduction_test(s: ScenarioSampler, n: int = 10_000, alpha: float = 0.01, rng=None, Cs=None,
                       fs=None, driver_fs=None, claim: str = "thm-7.1") -> TestReport:
    """Mass-stationarity of ``(X, N)`` and ``((X, xi), N)`` for the modified Cox
    process ``N``; for diffuse circle scenarios also ``T_{+-1}`` invariance of ``N``."""
    from .functionals import count_ball, mark_measure_box, nearest_distances
    from .measures import DensityMeasure

    rng = np.random.default_rng(0) if rng is None else rng
    g = s.group
    Cs = _default_cox_sets(g) if Cs is None else list(Cs)
    if fs is None:
        cap = g.L / 2 if g.kind == "torus" else None
        fs = [count_ball(0.5), count_ball(1.0), nearest_distances(2, cap)]
    if driver_fs is None:
        driver_fs = [mark_measure_box(0.5, index=1)]
    r1, r2, r3 = rng.spawn(3)
    children = [
        mass_stationarity_test_mc(cox_sampler(s), Cs, fs, n, alpha, r1, claim="thm-7.1:(X,N)"),
        mass_stationarity_test_mc(cox_sampler(s, keep_driver=True), Cs, list(fs) + list(driver_fs), n, alpha, r2,
                                  claim="thm-7.1:((X,xi),N)"),
    ]
    probe = s.draw(np.random.default_rng(0))
    if isinstance(probe.measure, DensityMeasure) and g.kind == "torus" and g.d == 1:
        children.append(shift_invariance_suite([tn_rule(1), tn_rule(-1)], cox_sampler(s), fs, n, alpha, r3,
                                               claim="cor-7.2"))
    return TestReport(claim, "monte_carlo", [], worst(ch.verdict for ch in children), alpha=alpha,
                      sample_sizes={"n": n}, seed=_seed_of(rng), scenario=s.metadata(), children=children)


# --------------------------------------------------------------------------
# reversibility and preservation


def reverse_pair_test(pi: ShiftRule, pi_rev: ShiftRule, s: ScenarioSampler, n: int = 1000, rng=None,
                      min_valid: int | None = None, claim: str = "rev-pair") -> TestReport:
    """Check both reverse identities on draws until ``min_valid`` (default
    ``n``) non-censored configurations were seen or ``4 n`` draws were made.

    The check is exact on each configuration, so censoring does not bias it;
    the verdict is inconclusive only if too few configurations were usable.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    need = n if min_valid is None else min_valid
    holds = fails = censored = 0
    while holds + fails < need and holds + fails + censored < 4 * n:
        r = check_reverse_pair(pi, pi_rev, s.draw(rng))
        if r is None:
            censored += 1
        elif r:
            holds += 1
        else:
            fails += 1
    total = holds + fails + censored
    verdict = "fail" if fails else ("pass" if holds >= need else "inconclusive")
    valid = max(1, holds + fails)
    return TestReport(claim, "exact", [Cell(f"{pi.name}/{pi_rev.name} failure share", fails / valid)], verdict,
                      tolerance=0.0, sample_sizes={"checked": holds + fails, "drawn": total},
                      seed=_seed_of(rng),
                      telemetry={"holds": holds, "fails": fails, "censored": censored,
                                 "censoring_rate": censored / max(1, total)},
                      scenario=s.metadata())


def preservation_test(rules, s: ScenarioSampler, n: int = 1000, rng=None, claim: str = "sec-6") -> TestReport:
    """Share of draws on which the allocation of each rule fails to preserve
    ``xi`` (and, for simple measures, fails to be a bijection of the support)."""
    rng = np.random.default_rng(0) if rng is None else rng
    configs = [s.draw(rng) for _ in range(n)]
    cells, tel = [], {}
    for rule in rules:
        bad = nonbij = censored = 0
        for c in configs:
            tau = build_allocation(rule, c)
            try:
                ok = check_preserving(tau)
                bij = is_bijective_on_support(tau) if not rule.randomized and c.measure.simple else ok
            except Censored:
                censored += 1
                continue
            bad += not ok
            nonbij += not bij
        valid = max(1, n - censored)
        cells.append(Cell(f"{rule.name} not preserving", bad / valid))
        cells.append(Cell(f"{rule.name} not bijective", nonbij / valid))
        tel[rule.name] = {"censored": censored, "not_preserving": bad, "not_bijective": nonbij}
    verdict = "pass" if all(c.statistic == 0 for c in cells) else "fail"
    return TestReport(claim, "exact", cells, verdict, tolerance=0.0, sample_sizes={"configurations": n},
                      seed=_seed_of(rng), telemetry=tel, scenario=s.metadata())


def preservation_exact(rules, c: Configuration, tol: float = EXACT_TOL, claim: str = "sec-6") -> TestReport:
    """Preservation of one fixed configuration, with expectation over coins."""
    cells = [Cell(f"{rule.name} not preserving", float(not check_preserving(build_allocation(rule, c), tol=tol)))
             for rule in rules]
    verdict = "pass" if all(c_.statistic == 0 for c_ in cells) else "fail"
    return TestReport(claim, "exact", cells, verdict, tolerance=tol)


# --------------------------------------------------------------------------
# kernels


def indicator_battery(law: FiniteLaw) -> list:
    """Indicators of every configuration in the support of the law or any of
    its shifts; they separate finitely supported laws."""
    keys = set()
    for c, _ in law.items():
        for t in c.group.elements():
            keys.add(c.shift(t).key())
    return [(lambda c, k=k: 1.0 if c.key() == k else 0.0) for k in sorted(keys, key=repr)]


def kernel_identity_test(law: FiniteLaw, ts=None, fs: list | None = None, tol: float = EXACT_TOL,
                         claim: str = "thm-8.2") -> TestReport:
    """``|E int f(s^{-1}c) K(e, ds) - E f(c)|`` for point-shift kernels ``delta_t``.

    The default battery of indicator functions makes the identity for all
    ``t`` equivalent to exact stationarity of the law.
    """
    g = law.items()[0][0].group
    ts = list(g.elements()) if ts is None else list(ts)
    fs = indicator_battery(law) if fs is None else fs
    cells = []
    for t in ts:
        k = kernel_point_shift(t)
        gap = 0.0
        for f in fs:
            lhs, rhs = eval_kernel_identity(k, law, f)
            gap = max(gap, abs(lhs - rhs))
        cells.append(Cell(f"t={t}", gap))
    verdict = "pass" if max(c.statistic for c in cells) <= tol else "fail"
    return TestReport(claim, "exact", cells, verdict, tolerance=tol, sample_sizes={"functions": len(fs), "shifts": len(ts)})
