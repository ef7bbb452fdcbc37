"""Acceptance run: one ``criterion k: PASS/FAIL`` line per criterion.

Run with ``pytest tests/test_acceptance.py -s -v``; the verdict lines are
printed even without ``-s``.
"""

import time

import numpy as np
import pytest

from typicality import simulate as sim
from typicality import verify as V
from typicality.functionals import count_ball, nearest_distances
from typicality.groups import FiniteGroup, Torus, group_from_descriptor
from typicality.kernels import check_kernel, kernel_from_rule
from typicality.measures import Configuration, EmptyMark, FiniteLaw, PointMeasure, measures_equal
from typicality.scenarios import build_law, build_sampler, load_config, run_scenario, shipped_configs
from typicality.shifts import (
    Censored,
    bernoulli_transport,
    build_allocation,
    check_preserving,
    circular_lex_rule,
    constant_rule,
    expected_pushforward,
    identity_rule,
    matching_rule,
    nearest_rule,
    tn_rule,
    two_point_stay_probabilities,
)
from typicality.tree import tree_reverse_rule, tree_rule

EXACT = 1e-12


@pytest.fixture
def report(capsys):
    def emit(k, ok, detail=""):
        with capsys.disabled():
            print(f"\ncriterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail

    return emit


def test_criterion_1_exact_typicality_z3(report):
    t0 = time.perf_counter()
    z3 = FiniteGroup.cyclic(3)
    cfg = lambda m: Configuration(EmptyMark(), PointMeasure.from_masses(z3, m))
    palm = FiniteLaw([(cfg([2, 1, 0]), 2 / 3), (cfg([1, 0, 2]), 1 / 3)])
    derived = sim.palm_exact(sim.uniform_translates(z3, [2, 1, 0]))
    same = V.law_equality_exact(derived, palm).verdict == "pass"
    good = V.mass_stationarity_test_exact(palm)
    wrong = FiniteLaw([(cfg([2, 1, 0]), 0.5), (cfg([1, 0, 2]), 0.5)])
    bad = V.mass_stationarity_test_exact(wrong, [z3.full_set()])
    dt = time.perf_counter() - t0
    ok = (same and len(good.cells) == 7 and good.max_statistic <= EXACT and bad.max_statistic >= 0.05 and dt < 1)
    report(1, ok, f"max TV over 7 sets {good.max_statistic:.2g}, wrong mixture TV {bad.max_statistic:.4f}, {dt:.2f}s")


def test_criterion_2_exact_non_abelian(report):
    t0 = time.perf_counter()
    rep = run_scenario(load_config("s3-exact-palm"))
    dt = time.perf_counter() - t0
    ok = rep.verdict == "pass" and len(rep.cells) >= 20 and rep.max_statistic <= EXACT and dt < 5
    report(2, ok, f"S3, {len(rep.cells)} sets, max TV {rep.max_statistic:.2g}, {dt:.2f}s")


def test_criterion_3_typical_location(report):
    good = run_scenario(load_config("z6-typical-location"))
    bad = run_scenario(load_config("z6-bump-not-typical"))
    stationary, equal = bad.children
    ok = (good.verdict == "pass" and all(c.max_statistic <= EXACT for c in good.children)
          and stationary.verdict == "pass" and stationary.max_statistic <= EXACT
          and equal.verdict == "fail" and equal.max_statistic > EXACT)
    report(3, ok, f"stationary X: TV {max(c.max_statistic for c in good.children):.2g}; "
                  f"bump X: S^-1X stationary TV {stationary.max_statistic:.2g}, law gap {equal.max_statistic:.3f}")


def test_criterion_4_circle_tn_invariance(report):
    t0 = time.perf_counter()
    cfg = load_config("circle-poisson-tn")
    main = run_scenario(cfg)
    rules = {c.label.split("|")[0] for c in main.cells}
    n_functionals = len(cfg["functionals"])
    rejections = sum(run_scenario(cfg, seed=seed).verdict == "fail" for seed in range(100))
    dt = time.perf_counter() - t0
    ok = (main.verdict == "pass" and rules == {f"tn:{k}" for k in range(-3, 4)} and n_functionals >= 3
          and main.sample_sizes["attempted"] == 10_000 and rejections <= 5 and dt < 120)
    report(4, ok, f"main run {main.verdict} (min p {main.min_pvalue:.3g}), "
                  f"false rejections {rejections}/100, {dt:.0f}s")


def test_criterion_5_nearest_point_negative(report):
    cfg = load_config("nearest-point-negative")
    rejected, post, pre = 0, [], []
    for seed in range(20):
        rep = run_scenario(cfg, seed=seed)
        rejected += rep.verdict == "fail"
        lhs, rhs = rep.data["nearest|closest_point_indicator"]
        post.append(lhs.mean())
        pre.append(rhs.mean())
    rate = rejected / 20
    ok = rate >= 0.95 and min(post) == 1.0 and max(pre) < 0.99
    report(5, ok, f"rejection rate {rate:.2f}, closest-point mean after shift {min(post):.3f}, "
                  f"before shift at most {max(pre):.3f}")


def test_criterion_6_tree_shift(report):
    t0 = time.perf_counter()
    s = sim.window_palm_poisson_sampler(8.0)
    pair = V.reverse_pair_test(tree_rule(1.0), tree_reverse_rule(1.0), s, 1000, np.random.default_rng(4202))
    inv = run_scenario(load_config("tree-shift-window"))
    dt = time.perf_counter() - t0
    rate = inv.telemetry["censoring_rate"]
    ok = (pair.verdict == "pass" and pair.telemetry["fails"] == 0 and pair.telemetry["holds"] >= 1000
          and inv.verdict == "pass" and 0 <= rate and dt < 180)
    report(6, ok, f"(a) reverse pair holds on {pair.telemetry['holds']}/{pair.sample_sizes['checked']} "
                  f"(censoring {pair.telemetry['censoring_rate']:.3f}); (b) {inv.verdict}, min p {inv.min_pvalue:.3g}, "
                  f"censoring rate {rate:.3f}; {dt:.0f}s")


def _tree_certified_preserving(c) -> bool | None:
    """On atoms whose image the window determines, the tree allocation maps
    atoms injectively onto atoms and the reverse allocation inverts it."""
    tau, back = build_allocation(tree_rule(), c), build_allocation(tree_reverse_rule(), c)
    g = c.group
    seen = set()
    for s in c.measure.locations:
        try:
            t = tau(s)
            r = back(t)
        except Censored:
            continue
        j = c.measure.index_of(t)
        if j is None or j in seen or not g.equal(r, s):
            return False
        seen.add(j)
    return bool(seen) or None


def test_criterion_7_preservation(report):
    rng = np.random.default_rng(6101)
    circle = sim.palm_poisson_sampler(Torus(1, 10.0))
    circle_rules = [tn_rule(k) for k in (-3, -2, -1, 1, 2, 3)] + [identity_rule(), matching_rule()]
    configs = [circle.draw(rng) for _ in range(1000)]
    bad = {r.name: sum(not check_preserving(build_allocation(r, c)) for c in configs) for r in circle_rules}

    lex = sim.with_background(sim.palm_poisson_sampler(Torus(2, 10.0)), "uniform_shift_lattice")
    lex_configs = [lex.draw(rng) for _ in range(1000)]
    for r in (circular_lex_rule(), circular_lex_rule(reverse=True)):
        bad[r.name] = sum(not check_preserving(build_allocation(r, c)) for c in lex_configs)

    window = sim.window_palm_poisson_sampler(4.0)
    tree_results = [_tree_certified_preserving(window.draw(rng)) for _ in range(1000)]
    bad["tree (certified atoms)"] = sum(r is False for r in tree_results)

    three = Configuration(EmptyMark(), PointMeasure(Torus(2, 10.0), [[0.0, 0.0], [1.0, 0.0], [2.1, 0.0]]))
    nearest_fails = not check_preserving(build_allocation(nearest_rule(), three))
    nearest_fails &= check_kernel(kernel_from_rule(nearest_rule()), three).preserving is False
    ok = all(v == 0 for v in bad.values()) and nearest_fails and all(r is not None for r in tree_results)
    report(7, ok, f"failures per rule over 1000 configurations {bad}; nearest rule on 3 atoms "
                  f"{'not preserving' if nearest_fails else 'preserving'}")


def test_criterion_8_cox_reduction(report):
    good = run_scenario(load_config("cox-reduction"))
    children = {c.claim: c.verdict for c in good.children}
    cfg = load_config("cox-reduction-shifted")
    g = group_from_descriptor(cfg["group"])
    shifted = sim.cox_sampler(build_sampler(g, cfg["process"]))
    fs = [count_ball(0.5), count_ball(1.0), nearest_distances(2, g.L / 2)]
    Cs = V._default_cox_sets(g)
    rejected = sum(V.mass_stationarity_test_mc(shifted, Cs, fs, 1000, 0.01, np.random.default_rng(seed),
                                               claim="thm-7.1:(X,N)").verdict == "fail" for seed in range(20))
    rate = rejected / 20
    ok = (children.get("thm-7.1:(X,N)") == "pass" and children.get("thm-7.1:((X,xi),N)") == "pass"
          and rate >= 0.95)
    report(8, ok, f"mass-stationary scenario {children}; shifted (X,N) rejection rate {rate:.2f}")


def test_criterion_9_bernoulli_transport(report):
    z2 = FiniteGroup.cyclic(2)
    p = two_point_stay_probabilities(2.0, 1.0)
    rule = bernoulli_transport(constant_rule(1), p)
    c = Configuration(EmptyMark(), PointMeasure.from_masses(z2, [2, 1]))
    push = expected_pushforward(build_allocation(rule, c))
    gap = float(np.max(np.abs(push.dense() - c.measure.dense())))
    inv = run_scenario(load_config("bernoulli-z2"))
    ok = (measures_equal(push, c.measure, EXACT) and gap <= EXACT and inv.verdict == "pass"
          and inv.max_statistic <= EXACT)
    report(9, ok, f"stay probabilities {p}, pushforward gap {gap:.2g}, shifted-law TV {inv.max_statistic:.2g}")


def test_criterion_10_kernel_identity(report):
    kernel_scenarios = {n: c for n, c in shipped_configs().items() if c["suite"] == "kernel_identity"}
    lines, ok = [], len(kernel_scenarios) >= 2
    for name, cfg in sorted(kernel_scenarios.items()):
        gaps = [c.statistic for c in run_scenario(cfg).cells]
        law = build_law(group_from_descriptor(cfg["group"]), cfg["process"])
        stationary = V.stationarity_test_exact(law).verdict == "pass"
        # the identity holds for every t exactly when the law is stationary
        ok &= (max(gaps) <= EXACT) == stationary == (cfg["expect"] == "pass")
        lines.append(f"{name}: stationary={stationary}, max gap {max(gaps):.2g}")
    report(10, ok, "; ".join(lines))
