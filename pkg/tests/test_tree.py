import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from typicality import simulate as sim
from typicality.shifts import Censored, build_allocation, check_reverse_pair
from typicality.tree import tree_daughters, tree_mother, tree_reverse_rule, tree_rule, tree_shift, tree_shift_reverse
from typicality.measures import Configuration, EmptyMark, PointMeasure, RegionMark

PLANE = sim.plane()


def config(pts, window=None):
    mark = EmptyMark() if window is None else RegionMark(PLANE.box([-window, -window], [2 * window, 2 * window]))
    return Configuration(mark, PointMeasure(PLANE, PLANE.reduce(np.array(pts, float))))


# --------------------------------------------------------------------------
# brute-force oracle on plain coordinate tuples


def oracle_mother(pts, i):
    x, y = pts[i]
    best = None
    for j, (u, v) in enumerate(pts):
        if j != i and abs(u - x) <= 0.5 and v > y:
            key = (v - y, u - x)
            if best is None or key < best[0]:
                best = (key, j)
    return None if best is None else best[1]


def oracle_tree(pts):
    mother = [oracle_mother(pts, i) for i in range(len(pts))]
    kids = {i: sorted((j for j, m in enumerate(mother) if m == i), key=lambda j: pts[j][0]) for i in range(len(pts))}
    return mother, kids


def oracle_forward(pts, o=0):
    """Index of the target and which of the three cases produced it."""
    mother, kids = oracle_tree(pts)
    if kids[o]:
        return kids[o][0], "daughter"
    node = o
    while mother[node] is not None:
        younger = [j for j in kids[mother[node]] if pts[j][0] > pts[node][0]]
        if younger:
            return younger[0], "sister" if node == o else "ancestor"
        node = mother[node]
    return None, None


def oracle_backward(pts, o=0):
    mother, kids = oracle_tree(pts)
    if mother[o] is None:
        return None, None
    older = [j for j in kids[mother[o]] if pts[j][0] < pts[o][0]]
    if not older:
        return mother[o], "mother"
    node = older[-1]
    if not kids[node]:
        return node, "sister"
    while kids[node]:
        node = kids[node][-1]
    return node, "offspring"


# --------------------------------------------------------------------------


def test_mother_examples():
    xi = config([[0, 0], [0.3, 1.0], [0.8, 2.0]]).measure
    assert np.allclose(tree_mother(xi, [0.0, 0.0]), [0.3, 1.0])
    assert tree_mother(config([[0, 0], [0.8, 1.0]]).measure, [0.0, 0.0]) is None


def test_mother_censored_near_window_edge():
    pts = [[0, 0], [0.1, 1.0]]
    c = config(pts, window=0.4)
    assert tree_mother(c.measure, [0.0, 0.0], window=c.mark.region) is None
    c = config(pts, window=2.0)
    assert np.allclose(tree_mother(c.measure, [0.0, 0.0], window=c.mark.region), [0.1, 1.0])


def test_oldest_daughter_case():
    pts = [[0, 0], [-0.2, -1.0], [0.4, -1.0], [0, 1]]
    c = config(pts)
    kids = tree_daughters(c.measure, [0.0, 0.0])
    assert np.allclose(PLANE.signed(kids), [[-0.2, -1.0], [0.4, -1.0]])
    assert np.allclose(PLANE.signed(tree_shift(c)), [-0.2, -1.0])


def test_younger_sister_case():
    # no daughter; (0.6, -0.2) shares the mother (0.2, 1) and has larger x
    pts = [[0, 0], [0.2, 1.0], [0.6, -0.2]]
    c = config(pts)
    assert len(tree_daughters(c.measure, [0.0, 0.0])) == 0
    assert np.allclose(PLANE.signed(tree_shift(c)), [0.6, -0.2])
    assert oracle_forward(pts) == (2, "sister")


def test_ancestor_case():
    # the origin is an only child; its mother (0.3, 1) has a younger sister (0.9, 0.5)
    pts = [[0, 0], [0.3, 1.0], [0.9, 0.5], [0.6, 2.0]]
    mother, _ = oracle_tree(pts)
    assert mother[:3] == [1, 3, 3]
    assert np.allclose(PLANE.signed(tree_shift(config(pts))), [0.9, 0.5])
    assert oracle_forward(pts) == (2, "ancestor")


def test_reverse_mother_case():
    # no older sister: back to the mother
    pts = [[0, 0], [0.2, 1.0], [0.6, -0.2]]
    assert oracle_backward(pts) == (1, "mother")
    assert np.allclose(PLANE.signed(tree_shift_reverse(config(pts))), [0.2, 1.0])


# dyadic coordinates survive the mod-L reduction exactly, so boundary cases
# |dx| = 1/2 and sweep-distance ties are decided identically by both routes
dyadic = st.integers(-192, 192).map(lambda k: k / 64)


@settings(max_examples=150, deadline=None)
@given(st.lists(st.tuples(dyadic, dyadic), min_size=1, max_size=25, unique=True))
def test_mother_matches_brute_force_scan(others):
    pts = [(0.0, 0.0)] + [p for p in others if p != (0.0, 0.0)]
    c = config(pts, window=50)
    got = tree_mother(c.measure, [0.0, 0.0], window=c.mark.region)
    j = oracle_mother(pts, 0)
    if j is None:
        assert got is None
    else:
        got = PLANE.signed(got)
        # the mother is within half a unit in x and has the smallest sweep distance
        assert abs(got[0]) <= 0.5 and got[1] > 0
        assert tuple(got) == pts[j]


def window_draws(n, seed, half_width=8.0):
    s = sim.window_palm_poisson_sampler(half_width)
    rng = np.random.default_rng(seed)
    return [s.draw(rng) for _ in range(n)]


def test_tree_shift_matches_oracle_on_window_draws():
    # every case of both rules must occur and agree with the oracle
    cases = {}
    for c in window_draws(200, 1):
        pts = [tuple(p) for p in PLANE.signed(c.measure.locations)]
        o = c.measure.index_of(PLANE.identity)
        for rule, oracle in ((tree_shift, oracle_forward), (tree_shift_reverse, oracle_backward)):
            try:
                t = rule(c)
            except Censored:
                continue
            j, case = oracle(pts, o)
            assert j is not None and np.allclose(PLANE.signed(t), pts[j])
            cases[(rule.__name__, case)] = cases.get((rule.__name__, case), 0) + 1
    for case in ("daughter", "sister", "ancestor"):
        assert cases.get(("tree_shift", case), 0) >= 5
    for case in ("mother", "sister", "offspring"):
        assert cases.get(("tree_shift_reverse", case), 0) >= 5


def test_tree_reverse_pair_on_window_draws():
    valid = 0
    for c in window_draws(300, 2):
        r = check_reverse_pair(tree_rule(1.0), tree_reverse_rule(1.0), c)
        if r is not None:
            assert r
            valid += 1
    assert valid > 250


def test_tree_allocation_bijective_on_certified_atoms():
    # evaluate the allocation at every atom whose image is determined by the window
    for c in window_draws(5, 3, half_width=5.0):
        tau = build_allocation(tree_rule(), c)
        tau_rev = build_allocation(tree_reverse_rule(), c)
        images = {}
        for s in c.measure.locations:
            try:
                t = tau(s)
                back = tau_rev(t)
            except Censored:
                continue
            assert c.measure.index_of(t) is not None
            assert PLANE.equal(back, s)
            images.setdefault(tuple(np.round(t, 9)), []).append(s)
        assert images and all(len(v) == 1 for v in images.values())


def test_tree_needs_plane():
    from typicality.groups import Torus

    c = Configuration(EmptyMark(), PointMeasure(Torus(1, 10.0), [[0.0], [1.0]]))
    with pytest.raises(ValueError):
        tree_shift(c)
