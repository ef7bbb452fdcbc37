import numpy as np
import pytest

from typicality import functionals as F
from typicality import simulate as sim
from typicality.groups import FiniteGroup, Torus
from typicality.measures import Configuration, EmptyMark, GridField, PointMeasure

CIRCLE = Torus(1, 10.0)
PLANE10 = Torus(2, 10.0)


def circle_config(xs):
    return Configuration(EmptyMark(), PointMeasure(CIRCLE, np.array(xs, float)[:, None]))


def test_circle_functional_values():
    c = circle_config([0.0, 0.5, 2.5, 9.0])
    assert F.count_ball(1.0)(c)[0] == 3.0
    assert np.allclose(F.gap_vector()(c), [0.5, 1.0])
    assert np.allclose(F.nearest_distances(2)(c), [0.5, 1.0])
    assert np.allclose(F.nearest_distances(2, cap=0.7)(c), [0.5, 0.7])
    lonely = circle_config([0.0])
    assert np.allclose(F.gap_vector()(lonely), [10.0, 10.0])
    assert np.allclose(F.nearest_distances(2)(lonely), [5.0, 5.0])


def brute_closest_point(pts, L):
    """1 if some non-origin atom is strictly closer to 0 than to every other atom."""
    def dist(a, b):
        d = np.abs(np.asarray(a) - np.asarray(b)) % L
        return float(np.sqrt(np.sum(np.minimum(d, L - d) ** 2)))

    cand = [p for p in pts if dist(p, [0, 0]) > 1e-9]
    for p in cand:
        if all(dist(p, [0, 0]) < dist(p, q) for q in cand if q is not p):
            return 1.0
    return 0.0


def test_closest_point_indicator_matches_brute_force():
    rng = np.random.default_rng(1)
    s = sim.palm_poisson_sampler(PLANE10)
    f = F.closest_point_indicator()
    values = []
    for _ in range(300):
        c = s.draw(rng)
        pts = [tuple(p) for p in c.measure.locations]
        v = f(c)[0]
        assert v == brute_closest_point(pts, 10.0)
        values.append(v)
    # both outcomes occur for the unshifted Palm version
    assert 0 < np.mean(values) < 1


def test_closest_point_examples():
    f = F.closest_point_indicator()
    make = lambda pts: Configuration(EmptyMark(), PointMeasure(PLANE10, np.array(pts, float)))
    assert f(make([[0, 0], [1, 0]]))[0] == 1.0
    # (2, 0) is as close to (4, 0) as to the origin; (4, 0) is closer to (2, 0)
    assert f(make([[0, 0], [2, 0], [4, 0]]))[0] == 0.0


@pytest.mark.parametrize("make", [
    lambda: F.count_ball(0.5),
    lambda: F.count_ball(1.7),
    lambda: F.nearest_distances(3),
    lambda: F.nearest_distances(2, cap=1.0),
    lambda: F.closest_point_indicator(),
])
@pytest.mark.parametrize("g", [CIRCLE, PLANE10], ids=["circle", "torus2"])
def test_batch_path_matches_scalar(make, g):
    f = make()
    pb = sim.poisson_batch(g, 1.0, 400, np.random.default_rng(3), with_origin=True)
    scalar = np.array([f(pb.configuration(i)) for i in range(len(pb))])
    assert np.allclose(f.on_batch(pb), scalar, rtol=0, atol=1e-12)


def test_gap_vector_batch_matches_scalar():
    f = F.gap_vector()
    pb = sim.poisson_batch(CIRCLE, 0.3, 400, np.random.default_rng(4), with_origin=True)
    scalar = np.array([f(pb.configuration(i)) for i in range(len(pb))])
    assert np.array_equal(f.on_batch(pb), scalar)


def test_finite_group_functionals():
    z4 = FiniteGroup.cyclic(4)
    c = Configuration(GridField(z4, [3.0, 1.0, 4.0, 1.5]), PointMeasure.from_masses(z4, [2, 0, 1, 0]))
    assert F.mass_at_origin()(c)[0] == 2.0
    assert np.allclose(F.mass_vector(4)(c), [2, 0, 1, 0])
    assert F.field_at_origin()(c)[0] == 3.0
    assert F.field_at_origin()(c.shift(1))[0] == 1.5


def test_declared_dimension_is_enforced():
    bad = F.Functional("bad", lambda c: [1.0, 2.0], dim=1)
    with pytest.raises(ValueError, match="declared"):
        bad(circle_config([0.0]))


def test_descriptor_registry():
    f = F.functional_from_descriptor({"name": "count_ball", "r": 0.5})
    assert f.name == "count_ball(0.5)"
    assert F.functional_from_descriptor("mass_vector", FiniteGroup.cyclic(3)).dim == 3
    with pytest.raises(KeyError):
        F.functional_from_descriptor("no_such_functional")
