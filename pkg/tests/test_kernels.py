import numpy as np
import pytest

from typicality import kernels as K
from typicality import simulate as sim
from typicality.groups import FiniteGroup, Torus
from typicality.measures import Configuration, EmptyMark, FiniteLaw, GridField, PointMeasure, measures_equal
from typicality.shifts import identity_rule, nearest_rule, tn_rule

Z3 = FiniteGroup.cyclic(3)
Z4 = FiniteGroup.cyclic(4)


def finite(g, masses, field=None):
    mark = EmptyMark() if field is None else GridField(g, field)
    return Configuration(mark, PointMeasure.from_masses(g, masses))


def mass_uniform_kernel():
    """K(s, .) = xi / xi(G): invariant, Markovian and preserving."""
    return K.Kernel("mass_uniform", lambda c: PointMeasure(
        c.group, c.measure.locations.tolist(), c.measure.weights / c.measure.total_mass()))


def test_origin_sections():
    c = finite(Z3, [2, 1, 0])
    assert measures_equal(K.kernel_from_allocation(identity_rule()).section(c), PointMeasure(Z3, [0]))
    assert measures_equal(K.kernel_point_shift(2).section(c), PointMeasure(Z3, [2]))
    assert measures_equal(K.identity_kernel().section(c), PointMeasure(Z3, [0]))


def test_identity_kernel_preserving_and_invariant():
    for c in (finite(Z3, [2, 1, 0]), finite(Z4, [0, 1, 5, 1.5])):
        assert K.check_kernel(K.identity_kernel(), c) == (True, True)


def test_point_shift_on_haar_is_preserving():
    c = Configuration(EmptyMark(), PointMeasure.counting(Z4))
    for t in Z4.elements():
        assert K.check_kernel(K.kernel_point_shift(t), c) == (True, True)


def test_point_shift_on_skewed_measure_is_not_preserving():
    c = finite(Z3, [2, 1, 0])
    k = K.kernel_point_shift(1)
    # direct evaluation: int K(s, {0}) xi(ds) = xi({2}) = 0, but xi({0}) = 2
    into_origin = sum(w * k.at(c, int(s)).mass_at(0) for s, w in zip(c.measure.locations, c.measure.weights))
    assert into_origin == 0.0
    assert K.check_kernel(k, c) == (False, True)


def test_rule_kernels():
    rng = np.random.default_rng(1)
    circle = Torus(1, 10.0)
    s = sim.palm_poisson_sampler(circle)
    for _ in range(20):
        assert K.check_kernel(K.kernel_from_rule(tn_rule(1)), s.draw(rng)) == (True, True)
    three = Configuration(EmptyMark(), PointMeasure(Torus(2, 10.0), [[0, 0], [-1.1, 0], [-2.1, 0]]))
    assert K.check_kernel(K.kernel_from_rule(nearest_rule()), three).preserving is False


def test_mass_uniform_kernel_checks():
    assert K.check_kernel(mass_uniform_kernel(), finite(Z4, [3, 0, 1, 2])) == (True, True)


def test_section_bounds_enforced():
    neg = K.Kernel("neg", lambda c: PointMeasure(c.group, [0], [-1.0]))
    big = K.Kernel("big", lambda c: PointMeasure(c.group, [0], [2.0]))
    c = finite(Z3, [1, 1, 1])
    # negative weights are refused when the measure is built
    with pytest.raises(ValueError):
        neg.section(c)
    with pytest.raises(ValueError, match="bound"):
        big.section(c)
    unbounded = K.Kernel("u", lambda c: PointMeasure(c.group, [0]), bounded_constant=np.inf)
    with pytest.raises(ValueError, match="bounded"):
        K.eval_kernel_identity(unbounded, FiniteLaw([(c, 1.0)]), lambda c: 1.0)


def test_kernel_identity_point_mass_at_haar():
    # dist = point mass at (X, lambda): lhs is f(t^{-1}(X, lambda))
    c = finite(Z4, [1, 1, 1, 1], field=[0.0, 1.0, 2.0, 3.0])
    law = FiniteLaw([(c, 1.0)])
    f = lambda c: c.mark.value_at(0)
    for t in Z4.elements():
        lhs, rhs = K.eval_kernel_identity(K.kernel_point_shift(t), law, f)
        assert lhs == f(c.shift(Z4.inverse(t)))
        assert rhs == 0.0
    lhs, rhs = K.eval_kernel_identity(K.identity_kernel(), law, f)
    assert lhs == rhs


def test_kernel_identity_on_palm_law():
    palm = sim.palm_exact(sim.uniform_translates(Z3, [2, 1, 0]))
    fs = [lambda c: c.measure.mass_at(0), lambda c: c.measure.mass_at(1) ** 2, lambda c: float(c.measure.mass_at(2) == 0)]
    for f in fs:
        lhs, rhs = K.eval_kernel_identity(mass_uniform_kernel(), palm, f)
        assert abs(lhs - rhs) <= 1e-12
    # the same kernel separates the wrong mixture
    wrong = FiniteLaw([(c, 0.5) for c, _ in palm.items()])
    gaps = [abs(np.subtract(*K.eval_kernel_identity(mass_uniform_kernel(), wrong, f))) for f in fs]
    assert max(gaps) > 0.05
