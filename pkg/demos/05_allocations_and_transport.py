# %% [markdown]
# # Allocations and a randomized transport
#
# A shift rule induces the allocation `tau(t) = t pi(t^{-1} c)`.  Rules that
# have a reverse rule give allocations that carry the mass onto itself.  The
# nearest-atom rule does not: on three collinear atoms two of them point to
# the middle one.

# %%
import numpy as np

from typicality import simulate as sim
from typicality.groups import FiniteGroup, Torus
from typicality.measures import Configuration, EmptyMark, PointMeasure
from typicality.shifts import (bernoulli_transport, build_allocation, check_preserving, constant_rule,
                               expected_pushforward, matching_rule, nearest_rule, tn_rule,
                               two_point_stay_probabilities)

rng = np.random.default_rng(5)
c = sim.palm_poisson_sampler(Torus(1, 10.0)).draw(rng)
for rule in (tn_rule(2), matching_rule()):
    print(rule.name, "preserving:", check_preserving(build_allocation(rule, c)))

three = Configuration(EmptyMark(), PointMeasure(Torus(2, 10.0), [[0.0, 0.0], [1.0, 0.0], [2.1, 0.0]]))
print("nearest on three atoms preserving:", check_preserving(build_allocation(nearest_rule(), three)))

# %% [markdown]
# On Z2 with masses (2, 1) no deterministic rule preserves the mass.  A coin
# that keeps the heavier site with probability 1/2 and always leaves the
# lighter one does, in expectation over the coin.

# %%
z2 = FiniteGroup.cyclic(2)
masses = Configuration(EmptyMark(), PointMeasure.from_masses(z2, [2, 1]))
p = two_point_stay_probabilities(2.0, 1.0)
rule = bernoulli_transport(constant_rule(1), p)
print("stay probabilities", p)
print("expected pushforward", expected_pushforward(build_allocation(rule, masses)).dense())
