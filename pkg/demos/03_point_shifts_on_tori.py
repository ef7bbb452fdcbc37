# %% [markdown]
# # Point shifts of a Poisson Palm version
#
# On the circle, moving the origin to the `n`-th atom ahead (`T_n`) leaves
# the Palm version of a Poisson process invariant in law.  On the 2-D torus,
# moving to the nearest atom does not: after the shift the old origin is an
# atom closer to the new origin than to any other atom, so a closest-point
# indicator is always 1, while before the shift it often is 0.

# %%
import numpy as np

from typicality import simulate as sim
from typicality import verify as V
from typicality.functionals import closest_point_indicator, count_ball, gap_vector, nearest_distances
from typicality.groups import Torus
from typicality.shifts import nearest_rule, tn_rule

circle = Torus(1, 10.0)
palm = sim.palm_poisson_sampler(circle)
battery = [count_ball(1.0), gap_vector(), nearest_distances(2)]
rep = V.shift_invariance_suite([tn_rule(n) for n in range(-3, 4)], palm, battery, 5000, 0.01,
                               np.random.default_rng(1))
print(rep.summary())

# %%
torus = Torus(2, 10.0)
rep = V.shift_invariance_test(nearest_rule(), sim.palm_poisson_sampler(torus), [closest_point_indicator()],
                              5000, 0.01, np.random.default_rng(2))
after, before = rep.data["nearest|closest_point_indicator"]
print(rep.summary())
print(f"closest-point indicator: mean {after.mean():.3f} after the shift, {before.mean():.3f} before")
