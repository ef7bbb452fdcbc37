# %% [markdown]
# # The tree shift on a windowed planar Poisson process
#
# Every atom's mother is the first atom met by sweeping a segment of width 1
# upward.  The shift visits the eldest daughter, else the next younger
# sister, else the next younger sister of the nearest ancestor that has one.
# The reverse rule walks the same depth-first order backwards.  Inside a
# finite window some of these walks leave the observed region; such draws
# are censored and reported, never silently dropped.

# %%
import numpy as np

from typicality import simulate as sim
from typicality import verify as V
from typicality.functionals import count_ball, nearest_distances
from typicality.tree import tree_reverse_rule, tree_rule

window = sim.window_palm_poisson_sampler(8.0)
rng = np.random.default_rng(3)
pair = V.reverse_pair_test(tree_rule(1.0), tree_reverse_rule(1.0), window, 300, rng)
print(pair.summary(), pair.telemetry)

# %%
rep = V.shift_invariance_test(tree_rule(1.0), window, [count_ball(1.0), nearest_distances(2, cap=1.0)], 2000,
                              0.01, np.random.default_rng(4), max_loss_rate=0.1)
print(rep.summary(), "censoring rate", round(rep.telemetry["censoring_rate"], 3))
