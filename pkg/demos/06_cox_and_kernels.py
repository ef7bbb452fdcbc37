# %% [markdown]
# # Cox reduction and point-shift kernels
#
# Sampling a Poisson process driven by a mass-stationary diffuse random
# measure, plus an atom at the origin, gives a mass-stationary point process.
# Shifting the driver away from the origin breaks it.

# %%
import numpy as np

from typicality import simulate as sim
from typicality import verify as V
from typicality.functionals import count_ball, nearest_distances
from typicality.groups import FiniteGroup, Torus

circle = Torus(1, 10.0)
bumps = sim.bump_density_sampler(circle, bumps=2, width=0.2, base=0.05, total=10.0, grid=200)
sets = [circle.box([-0.5], [1.0]), circle.box([-1.25], [2.5])]
fs = [count_ball(0.5), count_ball(1.0), nearest_distances(2, 5.0)]
for name, palm in (("palm", sim.palm_sampler(bumps)), ("shifted", sim.palm_sampler(bumps, offset=np.array([0.5])))):
    rep = V.mass_stationarity_test_mc(sim.cox_sampler(palm), sets, fs, 1000, 0.01, np.random.default_rng(6))
    print(name, rep.summary())

# %% [markdown]
# On Z4 the kernel identity for the point-shift kernels `delta_t` holds for
# all `t` exactly when the law is stationary.

# %%
z4 = FiniteGroup.cyclic(4)
for name, law in (("stationary", sim.uniform_translates(z4, [2, 1, 0, 1])),
                  ("biased", sim.uniform_translates(z4, [2, 1, 0, 1], probs=[0.4, 0.2, 0.2, 0.2]))):
    rep = V.kernel_identity_test(law)
    print(name, [f"{c.label}: {c.statistic:.2g}" for c in rep.cells])
