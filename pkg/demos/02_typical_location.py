# %% [markdown]
# # Uniform relocation on Z6
#
# If `S` is uniform and independent of `X`, then `S^{-1} X` is stationary
# whatever `X` is.  `S^{-1} X` has the law of `X` exactly when `X` was
# stationary already.

# %%
from typicality import simulate as sim
from typicality import verify as V
from typicality.groups import FiniteGroup
from typicality.measures import Configuration, FiniteLaw, GridField, PointMeasure

z6 = FiniteGroup.cyclic(6)
stationary = sim.uniform_translates(z6, [2, 0, 1, 0, 0, 1], field_values=[1.0, 0, 0, 2.0, 0, 0])
moved = sim.uniform_relocation(stationary)
print("stationary X:  S^-1X stationary ->", V.stationarity_test_exact(moved).verdict,
      "| S^-1X =D X ->", V.law_equality_exact(moved, stationary).verdict)

# %% [markdown]
# A bump field pinned at the identity is not stationary.  After relocation it
# is, but its law changed.

# %%
bump = FiniteLaw([(Configuration(GridField(z6, [3.0, 0, 0, 0, 0, 0]), PointMeasure.empty(z6)), 1.0)])
moved = sim.uniform_relocation(bump)
print("bump X:        S^-1X stationary ->", V.stationarity_test_exact(moved).verdict,
      "| S^-1X =D X ->", V.law_equality_exact(moved, bump).verdict)
