# %% [markdown]
# # Two-arm stars: bound states against the opening angle
#
# Arms of length 300 with gamma = 0.1, one point every 1.5 length units.
# The lowest level rises with the angle and the number of levels below
# -gamma^2/4 does not grow.  Above that value the curves belong to states
# that live on the cut-off arms.

# %%
import math

import numpy as np
from scipy import optimize

from leakygraph import LambdaSystem, Star, discretize, find_eigenvalues, gap_report, sweep

PI = math.pi
grid = np.linspace(0.15 * PI, 0.9 * PI, 10)
solver = {"energy_window": (-0.01, -1e-4), "scan_points": 60}
sweeps = {}
for L2 in (300.0, 306.0):
    sweeps[L2] = sweep(lambda b: Star([b], [300.0, L2]), grid, 0.1, spacing=1.5,
                       parameter="beta", solver=solver)
    print(f"L2 = {L2}:")
    print(sweeps[L2].to_csv())

# %% [markdown]
# With equal arms the reflection symmetry separates even and odd states, and
# curves from different classes really cross.  A 2 percent mismatch in the arm
# lengths turns those crossings into avoided ones.  The grid is too coarse to
# see this, so the gap is minimised between grid points.

# %%
def gap(beta, L2):
    g = discretize(Star([beta], [300.0, L2]), 0.1, spacing=1.5)
    lv = find_eigenvalues(LambdaSystem(g), energy_window=(-0.00235, -0.00215),
                          scan_points=16, degeneracy_tol=0.0).levels
    return lv[1] - lv[0]


for L2 in (300.0, 306.0):
    r = optimize.minimize_scalar(gap, bounds=(grid[1], grid[3]), args=(L2,),
                                 method="bounded", options={"xatol": 1e-9})
    print(f"L2 = {L2}: smallest gap {r.fun:.2e} at beta = {r.x / PI:.5f} pi")

# %%
print(gap_report(sweeps[300.0], energy_window=(-0.01, -1e-4)).to_json())
