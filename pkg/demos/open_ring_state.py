# %% [markdown]
# # An open ring and one of its eigenfunctions
#
# Cutting an arc of angle pi/3 out of the ring breaks the rotational symmetry,
# so the doubly degenerate levels split.  The sixth level (fifth excited
# state) lands close to -0.116.

# %%
import math

import numpy as np

from leakygraph import LambdaSystem, Ring, discretize, eval_eigenfunction, find_eigenvalues
from leakygraph.spectral import null_vector

g = discretize(Ring(10.0, math.pi / 3), 1.0, count=1000)
system = LambdaSystem(g)
spec = find_eigenvalues(system, kappa_range=(0.15, 0.6), scan_points=60)
for i, (e, f) in enumerate(zip(spec.energies, spec.flags)):
    print(f"state {i}: E = {e:.6f} [{f}]")

# %% [markdown]
# The null vector of the Lambda matrix gives the charges of the free Green
# functions that make up the eigenfunction.

# %%
e5 = spec.energies[5]
c = null_vector(system, e5)[:, 0]
grid = eval_eigenfunction(system, c, math.sqrt(-e5), (-14, 14, -14, 14), 57, 57)
row = grid.values[28]
print("psi along y = 0:", np.array2string(row[::4], precision=3))
grid.to_csv("open_ring_state5.csv")
