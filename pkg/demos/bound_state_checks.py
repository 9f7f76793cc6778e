# %% [markdown]
# # Point model against continuum references
#
# Straight leads need many points before the discrete chain reproduces the
# continuum threshold -gamma^2/4.  The threshold of an infinite chain of
# points is known in closed form up to a rapidly converging series, which
# explains most of the bias seen for stars.

# %%
import math

from leakygraph import LambdaSystem, Star, discretize, find_eigenvalues
from leakygraph.oracles import cross_eigenvalue, nest_bound, polymer_threshold, star_bs_lowest

for h in (0.3, 0.1, 0.03, 0.01):
    k = polymer_threshold(1.0 / h, 1, h)
    print(f"spacing {h}: chain threshold {-k * k:.5f} (continuum -0.25)")

# %% [markdown]
# The right-angle cross has the separable eigenvalue -gamma^2/2.  The bent
# line is compared with a Nystrom solution of the Birman-Schwinger equation
# on the same finite arms.

# %%
g = discretize(Star([math.pi / 2] * 3, [30.0] * 4), 1.0, spacing=0.1)
e = find_eigenvalues(LambdaSystem(g), kappa_range=(0.4, 1.0), scan_points=40).energies[0]
print(f"cross: point model {e:.4f}, exact {cross_eigenvalue(1.0)}")

bs = star_bs_lowest(math.pi / 2, 1.0, arm_length=30.0, nodes_per_arm=300)
g = discretize(Star([math.pi / 2], [30.0, 30.0]), 1.0, spacing=0.1)
e = find_eigenvalues(LambdaSystem(g), kappa_range=(0.3, 1.0), scan_points=40).energies[0]
print(f"bend: point model {e:.4f}, Nystrom {bs.energy:.4f}")

# %%
for beta in (0.1, 0.5, 1.0, math.pi / 2):
    print(f"beta = {beta:.3f}: at least {nest_bound(beta):.3f} bound states")
