# %% [markdown]
# # Rings: exact levels against point approximations
#
# A full ring of radius R with coupling gamma binds one level per angular
# momentum l with gamma R > 2 l.  The point model samples the ring at N
# equidistant points and should approach those levels as N grows.

# %%
import numpy as np

from leakygraph import LambdaSystem, Ring, discretize, find_eigenvalues
from leakygraph.oracles import ring_levels
from leakygraph.sweeps import convergence_fit

R = 10.0
for gamma in (0.5, 1.0):
    print(f"gamma = {gamma}")
    for lev in ring_levels(R, gamma):
        print(f"  l = {lev.l}: E = {lev.E:.6f} (multiplicity {lev.multiplicity})")

# %% [markdown]
# With 1000 points the levels sit a few percent above the exact ones.  The
# error shrinks slowly because each point carries a logarithmically divergent
# self-interaction.

# %%
gamma = 0.5
exact = ring_levels(R, gamma)
system = LambdaSystem(discretize(Ring(R), gamma, count=1000))
spec = find_eigenvalues(system, energy_window=(1.5 * exact[0].E, 0.5 * exact[-1].E),
                        scan_points=40)
for lev, e, m in zip(exact, spec.energies, spec.multiplicities):
    print(f"l = {lev.l}: point model {e:.6f} x{m}, exact {lev.E:.6f}, "
          f"error {abs(e - lev.E) / abs(lev.E):.2%}")

# %% [markdown]
# Ground-state error against N on a log-log scale.

# %%
e0 = exact[0].E
data = []
for n in (100, 200, 400, 800):
    s = find_eigenvalues(LambdaSystem(discretize(Ring(R), gamma, count=n)),
                         energy_window=(4 * e0, e0 / 4), scan_points=40)
    data.append((n, abs(s.energies[0] - e0)))
    print(f"N = {n:4d}: error {data[-1][1]:.3e}")
fit = convergence_fit(data)
print(f"error ~ {fit.prefactor:.3f} N^-{fit.exponent:.3f}")
