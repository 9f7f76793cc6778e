# %% [markdown]
# # Lead-length sweeps and resonance signatures
#
# Cut-off leads turn the continuum into a ladder of levels that slide down
# as the leads grow.  A resonance of the infinite graph shows up as a curve
# that stays flat while the lead levels pass it, with narrow avoided
# crossings.  The three shapes below are an Omega-like loop with a narrow
# neck, a simple bend, and a stair (Z) graph.

# %%
import math

import numpy as np

from leakygraph import Star, ZLine, gap_report, omega_loop, sweep
from leakygraph.oracles import polymer_threshold
from leakygraph.sweeps import plateau_window

# %% [markdown]
# Leads are swept in whole multiples of the point spacing, otherwise rounding
# of the per-edge point counts adds a sawtooth to every curve.

# %%
gamma, h = 1.0, 0.3
grid = 0.3 * np.arange(7, 101, 2)
solver = {"kappa_range": (0.3, 0.6), "scan_points": 40}
s = 1e-3 * gamma ** 2
window = plateau_window(gamma, h, grid.max(), s, e_hi=-0.09)
print(f"analysis window {window}")
for width in (1.9, 2.9, 5.2):
    sr = sweep(lambda L: omega_loop(10.0, width, L), grid, gamma, spacing=h, solver=solver)
    rep = gap_report(sr, slope_threshold=s, energy_window=window)
    print(f"neck {width}: {len(rep.crossings)} gap minima, smallest {rep.min_gap:.2e}, "
          f"{len(rep.plateaus)} plateaus")

# %% [markdown]
# The bend binds a single level below the lead continuum, so there is nothing
# to cross there.

# %%
sr = sweep(lambda L: Star([math.pi / 4], [L, L]), 0.3 * np.arange(10, 101, 2), gamma,
           spacing=h, solver={"kappa_range": (0.3, 1.0), "scan_points": 40})
print(sr.curves()[::10, :3])

# %% [markdown]
# Stairs with gamma = 5: the sharper the bend, the narrower the gaps.  The
# straight case has no gap minima at all.

# %%
gamma, h = 5.0, 0.1
k = polymer_threshold(1.0 / (gamma * h), 1, h)
e_thr = -k * k
grid = 0.1 * np.arange(20, 181, 4)
s = 1e-3 * gamma ** 2
window = plateau_window(gamma, h, grid.max(), s, e_hi=e_thr / 4)
for theta in (0.32 * math.pi, math.pi / 2, math.pi):
    sr = sweep(lambda L: ZLine(10.0, theta, L), grid, gamma, spacing=h,
               solver={"energy_window": (e_thr, e_thr / 4), "scan_points": 40})
    rep = gap_report(sr, slope_threshold=s, energy_window=window)
    print(f"theta = {theta / math.pi:.2f} pi: smallest gap {rep.min_gap:.2e}")
