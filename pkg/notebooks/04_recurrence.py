# %% [markdown]
# # Recurrence post-processing
#
# Pairs are grouped by what they are: vacuum (random bits), single photon
# (bounded phase error) or multi-photon (fully known to the eavesdropper).
# After one B step each surviving pair mixes two kinds, and each mix gets its
# own privacy residue. The unknown correlation inside single-photon pairs is
# the variable a; the scheme takes the worst a by maximizing a concave
# penalty.

# %%
import numpy as np

from twoway_qkd import GYS, SchemeConfig, max_secure_distance, maximize_F_a, optimize_mu
from twoway_qkd.recurrence import case_residue_bounds, f_a

e1, d1, d2 = 0.2, 2.0, 1.0
a_star, f_star = maximize_F_a(e1, d1, d2)
grid = np.linspace(0, e1, 2001)
print(f"bisection a*={a_star:.6f} F={f_star:.6f}; grid best a={grid[np.argmax(f_a(grid, e1, d1, d2))]:.6f}")
print("equal weights give a* = e1^2:", maximize_F_a(0.1, 1.0, 1.0)[0], 0.1**2)

# %%
for k, v in case_residue_bounds(0.05, 0.3, 0.0025).items():
    print(f"{k}: {v:+.4f}")

# %% [markdown]
# Gain over one-way post-processing.

# %%
rec, one = SchemeConfig(scheme="recurrence"), SchemeConfig(scheme="oneway")
for d in (25, 50, 100, 130):
    r, o = optimize_mu(GYS, rec, d).rate_star, optimize_mu(GYS, one, d).rate_star
    print(f"{d:4d} km  recurrence/one-way = {r / o:.3f}")
print(f"recurrence reaches {max_secure_distance(GYS, rec).distance_km:.1f} km")
