# %% [markdown]
# # Delay times on the T-junction
#
# A lead meets two dead-end edges of lengths L1 and L2 at a single vertex.
# We build the scattering amplitude, send a Gaussian packet in and look at
# when it comes back.

# %%
import numpy as np
from scipy.signal import argrelmax

import graphdelay as gd
from graphdelay.graph import GOLDEN_L1, GOLDEN_L2

g = gd.load_graph("tjunction")
print(g.E, "edges,", g.D, "bonds,", g.H, "lead")

# %% [markdown]
# The closed form and the resolvent formula agree, and |S| = 1.

# %%
k = np.linspace(0.5, 50, 7)
closed = gd.tjunction_smatrix(GOLDEN_L1, GOLDEN_L2, k)
resolvent = np.array([gd.smatrix_resolvent(g, x)[0, 0] for x in k])
print(np.max(np.abs(closed - resolvent)), np.max(np.abs(np.abs(closed) - 1)))

# %% [markdown]
# Delay density for k0 = 1000, sigma = 100. The first two peaks sit at the
# round trips 2 L1 and 2 L2.

# %%
env = gd.gaussian_envelope(1000.0, 100.0)
d = gd.delay_density_fft(lambda k: gd.tjunction_smatrix(GOLDEN_L1, GOLDEN_L2, k), env, 1e-4, 4.0)
idx = argrelmax(d.density)[0]
idx = idx[d.density[idx] > 1e-3 * d.density.max()]
print("peaks:", np.round(d.s[idx[:4]], 4))
print("2 L1, 2 L2:", round(2 * GOLDEN_L1, 4), round(2 * GOLDEN_L2, 4))
print("C(4) =", d.cumulative_at(4.0))

# %% [markdown]
# Same density from the isometric path families: each family (t1, t2)
# returns after 2 (t1 L1 + t2 L2) and carries an exact rational amplitude.

# %%
fams = gd.tjunction_families(40, GOLDEN_L1, GOLDEN_L2)
s = d.s[(d.s > 0.5) & (d.s < 4.0)]
fam = gd.delay_density_families(fams, env, s, valid_until=2 * 41 * GOLDEN_L1)
print("max |families - fourier|:", np.max(np.abs(fam.density - d.density[(d.s > 0.5) & (d.s < 4.0)])))

# %% [markdown]
# Topological version: p_t is the probability of t excursions.

# %%
for t in range(1, 6):
    print(t, gd.tjunction_pt(t), gd.tjunction_ct(t))
