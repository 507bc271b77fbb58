# %% [markdown]
# # Narrow resonances and the power-law tail
#
# Poles of S(k) close to the real axis trap the packet for a long time.
# On the T-junction they appear wherever sin(k L1) and sin(k L2) vanish at
# nearly the same k.

# %%
import numpy as np

import graphdelay as gd
from graphdelay.graph import GOLDEN_L1, GOLDEN_L2

L = GOLDEN_L1 + GOLDEN_L2
pairs = [p for p in gd.near_degenerate_pairs(GOLDEN_L1, GOLDEN_L2, (0, 2000)) if not p.commensurate]
p = pairs[0]
seed = gd.pole_from_pair(p.k1, p.k2, GOLDEN_L1, GOLDEN_L2)
pole = gd.refine_pole((GOLDEN_L1, GOLDEN_L2), seed)
print("pair:", p.k1, p.k2)
print("seed:", seed.kappa, seed.gamma)
print("pole:", pole.kappa, pole.gamma)

# %% [markdown]
# Width statistics over k in [0, 5000] against the sqrt(L^3/(2 gamma)) law.

# %%
poles = gd.find_poles(GOLDEN_L1, GOLDEN_L2, 0.0, 5000.0)
edges, counts, predicted = gd.width_histogram(poles, L, 5000.0)
for lo, c, pr in zip(edges[:-1], counts, predicted):
    print(f"{lo:8.0e}  {c:4d}  {pr:7.1f}")

# %% [markdown]
# Long-time tail: the pole sum, the integral law and the Fourier route.

# %%
env = gd.gaussian_envelope(1000.0, 200.0)
near = gd.find_poles(GOLDEN_L1, GOLDEN_L2, 200.0, 1800.0)
s = np.array([10.0, 30.0, 100.0, 300.0])
res = gd.longtime_cumulative_resonances(near, env, s, (200.0, 1800.0))
integral = gd.longtime_cumulative_integral(L, s)
d = gd.delay_density_fft(lambda k: gd.tjunction_smatrix(GOLDEN_L1, GOLDEN_L2, k), env, 2.5e-4, 310.0)
print(np.c_[s, 1 - res, 1 - integral, 1 - d.cumulative_at(s)])
