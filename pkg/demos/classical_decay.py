# %% [markdown]
# # Classical delay on the T-junction
#
# Dropping interference leaves a random walk on the bonds with transition
# probabilities |W|^2. Its survival decays exponentially.

# %%
import numpy as np

import graphdelay as gd

g = gd.load_graph("tjunction")
law = gd.decay_law(g)
print("xi =", law.xi, " A =", law.prefactor)

# %% [markdown]
# Exact staircase C(s) against a million walkers.

# %%
jumps = gd.classical_jumps(g, s_max=40.0)
mc = gd.classical_delay_mc(g, 0, 10**6, seed=7)
s = np.array([1.0, 2.0, 5.0, 10.0])
print(np.c_[s, jumps(s), mc.empirical_cdf(s)])
print("KS:", gd.ks_statistic(mc, jumps), "critical (1%):", gd.ks_critical_value(10**6))

# %% [markdown]
# The staircase oscillates around the smooth asymptote; its log-slope
# gives xi back.

# %%
s = np.linspace(10, 20, 2001)
tail = 1 - jumps(s)
print("fitted xi:", -np.polyfit(s, np.log(tail), 1)[0])
ratio = tail / (1 - gd.classical_asymptote(law, s))
print("ratio range:", ratio.min(), ratio.max(), " mean:", ratio.mean())
