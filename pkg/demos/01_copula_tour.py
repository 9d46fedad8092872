"""
A tour of the five Archimedean families
=======================================

Each family links two uniform margins through a single dependence parameter
theta. Kendall's tau puts the families on a common scale, so we start from a
target tau, look up theta, and compare how the families spread their
dependence over the unit square.
"""

# %%
import numpy as np
from scipy import stats

from survcopula.copulas import Copula, Family, kendall_tau, tau_inverse, tau_range

rng = np.random.default_rng(7)

# %%
# Attainable tau ranges. AMH is the odd one out: it only reaches moderate
# dependence, and asking for more truncates to its upper limit with a warning.
for fam in Family:
    lo, hi = tau_range(fam)
    print(f"{fam.value:8s} tau in [{lo:+.4f}, {hi:+.4f}]")

# %%
# The same tau = 0.25 means a different theta in every family.
target = 0.25
for fam in Family:
    theta = tau_inverse(fam, target)
    print(f"{fam.value:8s} theta = {theta:8.4f}   tau(theta) = {kendall_tau(fam, theta):.6f}")

# %%
# Tail behaviour: the probability that both margins fall in the lower 5%,
# relative to independence. Clayton concentrates dependence in the lower
# tail, Gumbel-Hougaard (GH) and Joe in the upper tail.
q = 0.05
print("\nP(U<q, V<q) / q^2 and P(U>1-q, V>1-q) / q^2 at tau = 0.25")
for fam in Family:
    c = Copula(fam, tau_inverse(fam, target))
    lower = c.cdf([q, q]) / q**2
    upper = (1 - 2 * (1 - q) + c.cdf([1 - q, 1 - q])) / q**2
    print(f"{fam.value:8s} lower {lower:5.2f}   upper {upper:5.2f}")

# %%
# Sampling by conditional inversion reproduces the target tau.
for fam in Family:
    uv = Copula(fam, tau_inverse(fam, target)).sample(5000, rng)
    emp = stats.kendalltau(uv[:, 0], uv[:, 1]).statistic
    print(f"{fam.value:8s} empirical tau from 5000 pairs: {emp:.3f}")

# %%
# The conditional distribution dC/du1 is what enters the likelihood when only
# the first event is observed; at independence it is just u2.
c = Copula("Clayton", 2.0)
print("\ndC/du1(0.3, v) for v = 0.2, 0.5, 0.8:", np.round(c.partial(0.3, np.array([0.2, 0.5, 0.8])), 4))
print("density c(0.3, 0.3) =", round(c.density(0.3, 0.3), 4))
