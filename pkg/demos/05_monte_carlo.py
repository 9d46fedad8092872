"""
A small Monte Carlo study
=========================

``run_mc`` generates replicated datasets, fits several model specifications to
each and summarizes average estimate (AE), empirical and average standard
errors (SDE, ASE), average relative bias (ARB), interval bounds and coverage
(CR), plus how often each specification wins on AIC. Replicas get independent
random streams, so results do not depend on the number of worker processes.
"""

# %%
from survcopula import ModelSpec, Scenario, run_mc

scenario = Scenario.standard("Clayton", tau=0.25, n=300, seed=2024)
specs = [ModelSpec("Clayton", "weibull", "YP"), ModelSpec("Frank", "weibull", "YP")]
report = run_mc(scenario, M=10, specs=specs)

# %%
for label, stats in report.statistics.items():
    print(f"{label}: converged {report.converged[label]}/{report.M}, AIC choice {report.choice[label]:.2f}")
    for name in ("beta1S[1]", "beta1L[1]", "tau"):
        s = stats[name]
        print(f"  {name:10s} AE {s.AE:8.4f}  SDE {s.SDE:.4f}  ASE {s.ASE:.4f}  ARB {s.ARB:7.2f}%  CR {s.CR:5.1f}%")

# %%
# The misspecification lesson: exponentiated-Weibull margins fitted with a
# Weibull baseline bias the regression coefficients, a piecewise-exponential
# baseline does not. (More replicas make the contrast sharper.)
ew = Scenario.standard("Clayton", tau=0.25, baseline="expweibull", n=500, seed=7)
rep = run_mc(ew, M=5, specs=[ModelSpec("Clayton", "pe", "YP"), ModelSpec("Clayton", "weibull", "YP")])
for label in rep.statistics:
    print(f"{label}: ARB(beta1S[1]) = {rep.stat(label, 'beta1S[1]').ARB:.1f}%")
