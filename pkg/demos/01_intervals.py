"""Choosing the resolution of a piecewise-constant classifier.

Inputs are the integers 1..2**N. Model m splits them into 2**m equal dyadic
segments and predicts one label per segment. We simulate data whose true
resolution is m0 = 2 and compare two selectors: the loss rank (how often a
randomly relabelled sample fits at least as well) and empirical risk plus a
Rademacher penalty.
"""

# %%
import numpy as np

from lossrank.intervals import IntervalsProblem, criterion_curves, generate_intervals_data, min_empirical_risk
from lossrank.resampling import SeedSpec

N = 8
problem = IntervalsProblem(N=N, m0=2, h=0.1, n=100)
data = generate_intervals_data(problem, SeedSpec(7))
print("first ten points:", [(int(a), int(b)) for a, b in zip(data.x[:10], data.y[:10])])

# %% The training error keeps falling as m grows, so it cannot pick m by itself.
risks = [min_empirical_risk(data, m, N) for m in range(1, N + 1)]
print("empirical risk by m:", np.round(risks, 3))

# %% Both criteria penalise flexibility through random relabelling.
lr, rc = criterion_curves(data, N, B=400, seed=SeedSpec(7, 1))
for m in range(1, N + 1):
    print(f"m={m}  LR={lr[m - 1]:.3f}  RC={rc[m - 1]:.3f}")
print("LR picks", int(np.argmin(lr)) + 1, "and RC picks", int(np.argmin(rc)) + 1)
