"""How many clusters? Loss rank against the Calinski-Harabasz index.

The loss rank of K refits K-means on bootstrap resamples and reports the
share whose within-cluster dissimilarity is no larger than the original fit.
"""

# %%
import numpy as np

from lossrank.clusters import (
    ch_criterion,
    generate_gaussian_clusters,
    kmeans,
    loss_rank_clusters,
    within_dissimilarity,
)
from lossrank.resampling import SeedSpec

X = generate_gaussian_clusters([(0, 0), (0, 5), (5, 0)], sigma=1.0, per_cluster=50, seed=SeedSpec(3))
print("data shape:", X.shape)

# %% The pairwise loss equals the sum over clusters of size times sum of squares.
fit = kmeans(X, 3, restarts=10, seed=SeedSpec(3, 1))
sizes = np.bincount(fit.assignment)
print("cluster sizes:", sizes, " W_3 =", round(within_dissimilarity(X, fit), 2))

# %% Scan K. CH is undefined at K=1, so its column starts at 2.
for K in range(1, 7):
    lr = loss_rank_clusters(X, K, B=100, restarts=5, seed=SeedSpec(3).child(2, K)).value
    ch = ch_criterion(X, kmeans(X, K, 10, SeedSpec(3).child(3, K))) if K > 1 else float("nan")
    print(f"K={K}  LR={lr:.2f}  CH={ch:8.1f}")

# %% Note how flat LR is: bootstrap resamples share the original points, so
# the resampled loss scatters around the original one for every K.
