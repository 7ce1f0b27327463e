"""Genetic search over graphs when enumeration is too slow.

With six binary variables there are 2**15 graphs. The search keeps the best
graph of each restart in an archive H; here we check which graphs it found
and whether the true one is among them.
"""

# %%
from lossrank.ga import GAConfig, ga_search
from lossrank.loglinear import Graph, generate_from_graph
from lossrank.resampling import SeedSpec

true = Graph.from_formula("123/456", 6)
table = generate_from_graph(true, (2,) * 6, n=10000, seed=SeedSpec(11))

# %%
result = ga_search(table, GAConfig(K_max=5, pop_size=60), fitness="BIC", seed=SeedSpec(11, 1))
print(f"{result.restarts} restarts, {len(result.log)} generations logged")
for g, value in result.archive.items():
    print(f"{g.formula():>20}  BIC={value:.2f}{'  <- true' if g == true else ''}")

# %% The per-generation log shows elitism at work: the best value never rises.
for restart, gen, best, bits in result.log[:8]:
    print(restart, gen, round(best, 2), bits)
