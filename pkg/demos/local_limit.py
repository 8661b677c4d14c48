"""Small balls in a large network look like balls in the limiting infinite network.

Run: python demos/local_limit.py
"""
import numpy as np

from levelknet.pipeline import level
from levelknet.sampler import VertexLimitSampler, sample_network
from levelknet.stats import census_from_balls, census_tv, neighborhood_census

k, n, depth = 1, 2000, 1
lev = level(k)
rng = np.random.default_rng(11)

finite = None
for _ in range(30):
    c = neighborhood_census(sample_network(lev.heads, lev.model, n, rng).network, depth)
    finite = c if finite is None else finite.merge(c)

limit_sampler = VertexLimitSampler(lev.heads, lev.model, k)
limit = census_from_balls((limit_sampler.sample(depth, rng) for _ in range(30_000)), depth)

print(f"radius-{depth} balls around uniform vertices, level {k}")
f_fin, f_lim = finite.frequencies(), limit.frequencies()
for code in sorted(f_lim, key=f_lim.get, reverse=True)[:6]:
    print(f"  class {str(code)[:40]:40s} finite {f_fin.get(code, 0):.4f}  limit {f_lim[code]:.4f}")
print(f"total variation distance: {census_tv(finite, limit):.4f}")
