"""Heights of large networks grow like sqrt(n) with a computable constant.

Run: python demos/heights.py  (about a minute)
"""
import math
import random

import numpy as np

from levelknet.constants import estimate_b, spine_expectations
from levelknet.pipeline import level
from levelknet.sampler import sample_network
from levelknet.stats import height_profile, longest_directed_path

k = 1
lev = level(k)
rng = np.random.default_rng(3)

b, _ = estimate_b(lev.model, 150, rng, sizes=(500, 2000))
eta = spine_expectations(lev.heads, lev.model, ["eta"], 400, random.Random(3))["eta"]
b_k = b.value / eta.value
print(f"tree constant b = {b.value:.4f} +- {b.error:.4f}")
print(f"mean head depth of a spine leaf E eta = {eta.value:.4f}")
print(f"so E H(N_n) ~ sqrt(pi/2) / b_k * sqrt(n) with b_k = {b_k:.4f}")

for n in (250, 1000, 4000):
    hs, hu, lp = [], [], []
    for _ in range(60):
        net = sample_network(lev.heads, lev.model, n, rng).network
        prof = height_profile(net, order=range(net.n_vertices))
        hs.append(prof.height)
        hu.append(prof.undirected_height)
        lp.append(longest_directed_path(net))
    pred = math.sqrt(math.pi / 2) / b_k * math.sqrt(n)
    print(f"n={n:>5}: mean height {np.mean(hs):6.1f} (predicted {pred:6.1f}), "
          f"undirected {np.mean(hu):6.1f}, longest path {np.mean(lp):6.1f}")
