"""Draw a uniform level-2 network, look at its tree decomposition, check uniformity.

Run: python demos/sample_and_draw.py > net.dot
The dot text goes to stdout; the narrative goes to stderr.
"""
import sys
from collections import Counter

import numpy as np

from levelknet.bruteforce import chi_square, enumerate_networks
from levelknet.network import decompose, to_dot, validate_level_k
from levelknet.pipeline import level
from levelknet.sampler import sample_network


def say(*a):
    print(*a, file=sys.stderr)


lev = level(2)
rng = np.random.default_rng(7)

s = sample_network(lev.heads, lev.model, 12, rng)
net = s.network
say(f"network with {net.n_leaves} leaves, {net.n_vertices} vertices, "
    f"{len(net.reticulations)} reticulations; level-2 check: {bool(validate_level_k(net, 2))}")
say("head kinds by tree vertex:", Counter(h.kind for h in s.heads.values()))
tree = decompose(net)
say(f"decomposition tree has {tree.n_vertices} vertices (at most 2n-1 = {2 * 12 - 1})")
print(to_dot(net))

# every one of the 1143 level-2 networks on three leaves should be equally likely
universe = enumerate_networks(2, 3)
codes = [sample_network(lev.heads, lev.model, 3, rng).network.canonical()
         for _ in range(20 * len(universe))]
say(f"{len(codes)} draws over {len(universe)} networks: chi-square p = "
    f"{chi_square(codes, universe):.3f}")
