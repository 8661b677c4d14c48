"""Heights, extremal parameters, neighbourhood census and reference moments."""
from __future__ import annotations

import math
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Sequence

import mpmath
import numpy as np

from .canon import canonical_form
from .network import Network, decompose
from .sampler import MarkedBall, ball

__all__ = [
    "directed_heights",
    "undirected_heights",
    "longest_directed_path",
    "HeightProfile",
    "height_profile",
    "height_process",
    "special_order",
    "Census",
    "ball_code",
    "neighborhood_census",
    "census_tv",
    "excursion_moment",
    "distance_profile",
]


def _bfs(adj: Sequence[Sequence[int]], source: int) -> list[int]:
    dist = [-1] * len(adj)
    dist[source] = 0
    queue = deque([source])
    while queue:
        v = queue.popleft()
        dv = dist[v] + 1
        for w in adj[v]:
            if dist[w] < 0:
                dist[w] = dv
                queue.append(w)
    return dist


def _undirected_adj(net: Network) -> list[list[int]]:
    adj = [list(cs) for cs in net.children]
    for s, cs in enumerate(net.children):
        for d in cs:
            adj[d].append(s)
    return adj


def directed_heights(net: Network) -> list[int]:
    """Shortest directed path length from the root to every vertex."""
    dist = _bfs(net.children, net.root)
    if min(dist) < 0:
        raise ValueError("some vertex is not reachable from the root")
    return dist


def undirected_heights(net: Network) -> list[int]:
    return _bfs(_undirected_adj(net), net.root)


def longest_directed_path(net: Network) -> int:
    best = [-1] * net.n_vertices
    best[net.root] = 0
    for v in net.topological_order():
        if best[v] < 0:
            continue
        for w in net.children[v]:
            if best[v] + 1 > best[w]:
                best[w] = best[v] + 1
    return max(best)


def special_order(net: Network) -> list[int]:
    """Depth-first order of the decomposition tree with surplus after each head.

    Children are visited in the order of their smallest leaf label; for a
    sampled network the vertex ids already realise the plane version.
    """
    tree, tree_to_net, surplus = decompose(net, return_map=True)
    order = []
    stack = [0]
    while stack:
        t = stack.pop()
        order.append(tree_to_net[t])
        order.extend(sorted(surplus[t]))
        stack.extend(reversed(tree.children[t]))
    return order


@dataclass
class HeightProfile:
    h_dir: list[int]
    h_undir: list[int]
    order: list[int]
    leaves: list[int]

    @property
    def height(self) -> int:
        return max(self.h_dir)

    @property
    def undirected_height(self) -> int:
        return max(self.h_undir)


def height_profile(net: Network, order: Sequence[int] | None = None) -> HeightProfile:
    """Heights of every vertex; ``order`` defaults to :func:`special_order`."""
    if order is None:
        order = special_order(net) if net.n_vertices > 1 else [0]
    order = list(order)
    leaf_set = set(net.leaf_labels)
    return HeightProfile(directed_heights(net), undirected_heights(net), order,
                         [v for v in order if v in leaf_set])


def height_process(profile: HeightProfile, which: str = "all-vertices",
                   directed: bool = True) -> list[int]:
    h = profile.h_dir if directed else profile.h_undir
    if which == "all-vertices":
        return [h[v] for v in profile.order]
    if which == "leaves":
        return [h[v] for v in profile.leaves]
    raise ValueError("which must be 'all-vertices' or 'leaves'")


# -- census -------------------------------------------------------------------

@dataclass
class Census:
    counts: Counter
    depth: int
    total: int = 0

    def frequencies(self) -> dict:
        total = self.total or sum(self.counts.values())
        return {c: v / total for c, v in self.counts.items()}

    def merge(self, other: "Census") -> "Census":
        if other.depth != self.depth:
            raise ValueError("census depths differ")
        return Census(self.counts + other.counts, self.depth, self.total + other.total)


_CODE_CACHE: dict = {}


def ball_code(b: MarkedBall, budget: int = 200_000):
    """Canonical code of a marked ball (the mark is vertex 0)."""
    key = (b.size, b.edges)
    code = _CODE_CACHE.get(key)
    if code is None:
        colors = [1] + [0] * (b.size - 1)
        code = canonical_form(b.size, b.edges, colors, max_leaves=budget).code
        if len(_CODE_CACHE) < 1_000_000:
            _CODE_CACHE[key] = code
    return code


def neighborhood_census(net: Network, depth: int, which: str = "vertices") -> Census:
    """Histogram of canonical ``depth``-balls around vertices, leaves or the root."""
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    edges = net.edges
    if which == "vertices":
        centers = range(net.n_vertices)
    elif which == "leaves":
        centers = sorted(net.leaf_labels)
    elif which == "root-only":
        centers = [net.root]
    else:
        raise ValueError("which must be 'vertices', 'leaves' or 'root-only'")
    if depth == 1:
        return _census_depth_one(net, centers)
    counts: Counter = Counter()
    for c in centers:
        counts[ball_code(ball(net.n_vertices, edges, c, depth))] += 1
    return Census(counts, depth, sum(counts.values()))


def _census_depth_one(net: Network, centers) -> Census:
    # radius-one balls only need the neighbours and the edges among them
    children = net.children
    parents = net.parents
    child_sets = [set(cs) for cs in children]
    counts: Counter = Counter()
    for c in centers:
        order = [c]
        for w in children[c]:
            order.append(w)
        for w in parents[c]:
            order.append(w)
        pos = {v: i for i, v in enumerate(order)}
        local = []
        for v in order:
            for w in child_sets[v]:
                if w in pos:
                    local.append((pos[v], pos[w]))
        counts[ball_code(MarkedBall(len(order), tuple(local), 1))] += 1
    return Census(counts, 1, sum(counts.values()))


def census_from_balls(balls, depth: int) -> Census:
    counts = Counter(ball_code(b) for b in balls)
    return Census(counts, depth, sum(counts.values()))


def census_tv(c1: Census, c2: Census) -> float:
    if c1.depth != c2.depth:
        raise ValueError("census depths differ")
    f1, f2 = c1.frequencies(), c2.frequencies()
    return 0.5 * sum(abs(f1.get(c, 0.0) - f2.get(c, 0.0)) for c in set(f1) | set(f2))


def excursion_moment(p: int) -> float:
    """``E[(sup e)^p]`` for the normalised Brownian excursion."""
    if p < 1:
        raise ValueError("p must be a positive integer")
    if p == 1:
        return math.sqrt(math.pi / 2)
    return float(mpmath.mpf(2) ** (-mpmath.mpf(p) / 2) * p * (p - 1)
                 * mpmath.gamma(mpmath.mpf(p) / 2) * mpmath.zeta(p))


def distance_profile(net: Network, sample_pairs: int, rng: np.random.Generator) -> np.ndarray:
    """Undirected distances between ``sample_pairs`` uniform vertex pairs."""
    adj = _undirected_adj(net)
    n = net.n_vertices
    out = np.empty(sample_pairs, dtype=np.int64)
    for i in range(sample_pairs):
        a, b = (int(x) for x in rng.integers(n, size=2))
        out[i] = _pair_distance(adj, a, b)
    return out


def _pair_distance(adj, a: int, b: int) -> int:
    if a == b:
        return 0
    dist_a = {a: 0}
    dist_b = {b: 0}
    fa, fb = [a], [b]
    while fa and fb:
        # expand the smaller frontier by one full layer
        if len(fa) <= len(fb):
            frontier, dist, other = fa, dist_a, dist_b
        else:
            frontier, dist, other = fb, dist_b, dist_a
        nxt = []
        best = None
        for v in frontier:
            for w in adj[v]:
                if w in other:
                    cand = dist[v] + 1 + other[w]
                    best = cand if best is None else min(best, cand)
                if w not in dist:
                    dist[w] = dist[v] + 1
                    nxt.append(w)
        if best is not None:
            return best
        if frontier is fa:
            fa = nxt
        else:
            fb = nxt
    raise ValueError("vertices are disconnected")
