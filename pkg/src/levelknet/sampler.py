"""Uniform level-k networks and samplers for their local limits.

A uniform network on ``n`` leaves is the blow-up of a Galton-Watson tree with
offspring law ``xi`` conditioned on ``n`` leaves, each inner vertex decorated by
an independent uniform head. Plane trees are stored as the list of outdegrees
in depth-first (preorder) order.
"""
from __future__ import annotations

import random
from bisect import bisect_right
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .heads import HeadFamily, HeadStructure
from .network import Network
from .offspring import OffspringModel

__all__ = [
    "SampleConfig",
    "PlaneTree",
    "SampledNetwork",
    "MarkedBall",
    "sample_gw_tree",
    "sample_conditioned_tree",
    "sample_network",
    "sample_spine_tree",
    "sample_root_limit",
    "sample_vertex_limit",
    "spawn",
    "Discrete",
    "VertexLimitSampler",
    "ball",
]


@dataclass
class SampleConfig:
    k: int
    n: int
    seed: int
    max_rejections: int | None = None
    local_depth: int = 1
    method: str = "cycle"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.max_rejections is not None and self.max_rejections < 1:
            raise ValueError("max_rejections must be positive")
        if self.local_depth < 0:
            raise ValueError("local_depth must be nonnegative")
        if self.method not in ("cycle", "rejection"):
            raise ValueError("method must be 'cycle' or 'rejection'")


def spawn(rng: np.random.Generator) -> random.Random:
    """A ``random.Random`` for scalar hot loops, seeded from ``rng``."""
    return random.Random(int(rng.integers(2**63)))


class PlaneTree:
    """Plane tree given by its preorder outdegree sequence."""

    __slots__ = ("degrees", "_children", "marked")

    def __init__(self, degrees, marked: int | None = None):
        self.degrees = [int(d) for d in degrees]
        self._children = None
        self.marked = marked

    def __len__(self) -> int:
        return len(self.degrees)

    @property
    def n_leaves(self) -> int:
        return sum(1 for d in self.degrees if d == 0)

    @property
    def children(self) -> list[list[int]]:
        if self._children is None:
            ch: list[list[int]] = [[] for _ in self.degrees]
            stack: list[int] = []
            for v, d in enumerate(self.degrees):
                if stack:
                    p = stack[-1]
                    ch[p].append(v)
                    if len(ch[p]) == self.degrees[p]:
                        stack.pop()
                if d:
                    stack.append(v)
            self._children = ch
        return self._children

    def depths(self) -> list[int]:
        dep = [0] * len(self.degrees)
        for v, cs in enumerate(self.children):
            for c in cs:
                dep[c] = dep[v] + 1
        return dep

    def height(self) -> int:
        return max(self.depths())

    def key(self):
        return tuple(self.degrees), self.marked


class Discrete:
    """Inverse-CDF sampler for a finite law, driven by ``random.Random``."""

    __slots__ = ("cum", "last")

    def __init__(self, probs):
        probs = np.asarray(probs, dtype=float)
        cum = np.cumsum(probs / probs.sum())
        cum[-1] = 1.0
        self.cum = cum.tolist()
        self.last = len(self.cum) - 1

    def __call__(self, prng: random.Random) -> int:
        return min(bisect_right(self.cum, prng.random()), self.last)


def _nonzero_law(pmf: np.ndarray):
    vals = np.arange(len(pmf))[2:]
    probs = pmf[2:] / pmf[2:].sum()
    return vals, probs


def sample_gw_tree(model: OffspringModel, rng: np.random.Generator,
                   max_vertices: int = 10**7) -> PlaneTree | None:
    """Unconditioned Galton-Watson tree, or ``None`` past ``max_vertices``."""
    pmf = model.pmf
    out: list[int] = []
    pending = 1
    while pending:
        batch = rng.choice(len(pmf), size=min(max(pending, 64), max_vertices), p=pmf)
        for d in batch:
            out.append(int(d))
            pending += int(d) - 1
            if pending == 0:
                break
        if len(out) > max_vertices:
            return None
    return PlaneTree(out)


def _cycle_rotate(seq: np.ndarray) -> np.ndarray:
    walk = np.cumsum(seq - 1)
    j = int(np.argmin(walk))
    return np.concatenate([seq[j + 1:], seq[: j + 1]])


def sample_conditioned_tree(model: OffspringModel, n: int, rng: np.random.Generator,
                            method: str = "cycle",
                            max_rejections: int | None = None) -> PlaneTree:
    """Galton-Watson tree conditioned on exactly ``n`` leaves.

    ``cycle``: draw i.i.d. outdegrees until the ``n``-th zero, keep the draw if
    the steps ``deg - 1`` sum to ``-1`` and rotate it into a valid preorder
    word (cycle lemma); every tree is hit by exactly ``n`` such words.
    ``rejection``: plain Galton-Watson trees, aborted as soon as they exceed
    ``n`` leaves.
    """
    if n < 1:
        raise ValueError("n must be positive")
    pmf = model.pmf
    p0 = float(pmf[0])
    if max_rejections is None:
        scale = n ** 0.5 if method == "cycle" else n ** 1.5
        max_rejections = int(10 * 10 * scale) + 100
    if n == 1:
        if method == "rejection":
            for _ in range(max_rejections):
                if rng.random() < p0:
                    return PlaneTree([0])
            raise RuntimeError("rejection budget exhausted")
        return PlaneTree([0])
    if method == "cycle":
        vals, probs = _nonzero_law(pmf)
        for _ in range(max_rejections):
            m = int(rng.negative_binomial(n, p0))
            if m == 0:
                continue
            inner = rng.choice(vals, size=m, p=probs)
            if int(inner.sum()) != n + m - 1:
                continue
            length = n + m
            seq = np.zeros(length, dtype=np.int64)
            pos = rng.choice(length - 1, size=m, replace=False)
            seq[pos] = inner
            return PlaneTree(_cycle_rotate(seq))
        raise RuntimeError("rejection budget exhausted")
    if method == "rejection":
        for _ in range(max_rejections):
            tree = _gw_capped(pmf, n, rng)
            if tree is not None:
                return PlaneTree(tree)
        raise RuntimeError("rejection budget exhausted")
    raise ValueError(f"unknown method {method!r}")


def _gw_capped(pmf, n, rng):
    out: list[int] = []
    pending = 1
    leaves = 0
    while pending:
        batch = rng.choice(len(pmf), size=max(pending, 32), p=pmf)
        for d in batch:
            d = int(d)
            out.append(d)
            pending += d - 1
            if d == 0:
                leaves += 1
                if leaves > n:
                    return None
            # at least one more leaf per open slot
            if leaves + pending > n:
                return None
            if pending == 0:
                break
    return out if leaves == n else None


@dataclass
class SampledNetwork:
    """A sampled network together with its decomposition data.

    Network vertex ids follow the depth-first order of the tree with the
    surplus vertices of each head right after the head's root.
    """

    network: Network
    tree: PlaneTree
    heads: dict[int, HeadStructure]
    net_id: list[int]

    @property
    def n(self) -> int:
        return self.network.n_leaves


def _assemble(tree: PlaneTree, heads: dict[int, HeadStructure], labels=None):
    degrees = tree.degrees
    net_id = [0] * len(degrees)
    nxt = 0
    for v in range(len(degrees)):
        net_id[v] = nxt
        nxt += 1
        h = heads.get(v)
        if h is not None:
            nxt += h.n_surplus
    children: list[list[int]] = [[] for _ in range(nxt)]
    tch = tree.children
    for v, h in heads.items():
        base = net_id[v]
        s = h.n_surplus
        kids = tch[v]
        for a, b in h.edges:
            ga = base + a
            gb = base + b if b <= s else net_id[kids[b - s - 1]]
            children[ga].append(gb)
    leaf_labels = {}
    if labels is not None:
        it = iter(labels)
        for v, d in enumerate(degrees):
            if d == 0:
                leaf_labels[net_id[v]] = next(it)
    return children, leaf_labels, net_id


def blow_up_plane(tree: PlaneTree, heads: dict[int, HeadStructure], labels) -> SampledNetwork:
    children, leaf_labels, net_id = _assemble(tree, heads, labels)
    return SampledNetwork(Network(children, leaf_labels, 0), tree, heads, net_id)


def decorate(tree: PlaneTree, family: HeadFamily, prng: random.Random,
             skip=()) -> dict[int, HeadStructure]:
    skip = set(skip)
    return {v: family.sample(d, prng) for v, d in enumerate(tree.degrees)
            if d and v not in skip}


def sample_network(family: HeadFamily, model: OffspringModel, n: int,
                   rng: np.random.Generator, method: str = "cycle",
                   max_rejections: int | None = None) -> SampledNetwork:
    """Uniform level-k network on leaves ``{1..n}``."""
    tree = sample_conditioned_tree(model, n, rng, method, max_rejections)
    prng = spawn(rng)
    heads = decorate(tree, family, prng)
    labels = list(range(1, n + 1))
    prng.shuffle(labels)
    return blow_up_plane(tree, heads, labels)


def sample_from_config(config: SampleConfig, family: HeadFamily, model: OffspringModel,
                       rng: np.random.Generator | None = None) -> SampledNetwork:
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    return sample_network(family, model, config.n, rng, config.method, config.max_rejections)


# -- size-biased trees and local limits -----------------------------------------

def sample_spine_tree(model: OffspringModel, depth: int, rng: np.random.Generator,
                      max_vertices: int = 10**6) -> PlaneTree | None:
    """Size-biased tree with a marked vertex at height ``depth``.

    Spine vertices get size-biased offspring with a uniform spine child; all
    other vertices are independent Galton-Watson trees. Returns ``None`` if a
    fringe tree exceeds ``max_vertices``.
    """
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    xi, hat = _laws(model)
    prng = spawn(rng)
    degrees: list[int] = []
    marked = None
    # stack items: remaining spine length, or None for an ordinary vertex
    stack: list = [depth]
    while stack:
        item = stack.pop()
        if item is None or item == 0:
            if item == 0:
                marked = len(degrees)
            d = xi(prng)
            degrees.append(d)
            stack.extend([None] * d)
        else:
            d = hat(prng)
            degrees.append(d)
            j = prng.randrange(d)
            kids = [None] * d
            kids[j] = item - 1
            stack.extend(reversed(kids))
        if len(degrees) > max_vertices:
            return None
    return PlaneTree(degrees, marked)


class _Partial:
    """Partially generated decorated tree with lazily grown fringes.

    Tree vertices carry an outdegree (``None`` if never expanded) and an
    optional head; blow-up then yields a partial network on which balls of
    bounded radius are exact.
    """

    def __init__(self):
        self.deg: list[int | None] = []
        self.kids: list[list[int]] = []
        self.head: dict[int, HeadStructure] = {}

    def add(self) -> int:
        self.deg.append(None)
        self.kids.append([])
        return len(self.deg) - 1

    def grow_gw(self, v, depth, xi: "Discrete", family, prng):
        """Expand ``v`` as a Galton-Watson tree down to ``depth`` more levels."""
        frontier = [v]
        for _ in range(depth):
            nxt = []
            for u in frontier:
                d = xi(prng)
                self.deg[u] = d
                if d:
                    self.head[u] = family.sample(d, prng)
                    self.kids[u] = [self.add() for _ in range(d)]
                    nxt.extend(self.kids[u])
            frontier = nxt
            if not frontier:
                break

    def to_graph(self):
        ids = [0] * len(self.deg)
        nxt = 0
        for v in range(len(self.deg)):
            ids[v] = nxt
            nxt += 1 + (self.head[v].n_surplus if v in self.head else 0)
        edges = []
        for v, h in self.head.items():
            base = ids[v]
            s = h.n_surplus
            for a, b in h.edges:
                edges.append((base + a, base + b if b <= s else ids[self.kids[v][b - s - 1]]))
        return nxt, edges, ids


@dataclass
class MarkedBall:
    """Induced ``l``-ball around a marked vertex: edges on ``0..size-1``, mark 0."""

    size: int
    edges: tuple[tuple[int, int], ...]
    depth: int
    info: dict = field(default_factory=dict)


def ball(n_vertices: int, edges, center: int, radius: int) -> MarkedBall:
    adj: list[list[int]] = [[] for _ in range(n_vertices)]
    for s, d in edges:
        adj[s].append(d)
        adj[d].append(s)
    dist = {center: 0}
    order = [center]
    queue = deque([center])
    while queue:
        v = queue.popleft()
        if dist[v] == radius:
            continue
        for w in adj[v]:
            if w not in dist:
                dist[w] = dist[v] + 1
                order.append(w)
                queue.append(w)
    pos = {v: i for i, v in enumerate(order)}
    local = tuple((pos[s], pos[d]) for s, d in edges if s in pos and d in pos)
    return MarkedBall(len(order), local, radius)


_LAWS: dict = {}


def _laws(model: OffspringModel):
    key = id(model)
    got = _LAWS.get(key)
    if got is None or got[0] is not model:
        got = (model, Discrete(model.pmf), Discrete(model.size_biased().pmf_hat))
        _LAWS[key] = got
    return got[1], got[2]


def sample_root_limit(family: HeadFamily, model: OffspringModel, depth: int,
                      rng: np.random.Generator) -> MarkedBall:
    """Ball of radius ``depth`` around the root of the local limit at the root.

    The tree is the size-biased tree with an infinite spine; every network
    edge spans at least one tree generation, so tree depth ``depth`` suffices.
    """
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    xi, hat = _laws(model)
    prng = spawn(rng)
    part = _Partial()
    v = part.add()
    for level in range(depth):
        d = hat(prng)
        part.deg[v] = d
        part.head[v] = family.sample(d, prng)
        part.kids[v] = [part.add() for _ in range(d)]
        j = prng.randrange(d)
        for i, c in enumerate(part.kids[v]):
            if i != j:
                part.grow_gw(c, depth - level - 1, xi, family, prng)
        v = part.kids[v][j]
    n_vertices, edges, ids = part.to_graph()
    return ball(n_vertices, edges, 0, depth)


def _surplus_biased_head(family: HeadFamily, d: int, prng: random.Random, k_bound: int):
    cap = d + 2 * k_bound - 1
    while True:
        h = family.sample(d, prng)
        if h.n_surplus and prng.random() * cap < h.n_surplus:
            return h


class VertexLimitSampler:
    """Local limit around a uniformly chosen vertex (two-type size-biased tree).

    The marked vertex is a tree vertex with probability ``1/(1 + E kappa)``
    (its parent's offspring size-biased by ``xi``) and a surplus vertex
    otherwise (its host head chosen proportionally to its surplus). Further
    ancestors are size-biased by ``xi`` with a uniform child on the path.
    """

    def __init__(self, family: HeadFamily, model: OffspringModel, k: int):
        self.family = family
        self.model = model
        self.k = k
        pmf = model.pmf
        self.xi, self.hat = _laws(model)
        kappa = np.zeros(len(pmf))
        for d in range(2, len(pmf)):
            if pmf[d] > 0:
                kappa[d] = pmf[d] * float(family.surplus_mean(d))
        self.e_kappa = float(kappa.sum())
        self.host = Discrete(kappa)

    def sample(self, depth: int, rng: np.random.Generator | None = None,
               prng: random.Random | None = None) -> MarkedBall:
        if depth < 0:
            raise ValueError("depth must be nonnegative")
        if prng is None:
            prng = spawn(rng)
        fam = self.family
        part = _Partial()
        blue = prng.random() < 1.0 / (1.0 + self.e_kappa)
        host = part.add()
        if blue:
            d = self.hat(prng)
            part.head[host] = fam.sample(d, prng)
            mark_tree, mark_surplus = None, None
        else:
            d = self.host(prng)
            h = _surplus_biased_head(fam, d, prng, self.k)
            part.head[host] = h
            mark_tree, mark_surplus = host, 1 + prng.randrange(h.n_surplus)
        part.deg[host] = d
        part.kids[host] = [part.add() for _ in range(d)]
        if blue:
            mark_tree = part.kids[host][prng.randrange(d)]
        for c in part.kids[host]:
            part.grow_gw(c, depth + 1, self.xi, fam, prng)
        # ancestors above the host; the topmost generated vertex gets id 0
        top = host
        for _ in range(depth + 1):
            d = self.hat(prng)
            j = prng.randrange(d)
            parent = part.add()
            part.deg[parent] = d
            part.head[parent] = fam.sample(d, prng)
            kids = []
            for i in range(d):
                if i == j:
                    kids.append(top)
                else:
                    c = part.add()
                    part.grow_gw(c, depth + 1, self.xi, fam, prng)
                    kids.append(c)
            part.kids[parent] = kids
            top = parent
        n_vertices, edges, ids = _relabel_from_top(part, top)
        center = ids[mark_tree] + (mark_surplus or 0)
        result = ball(n_vertices, edges, center, depth)
        result.info["blue"] = blue
        return result


def _relabel_from_top(part: _Partial, top: int):
    """Blow up ``part`` with depth-first ids starting from ``top``."""
    order = []
    stack = [top]
    while stack:
        v = stack.pop()
        order.append(v)
        stack.extend(reversed(part.kids[v]))
    ids = {}
    nxt = 0
    for v in order:
        ids[v] = nxt
        nxt += 1 + (part.head[v].n_surplus if v in part.head else 0)
    edges = []
    for v in order:
        h = part.head.get(v)
        if h is None:
            continue
        base = ids[v]
        s = h.n_surplus
        for a, b in h.edges:
            edges.append((base + a, base + b if b <= s else ids[part.kids[v][b - s - 1]]))
    return nxt, edges, ids


def sample_vertex_limit(family: HeadFamily, model: OffspringModel, depth: int,
                        rng: np.random.Generator, k: int | None = None) -> MarkedBall:
    k = model.k if k is None else k
    return VertexLimitSampler(family, model, k).sample(depth, rng)
