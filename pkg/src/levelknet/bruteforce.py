"""Exhaustive enumeration of small level-k networks, used as ground truth.

Two routes are provided. :func:`enumerate_networks` grows raw digraphs vertex
by vertex and checks the level-k conditions with networkx, without touching
the tree encoding. :func:`enumerate_decorated_trees` lists decorated trees and
is used to test the encoding itself.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from itertools import permutations, product
from pathlib import Path

import networkx as nx
from scipy import stats

from .canon import canonical_form
from .network import DecoratedTree, Network, deserialize, serialize

__all__ = [
    "Universe",
    "enumerate_networks",
    "enumerate_decorated_trees",
    "chi_square",
    "is_level_k_nx",
    "is_simple_nx",
    "raw_simple_networks",
    "raw_heads",
    "N_MAX",
]

N_MAX = 4


@dataclass
class Universe:
    k: int
    n: int
    networks: list[Network] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.networks)

    @property
    def codes(self) -> list:
        return [net.canonical() for net in self.networks]

    def to_jsonl(self) -> str:
        return "".join(serialize(net) + "\n" for net in self.networks)

    @classmethod
    def from_jsonl(cls, k: int, n: int, text: str) -> "Universe":
        return cls(k, n, [deserialize(line) for line in text.splitlines() if line.strip()])


def is_level_k_nx(net: Network, k: int) -> bool:
    """Level-k test through networkx biconnected components."""
    if net.n_vertices == 1:
        return True
    g = nx.Graph()
    g.add_nodes_from(range(net.n_vertices))
    g.add_edges_from(net.edges)
    indeg = [0] * net.n_vertices
    for _, d in net.edges:
        indeg[d] += 1
    bridges = {frozenset(e) for e in nx.bridges(g)}
    directed = {frozenset(e): e for e in net.edges}
    bridge_sources = {directed[b][0] for b in bridges}
    for comp in nx.biconnected_components(g):
        if sum(1 for v in comp if indeg[v] == 2) > k:
            return False
        if len(comp) >= 3 and sum(1 for v in comp if v in bridge_sources) < 2:
            return False
    return True


def _partial_blocks_ok(n_vertices, edges, indeg, k) -> bool:
    g = nx.Graph()
    g.add_nodes_from(range(n_vertices))
    g.add_edges_from(edges)
    for comp in nx.biconnected_components(g):
        if sum(1 for v in comp if indeg[v] == 2) > k:
            return False
    return True


_LEAF, _TREE, _RET, _ROOT = 0, 1, 2, 3


def _unlabelled_networks(k: int, n: int, max_ret: int | None = None):
    """Unlabelled level-k networks with ``n`` leaves grown in topological order.

    ``max_ret`` caps the number of reticulations (default ``k (n - 1)``: at most
    ``n - 1`` blocks carry reticulations).
    """
    if n == 1:
        yield 1, ()
        return
    if max_ret is None:
        max_ret = k * (n - 1)
    # state: (kinds, edges, stubs)
    level = {None: ((_ROOT,), (), (2,))}
    while level:
        nxt = {}
        for kinds, edges, stubs in level.values():
            leaves = kinds.count(_LEAF)
            rets = kinds.count(_RET)
            open_v = [v for v, s in enumerate(stubs) if s]
            if not open_v:
                if leaves == n:
                    yield len(kinds), edges
                continue
            v = len(kinds)
            moves = []
            for u in open_v:
                if leaves < n:
                    moves.append((_LEAF, (u,), 0))
                moves.append((_TREE, (u,), 2))
            if rets < max_ret:
                for a, u in enumerate(open_v):
                    for w in open_v[a + 1:]:
                        moves.append((_RET, (u, w), 1))
            for kind, parents, out in moves:
                new_stubs = list(stubs) + [out]
                for u in parents:
                    new_stubs[u] -= 1
                new_kinds = kinds + (kind,)
                n_leaves = leaves + (kind == _LEAF)
                n_rets = rets + (kind == _RET)
                open_stubs = sum(new_stubs)
                # each open stub ends in a new leaf or merges into a reticulation
                if open_stubs > (n - n_leaves) + (max_ret - n_rets):
                    continue
                if open_stubs == 0 and n_leaves != n:
                    continue
                new_edges = edges + tuple((u, v) for u in parents)
                if kind == _RET:
                    indeg = [0] * (v + 1)
                    for _, d in new_edges:
                        indeg[d] += 1
                    if not _partial_blocks_ok(v + 1, new_edges, indeg, k):
                        continue
                colors = [(c, s) for c, s in zip(new_kinds, new_stubs)]
                key = canonical_form(v + 1, new_edges, colors).code
                if key not in nxt:
                    nxt[key] = (new_kinds, new_edges, tuple(new_stubs))
        level = nxt


def _labelled(k, n, max_ret=None, keep=None):
    nets: dict = {}
    for n_vertices, edges in _unlabelled_networks(k, n, max_ret):
        children: list[list[int]] = [[] for _ in range(n_vertices)]
        for s, d in edges:
            children[s].append(d)
        leaves = [v for v in range(n_vertices) if not children[v]]
        base = Network(children, {v: i + 1 for i, v in enumerate(leaves)})
        if not is_level_k_nx(base, k) or (keep is not None and not keep(base)):
            continue
        for perm in permutations(range(1, n + 1)):
            net = Network(children, {v: perm[i] for i, v in enumerate(leaves)})
            nets.setdefault(net.canonical(), net)
    return [nets[c] for c in sorted(nets)]


def is_simple_nx(net: Network) -> bool:
    """Every edge lies in the root's block or is a bridge into a leaf."""
    if net.n_vertices < 4:
        return False
    g = nx.Graph(net.edges)
    root_block = next(c for c in nx.biconnected_components(g) if net.root in c)
    if len(root_block) < 3:
        return False
    for s, d in net.edges:
        if s not in root_block:
            return False
        if d not in root_block and net.children[d]:
            return False
    return True


def raw_simple_networks(k: int, d: int) -> list[Network]:
    """Labelled simple level-k networks on ``d`` leaves, grown as raw digraphs."""
    return _labelled(k, d, max_ret=k, keep=is_simple_nx)


def raw_heads(k: int, max_d: int) -> dict[int, list[Network]]:
    """Cherry plus raw simple networks, keyed by leaf count."""
    heads = {d: raw_simple_networks(k, d) for d in range(2, max_d + 1)}
    if max_d >= 2:
        heads[2] = [Network([(1, 2), (), ()], {1: 1, 2: 2})] + heads[2]
    return heads


def _compose(head: Network, subs: list[Network]) -> Network:
    """Identify the head leaf labelled ``i`` with the root of ``subs[i - 1]``."""
    children: list[list[int]] = []
    where = {}
    for v in range(head.n_vertices):
        if v not in head.leaf_labels:
            where[v] = len(children)
            children.append([])
    labels = {}
    sub_root = {}
    for i, sub in enumerate(subs, start=1):
        off = len(children)
        for cs in sub.children:
            children.append([c + off for c in cs])
        for v, lab in sub.leaf_labels.items():
            labels[v + off] = lab
        sub_root[i] = sub.root + off
    for v, cs in enumerate(head.children):
        if v in where:
            children[where[v]] = [where[c] if c in where else sub_root[head.leaf_labels[c]]
                                  for c in cs]
    return Network(children, labels, where[head.root])


def _compositions(heads, labels):
    if len(labels) == 1:
        yield Network([()], {0: labels[0]})
        return
    for part in _set_partitions(list(labels)):
        d = len(part)
        if d < 2 or not heads.get(d):
            continue
        part.sort(key=min)
        subs = [list(_compositions(heads, tuple(sorted(b)))) for b in part]
        for head in heads[d]:
            for combo in product(*subs):
                yield _compose(head, list(combo))


def enumerate_networks(k: int, n: int, n_max: int = N_MAX, method: str = "compose",
                       cache_dir: str | os.PathLike | None = None) -> Universe:
    """All labelled level-k networks on leaves ``{1..n}``.

    ``method='raw'`` grows whole networks as raw digraphs (feasible up to
    ``n = 3``, or ``n = 4`` at ``k = 1``). ``method='compose'`` grows only the
    simple networks as raw digraphs and assembles networks by substituting
    subnetworks for head leaves over all set partitions. Both filter with
    networkx and remove duplicates by canonical form.
    """
    if not (1 <= n <= n_max):
        raise ValueError(f"n must lie in 1..{n_max}")
    if k < 1:
        raise ValueError("k must be positive")
    if method not in ("raw", "compose"):
        raise ValueError(f"unknown method {method!r}")
    path = None
    if cache_dir is not None:
        path = Path(cache_dir) / f"universe_{method}_k{k}_n{n}.jsonl"
        if path.exists():
            return Universe.from_jsonl(k, n, path.read_text())
    if method == "raw":
        universe = Universe(k, n, _labelled(k, n))
    else:
        heads = raw_heads(k, n)
        nets: dict = {}
        for net in _compositions(heads, tuple(range(1, n + 1))):
            if not is_level_k_nx(net, k):
                raise AssertionError("composition produced an invalid network")
            code = net.canonical()
            if code in nets:
                raise AssertionError("two compositions gave the same network")
            nets[code] = net
        universe = Universe(k, n, [nets[c] for c in sorted(nets)])
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(universe.to_jsonl())
    return universe


def _set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def enumerate_decorated_trees(heads_by_d, labels) -> list[DecoratedTree]:
    """Every decorated tree with leaf labels ``labels``.

    ``heads_by_d[d]`` lists the labelled head networks on ``d`` leaves. Children
    are ordered by their smallest label, which makes the list duplicate-free.
    """
    labels = sorted(labels)
    out = []
    for children, labs, decs in _trees(heads_by_d, labels):
        out.append(DecoratedTree(children, labs, decs))
    return out


def _trees(heads_by_d, labels):
    if len(labels) == 1:
        yield [[]], {0: labels[0]}, {}
        return
    for part in _set_partitions(labels):
        d = len(part)
        if d < 2 or not heads_by_d.get(d):
            continue
        part.sort(key=min)
        sub_lists = [list(_trees(heads_by_d, block)) for block in part]
        for head in heads_by_d[d]:
            yield from _combine(head, sub_lists)


def _combine(head, sub_lists):
    def rec(i, children, labs, decs, roots):
        if i == len(sub_lists):
            yield children, labs, decs, roots
            return
        for ch, lb, dc in sub_lists[i]:
            off = len(children)
            new_children = children + [[c + off for c in cs] for cs in ch]
            new_labs = dict(labs)
            new_labs.update({v + off: x for v, x in lb.items()})
            new_decs = dict(decs)
            new_decs.update({v + off: h for v, h in dc.items()})
            yield from rec(i + 1, new_children, new_labs, new_decs, roots + [off])

    for children, labs, decs, roots in rec(0, [], {}, {}, []):
        off = 1
        full = [[r + off for r in roots]] + [[c + off for c in cs] for cs in children]
        yield (full, {v + off: x for v, x in labs.items()},
               {0: head, **{v + off: h for v, h in decs.items()}})


def chi_square(samples, universe: Universe) -> float:
    """Pearson goodness-of-fit p-value of ``samples`` against the uniform law."""
    index = {code: i for i, code in enumerate(universe.codes)}
    counts = [0] * len(index)
    for code in samples:
        i = index.get(code)
        if i is None:
            raise ValueError("sample lies outside the universe")
        counts[i] += 1
    if len(counts) == 1:
        return 1.0
    return float(stats.chisquare(counts).pvalue)


def universe_summary(universe: Universe) -> str:
    return json.dumps({"k": universe.k, "n": universe.n, "count": len(universe)})
