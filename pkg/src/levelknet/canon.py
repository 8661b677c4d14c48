"""Canonical forms and automorphisms of small vertex-coloured directed multigraphs.

Individualization/refinement search without automorphism pruning: every leaf of
the search tree is visited, the lexicographically smallest encoding wins, and
the number of leaves attaining it equals the order of the automorphism group.
Intended for graphs with at most a few dozen vertices.
"""
from __future__ import annotations

from typing import Hashable, Sequence

__all__ = ["CanonicalForm", "canonical_form", "canonical_code", "automorphisms"]


class CanonicalForm:
    __slots__ = ("code", "order", "n_automorphisms", "_leaves")

    def __init__(self, code, order, n_automorphisms, leaves):
        self.code = code
        # order[v] = canonical position of vertex v
        self.order = order
        self.n_automorphisms = n_automorphisms
        self._leaves = leaves

    def automorphisms(self) -> list[tuple[int, ...]]:
        """All automorphisms as vertex maps ``perm[v] = image of v``."""
        base = self.order
        inv = [0] * len(base)
        for v, pos in enumerate(base):
            inv[pos] = v
        return [tuple(inv[leaf[v]] for v in range(len(base))) for leaf in self._leaves]


def _refine(color, out_adj, in_adj):
    n = len(color)
    n_cells = len(set(color))
    while True:
        sig = [
            (
                color[v],
                tuple(sorted([color[w] for w in out_adj[v]])),
                tuple(sorted([color[w] for w in in_adj[v]])),
            )
            for v in range(n)
        ]
        distinct = sorted(set(sig))
        if len(distinct) == n_cells:
            return color
        rank = {s: i for i, s in enumerate(distinct)}
        color = [rank[s] for s in sig]
        n_cells = len(distinct)


def canonical_form(
    n: int,
    edges: Sequence[tuple[int, int]],
    colors: Sequence[Hashable] | None = None,
    max_leaves: int = 200_000,
) -> CanonicalForm:
    """Canonical form of a directed multigraph on vertices ``0..n-1``.

    ``colors`` must be mutually comparable values (ints, strings or tuples of
    those); isomorphisms are required to preserve them.
    """
    if colors is None:
        colors = [0] * n
    out_adj: list[list[int]] = [[] for _ in range(n)]
    in_adj: list[list[int]] = [[] for _ in range(n)]
    for s, d in edges:
        out_adj[s].append(d)
        in_adj[d].append(s)
    distinct = sorted(set(colors))
    rank = {c: i for i, c in enumerate(distinct)}
    start = _refine([rank[c] for c in colors], out_adj, in_adj)

    best = None
    best_leaves: list[list[int]] = []
    visited = 0
    stack = [start]
    while stack:
        color = stack.pop()
        sizes: dict[int, int] = {}
        for c in color:
            sizes[c] = sizes.get(c, 0) + 1
        target = min((c for c, s in sizes.items() if s > 1), default=None)
        if target is None:
            visited += 1
            if visited > max_leaves:
                raise RuntimeError("canonical form search exceeded its leaf budget")
            code = (
                n,
                tuple(sorted((color[s], color[d]) for s, d in edges)),
                tuple(c for _, c in sorted(zip(color, colors))),
            )
            if best is None or code < best:
                best = code
                best_leaves = [color]
            elif code == best:
                best_leaves.append(color)
            continue
        for v in range(n - 1, -1, -1):
            if color[v] == target:
                child = [2 * c + (0 if u == v else 1) for u, c in enumerate(color)]
                stack.append(_refine(_rerank(child), out_adj, in_adj))
    if best is None:
        best = (0, (), ())
        best_leaves = [[]]
    return CanonicalForm(best, best_leaves[0], len(best_leaves), best_leaves)


def _rerank(color):
    distinct = sorted(set(color))
    rank = {c: i for i, c in enumerate(distinct)}
    return [rank[c] for c in color]


def canonical_code(n, edges, colors=None):
    return canonical_form(n, edges, colors).code


def automorphisms(n, edges, colors=None) -> list[tuple[int, ...]]:
    return canonical_form(n, edges, colors).automorphisms()
