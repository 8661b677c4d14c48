"""Networks, decorated trees, level-k validation and the tree encoding.

A :class:`Network` is a binary rooted phylogenetic network stored as child
lists. :func:`decompose` maps a network to its decorated tree (one head
structure per inner tree vertex) and :func:`blow_up` inverts it.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .canon import canonical_form

__all__ = [
    "Network",
    "DecoratedTree",
    "Validation",
    "blocks_and_bridges",
    "validate_level_k",
    "split_test",
    "blow_up",
    "decompose",
    "serialize",
    "deserialize",
    "to_dot",
    "cherry",
    "trivial_network",
]


class Network:
    """Directed acyclic graph with a root and bijectively labelled leaves.

    Vertices are ``0..n_vertices-1``. ``leaf_labels`` maps each leaf vertex to
    its label. Equality and hashing are up to isomorphism fixing leaf labels.
    """

    __slots__ = ("children", "leaf_labels", "root", "_parents", "_code")

    def __init__(self, children: Sequence[Sequence[int]], leaf_labels: Mapping[int, object],
                 root: int = 0):
        self.children = [tuple(c) for c in children]
        self.leaf_labels = dict(leaf_labels)
        self.root = root
        self._parents = None
        self._code = None

    @classmethod
    def from_edges(cls, n_vertices: int, edges: Iterable[tuple[int, int]],
                   leaf_labels: Mapping[int, object], root: int = 0) -> "Network":
        ch: list[list[int]] = [[] for _ in range(n_vertices)]
        for s, d in edges:
            ch[s].append(d)
        return cls(ch, leaf_labels, root)

    @property
    def n_vertices(self) -> int:
        return len(self.children)

    def __len__(self) -> int:
        return len(self.children)

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(s, d) for s, cs in enumerate(self.children) for d in cs]

    @property
    def parents(self) -> list[list[int]]:
        if self._parents is None:
            ps: list[list[int]] = [[] for _ in self.children]
            for s, cs in enumerate(self.children):
                for d in cs:
                    ps[d].append(s)
            self._parents = ps
        return self._parents

    @property
    def leaves(self) -> list[int]:
        return [v for v, cs in enumerate(self.children) if not cs]

    @property
    def n_leaves(self) -> int:
        return len(self.leaf_labels)

    def kind(self, v: int) -> str:
        if v == self.root:
            return "root"
        indeg, outdeg = len(self.parents[v]), len(self.children[v])
        return {(1, 2): "tree", (2, 1): "reticulation", (1, 0): "leaf"}.get(
            (indeg, outdeg), f"invalid({indeg},{outdeg})")

    @property
    def reticulations(self) -> list[int]:
        return [v for v, ps in enumerate(self.parents) if len(ps) == 2]

    def canonical(self):
        if self._code is None:
            colors = [("L", str(self.leaf_labels[v])) if v in self.leaf_labels
                      else ("R", "") if v == self.root else ("I", "")
                      for v in range(self.n_vertices)]
            self._code = canonical_form(self.n_vertices, self.edges, colors).code
        return self._code

    def __eq__(self, other) -> bool:
        if not isinstance(other, Network):
            return NotImplemented
        if self.n_vertices != other.n_vertices:
            return False
        return self.canonical() == other.canonical()

    def __hash__(self) -> int:
        return hash(self.canonical())

    def __repr__(self) -> str:
        return (f"Network(n_vertices={self.n_vertices}, n_leaves={self.n_leaves}, "
                f"edges={self.edges})")

    def relabel_leaves(self, mapping: Mapping[object, object]) -> "Network":
        return Network(self.children, {v: mapping[lab] for v, lab in self.leaf_labels.items()},
                       self.root)

    def topological_order(self) -> list[int]:
        indeg = [len(p) for p in self.parents]
        queue = deque(v for v in range(self.n_vertices) if indeg[v] == 0)
        order = []
        while queue:
            v = queue.popleft()
            order.append(v)
            for w in self.children[v]:
                indeg[w] -= 1
                if indeg[w] == 0:
                    queue.append(w)
        if len(order) != self.n_vertices:
            raise ValueError("network contains a directed cycle")
        return order

    def structure_problems(self) -> list[str]:
        """Violations of the binary rooted phylogenetic network definition."""
        problems = []
        n = self.n_vertices
        if n == 0:
            return ["empty network"]
        if not (0 <= self.root < n):
            return ["root out of range"]
        for s, cs in enumerate(self.children):
            if len(set(cs)) != len(cs):
                problems.append(f"parallel edges out of vertex {s}")
            for d in cs:
                if not (0 <= d < n) or d == s:
                    problems.append(f"bad edge ({s},{d})")
        if problems:
            return problems
        if n == 1:
            if set(self.leaf_labels) != {self.root}:
                problems.append("trivial network must label its single vertex")
            return problems
        if self.parents[self.root] or len(self.children[self.root]) != 2:
            problems.append("root must have indegree 0 and outdegree 2")
        for v in range(n):
            if v == self.root:
                continue
            k = self.kind(v)
            if k.startswith("invalid"):
                problems.append(f"vertex {v} has degrees {k[7:]}")
        leaves = set(self.leaves)
        if set(self.leaf_labels) != leaves:
            problems.append("leaf labels must be exactly on the leaves")
        if len(set(self.leaf_labels.values())) != len(self.leaf_labels):
            problems.append("leaf labels must be distinct")
        try:
            self.topological_order()
        except ValueError as exc:
            problems.append(str(exc))
        return problems


def trivial_network(label=1) -> Network:
    return Network([()], {0: label})


def cherry(a=1, b=2) -> Network:
    return Network([(1, 2), (), ()], {1: a, 2: b})


# -- blocks -----------------------------------------------------------------

def blocks_and_bridges(n: int, edges: Sequence[tuple[int, int]]):
    """Biconnected components of the undirected shadow (iterative low-link).

    Returns ``(blocks, bridges)`` where ``blocks`` is a list of edge-index lists
    and ``bridges`` the indices of edges forming a block on their own.
    """
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for idx, (s, d) in enumerate(edges):
        adj[s].append((d, idx))
        adj[d].append((s, idx))
    disc = [-1] * n
    low = [0] * n
    blocks: list[list[int]] = []
    timer = 0
    edge_stack: list[int] = []
    for start in range(n):
        if disc[start] != -1:
            continue
        disc[start] = low[start] = timer
        timer += 1
        stack = [(start, -1, 0)]
        while stack:
            v, pedge, i = stack[-1]
            if i < len(adj[v]):
                stack[-1] = (v, pedge, i + 1)
                w, eidx = adj[v][i]
                if eidx == pedge:
                    continue
                if disc[w] == -1:
                    edge_stack.append(eidx)
                    disc[w] = low[w] = timer
                    timer += 1
                    stack.append((w, eidx, 0))
                elif disc[w] < disc[v]:
                    edge_stack.append(eidx)
                    if disc[w] < low[v]:
                        low[v] = disc[w]
            else:
                stack.pop()
                if stack:
                    u = stack[-1][0]
                    if low[v] < low[u]:
                        low[u] = low[v]
                    if low[v] >= disc[u]:
                        comp = []
                        while True:
                            e = edge_stack.pop()
                            comp.append(e)
                            if e == pedge:
                                break
                        blocks.append(comp)
    bridges = [b[0] for b in blocks if len(b) == 1]
    return blocks, bridges


@dataclass
class Validation:
    ok: bool
    reason: str = ""
    block: tuple[int, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def validate_level_k(net: Network, k: int) -> Validation:
    problems = net.structure_problems()
    if problems:
        return Validation(False, "; ".join(problems))
    if net.n_vertices == 1:
        return Validation(True)
    edges = net.edges
    blocks, bridges = blocks_and_bridges(net.n_vertices, edges)
    bridge_sources = {edges[e][0] for e in bridges}
    indeg = [len(p) for p in net.parents]
    for comp in blocks:
        verts = set()
        for e in comp:
            verts.update(edges[e])
        rets = sum(1 for v in verts if indeg[v] == 2)
        key = tuple(sorted(verts))
        if rets > k:
            return Validation(False, f"block {key} has {rets} reticulations (> {k})", key)
        if len(verts) >= 3:
            sources = sum(1 for v in verts if v in bridge_sources)
            if sources < 2:
                return Validation(False, f"block {key} has {sources} bridge source(s)", key)
    return Validation(True)


def split_test(net: Network, v: int) -> bool:
    cs = net.children[v]
    if len(cs) != 2:
        raise ValueError(f"vertex {v} has outdegree {len(cs)}, expected 2")
    seen = _reach(net, cs[0])
    stack = [cs[1]]
    mark = {cs[1]}
    while stack:
        u = stack.pop()
        if u in seen:
            return False
        for w in net.children[u]:
            if w not in mark:
                mark.add(w)
                stack.append(w)
    return True


def _reach(net: Network, v: int) -> set[int]:
    seen = {v}
    stack = [v]
    while stack:
        u = stack.pop()
        for w in net.children[u]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


# -- decorated trees ----------------------------------------------------------

@dataclass
class DecoratedTree:
    """Rooted tree whose inner vertices carry head structures.

    Tree vertex 0 is the root. The decoration of ``v`` is a network whose leaf
    labelled ``i`` (1-based) is identified with ``children[v][i - 1]``.
    """

    children: list[list[int]]
    labels: dict[int, object]
    decorations: dict[int, Network] = field(default_factory=dict)
    plane: bool = False

    @property
    def n_vertices(self) -> int:
        return len(self.children)

    @property
    def n_leaves(self) -> int:
        return len(self.labels)

    def problems(self) -> list[str]:
        out = []
        for v, cs in enumerate(self.children):
            if cs:
                if len(cs) < 2:
                    out.append(f"inner vertex {v} has outdegree {len(cs)}")
                dec = self.decorations.get(v)
                if dec is None:
                    out.append(f"inner vertex {v} is undecorated")
                elif sorted(dec.leaf_labels.values()) != list(range(1, len(cs) + 1)):
                    out.append(f"decoration of {v} does not match its {len(cs)} children")
            elif v not in self.labels:
                out.append(f"leaf {v} is unlabelled")
        if len(set(self.labels.values())) != len(self.labels):
            out.append("duplicate leaf labels")
        return out

    def _min_labels(self) -> list:
        order = self._preorder()
        low: list = [None] * self.n_vertices
        for v in reversed(order):
            if self.children[v]:
                low[v] = min(low[c] for c in self.children[v])
            else:
                low[v] = self.labels[v]
        return low

    def _preorder(self) -> list[int]:
        out, stack = [], [0]
        while stack:
            v = stack.pop()
            out.append(v)
            stack.extend(reversed(self.children[v]))
        return out

    def canonical(self):
        """Code identifying the tree up to reordering children (unless plane)."""
        low = self._min_labels()
        codes: dict[int, tuple] = {}
        for v in reversed(self._preorder()):
            cs = self.children[v]
            if not cs:
                codes[v] = ("leaf", self.labels[v])
                continue
            dec = self.decorations[v]
            if self.plane:
                order = list(range(len(cs)))
            else:
                order = sorted(range(len(cs)), key=lambda i: low[cs[i]])
            pos = {old + 1: new + 1 for new, old in enumerate(order)}
            codes[v] = ("node", dec.relabel_leaves(pos).canonical(),
                        tuple(codes[cs[i]] for i in order))
        return codes[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, DecoratedTree):
            return NotImplemented
        if self.plane != other.plane:
            return False
        return self.canonical() == other.canonical()

    def __hash__(self) -> int:
        return hash(self.canonical())


def _head_local_order(head: Network) -> tuple[list[int], dict]:
    """Surplus vertices of a head in topological order, and its leaf map."""
    leaf_of = {v: lab for v, lab in head.leaf_labels.items()}
    surplus = [v for v in head.topological_order() if v != head.root and v not in leaf_of]
    return surplus, leaf_of


def blow_up(tree: DecoratedTree) -> Network:
    """Replace every inner tree vertex by its decoration.

    Vertex ids follow the depth-first order of the tree (leftmost child first)
    with the surplus vertices of each head listed right after the head's root.
    """
    problems = tree.problems()
    if problems:
        raise ValueError("invalid decorated tree: " + "; ".join(problems))
    order = tree._preorder()
    ids = [0] * tree.n_vertices
    head_maps: dict[int, list[int]] = {}
    nxt = 0
    for v in order:
        ids[v] = nxt
        nxt += 1
        if tree.children[v]:
            surplus, _ = _head_local_order(tree.decorations[v])
            head_maps[v] = surplus
            nxt += len(surplus)
    children: list[list[int]] = [[] for _ in range(nxt)]
    labels = {}
    for v in order:
        cs = tree.children[v]
        if not cs:
            labels[ids[v]] = tree.labels[v]
            continue
        head = tree.decorations[v]
        local = {head.root: ids[v]}
        for i, u in enumerate(head_maps[v]):
            local[u] = ids[v] + 1 + i
        for u, lab in head.leaf_labels.items():
            local[u] = ids[cs[lab - 1]]
        for s, d in head.edges:
            children[local[s]].append(local[d])
    return Network(children, labels, 0)


def decompose(net: Network, return_map: bool = False):
    """Decorated tree of ``net``; children ordered by smallest leaf label below.

    With ``return_map`` also returns ``(tree_to_net, surplus)`` where
    ``tree_to_net[t]`` is the network vertex of tree vertex ``t`` and
    ``surplus[t]`` lists the surplus vertices of its head.
    """
    problems = net.structure_problems()
    if problems:
        raise ValueError("malformed network: " + "; ".join(problems))
    n = net.n_vertices
    edges = net.edges
    blocks, bridges = blocks_and_bridges(n, edges)
    edge_index = {e: i for i, e in enumerate(edges)}
    block_of = [0] * len(edges)
    for b, comp in enumerate(blocks):
        for e in comp:
            block_of[e] = b
    is_bridge = [False] * len(edges)
    for e in bridges:
        is_bridge[e] = True

    low: list = [None] * n
    for v in reversed(net.topological_order()):
        cs = net.children[v]
        low[v] = min(low[c] for c in cs) if cs else net.leaf_labels[v]

    t_children: list[list[int]] = []
    t_labels: dict[int, object] = {}
    decorations: dict[int, Network] = {}
    tree_to_net: list[int] = []
    surplus_of: list[list[int]] = []

    def new_tree_vertex(u):
        tree_to_net.append(u)
        t_children.append([])
        surplus_of.append([])
        return len(tree_to_net) - 1

    stack = [new_tree_vertex(net.root)]
    while stack:
        t = stack.pop()
        u = tree_to_net[t]
        cs = net.children[u]
        if not cs:
            t_labels[t] = net.leaf_labels[u]
            continue
        e0, e1 = edge_index[(u, cs[0])], edge_index[(u, cs[1])]
        if is_bridge[e0] and is_bridge[e1]:
            head_leaves = sorted(cs, key=lambda w: low[w])
            decorations[t] = cherry(1, 2)
        else:
            b = block_of[e0]
            verts = set()
            for e in blocks[b]:
                verts.update(edges[e])
            head_leaves = []
            head_edges = [edges[e] for e in blocks[b]]
            for x in verts:
                for w in net.children[x]:
                    if block_of[edge_index[(x, w)]] != b:
                        head_leaves.append(w)
                        head_edges.append((x, w))
            head_leaves.sort(key=lambda w: low[w])
            inner = [x for x in verts if x != u]
            inner.sort()
            local = {u: 0}
            for i, x in enumerate(inner):
                local[x] = i + 1
            base = len(local)
            for i, w in enumerate(head_leaves):
                local[w] = base + i
            decorations[t] = Network.from_edges(
                base + len(head_leaves),
                [(local[s], local[d]) for s, d in head_edges],
                {base + i: i + 1 for i in range(len(head_leaves))})
            surplus_of[t] = inner
        for w in head_leaves:
            c = new_tree_vertex(w)
            t_children[t].append(c)
        stack.extend(reversed(t_children[t]))
    tree = DecoratedTree(t_children, t_labels, decorations, plane=False)
    if return_map:
        return tree, tree_to_net, surplus_of
    return tree


# -- serialization ----------------------------------------------------------

def _ranked_order(net: Network) -> list[int]:
    rank = [0] * net.n_vertices
    for v in net.topological_order():
        for w in net.children[v]:
            if rank[v] + 1 > rank[w]:
                rank[w] = rank[v] + 1
    return sorted(range(net.n_vertices), key=lambda v: (rank[v], v))


def serialize(net: Network) -> str:
    order = _ranked_order(net)
    new = {v: i for i, v in enumerate(order)}
    edges = sorted([new[s], new[d]] for s, d in net.edges)
    labels = {str(new[v]): lab for v, lab in sorted(net.leaf_labels.items(),
                                                      key=lambda kv: new[kv[0]])}
    return json.dumps({"n_vertices": net.n_vertices, "root": new[net.root],
                       "edges": edges, "leaf_labels": labels}, sort_keys=True)


def deserialize(text: str) -> Network:
    try:
        data = json.loads(text)
        n = int(data["n_vertices"])
        edges = [(int(s), int(d)) for s, d in data["edges"]]
        labels = {int(v): lab for v, lab in data["leaf_labels"].items()}
        root = int(data["root"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed network JSON: {exc}") from exc
    for s, d in edges:
        if not (0 <= s < n and 0 <= d < n):
            raise ValueError(f"edge ({s},{d}) out of range")
    return Network.from_edges(n, edges, labels, root)


def to_dot(net: Network, name: str = "N") -> str:
    lines = [f"digraph {name} {{"]
    for v in range(net.n_vertices):
        kind = net.kind(v) if net.n_vertices > 1 else "leaf"
        if v in net.leaf_labels:
            attrs = f'shape=plaintext, label="{net.leaf_labels[v]}"'
        elif kind == "reticulation":
            attrs = 'shape=box, label=""'
        elif kind == "root":
            attrs = 'shape=doublecircle, label=""'
        else:
            attrs = 'shape=circle, label=""'
        lines.append(f"  v{v} [{attrs}];")
    for s, d in net.edges:
        lines.append(f"  v{s} -> v{d};")
    lines.append("}")
    return "\n".join(lines) + "\n"
