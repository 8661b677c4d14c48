"""Level-k generators: enumeration, validation and weight tables.

A generator is the multigraph left over when the leaves of a simple network
are removed and every vertex with one incoming and one outgoing edge is
contracted. Its vertices are the root (0 in, 2 out), tree vertices (1, 2),
inner reticulations (2, 1) and sinks (2, 0). With ``r1`` inner reticulations and
``r0`` sinks there are ``r1 + 2 r0 - 2`` tree vertices, so a level-k generator
has at most ``3k - 1`` vertices.
"""
from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import factorial

from .canon import canonical_form
from .network import Network, decompose, validate_level_k

__all__ = [
    "K_MAX",
    "Generator",
    "GeneratorTable",
    "enumerate_generators",
    "is_valid_generator",
    "tabulate_generators",
    "generators_to_json",
    "generators_from_json",
]

K_MAX = 3

_TYPES = {"tree": (1, 2), "ret": (2, 1), "sink": (2, 0)}


@dataclass(frozen=True)
class Generator:
    """Directed multigraph on ``0..n_vertices-1``; ``edges`` repeats parallel edges."""

    n_vertices: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(sorted(tuple(e) for e in self.edges)))

    @cached_property
    def multiplicity(self) -> Counter:
        return Counter(self.edges)

    @cached_property
    def degrees(self) -> list[tuple[int, int]]:
        ins = [0] * self.n_vertices
        outs = [0] * self.n_vertices
        for s, d in self.edges:
            outs[s] += 1
            ins[d] += 1
        return list(zip(ins, outs))

    @property
    def root(self) -> int:
        return 0

    @cached_property
    def sinks(self) -> tuple[int, ...]:
        return tuple(v for v, (i, o) in enumerate(self.degrees) if o == 0)

    @cached_property
    def plain_edges(self) -> tuple[tuple[int, int], ...]:
        return tuple(e for e, m in sorted(self.multiplicity.items()) if m == 1)

    @cached_property
    def pairs(self) -> tuple[tuple[int, int], ...]:
        return tuple(e for e, m in sorted(self.multiplicity.items()) if m == 2)

    @property
    def signature(self) -> tuple[int, int, int]:
        """``(i, j, l)``: sinks, plain edges, parallel pairs."""
        return len(self.sinks), len(self.plain_edges), len(self.pairs)

    @property
    def n_reticulations(self) -> int:
        return sum(1 for i, _ in self.degrees if i == 2)

    @cached_property
    def _canon(self):
        return canonical_form(self.n_vertices, self.edges)

    @property
    def code(self):
        return self._canon.code

    @cached_property
    def automorphisms(self) -> list[tuple[int, ...]]:
        return self._canon.automorphisms()

    @cached_property
    def leaf_fixing_automorphisms(self) -> list[tuple[int, ...]]:
        """Automorphisms fixing every sink and both ends of every parallel pair.

        These are the symmetries that survive in a blow-up where all pendant
        leaves are labelled, provided they only move unsubdivided plain edges.
        """
        fixed = set(self.sinks)
        for s, d in self.pairs:
            fixed.update((s, d))
        return [a for a in self.automorphisms if all(a[v] == v for v in fixed)]

    def fixed_plain_edges(self, perm) -> frozenset[int]:
        """Indices of plain edges mapped to themselves by ``perm``."""
        return frozenset(i for i, (s, d) in enumerate(self.plain_edges)
                         if perm[s] == s and perm[d] == d)

    def to_dict(self) -> dict:
        return {"n_vertices": self.n_vertices,
                "edges": [[s, d, m] for (s, d), m in sorted(self.multiplicity.items())]}

    @classmethod
    def from_dict(cls, data: dict) -> "Generator":
        edges = []
        for s, d, m in data["edges"]:
            if m not in (1, 2):
                raise ValueError(f"edge multiplicity {m} not in {{1, 2}}")
            edges.extend([(s, d)] * m)
        return cls(int(data["n_vertices"]), tuple(edges))


def _topological(n, edges):
    indeg = [0] * n
    out = [[] for _ in range(n)]
    for s, d in edges:
        indeg[d] += 1
        out[s].append(d)
    order = [v for v in range(n) if indeg[v] == 0]
    for v in order:
        for w in out[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                order.append(w)
    return order if len(order) == n else None


def single_blow_up(g: Generator) -> Network:
    """Every edge subdivided once with a pendant leaf; every sink gets a leaf."""
    children: list[list[int]] = [[] for _ in range(g.n_vertices)]
    labels = {}

    def add_leaf(parent):
        v = len(children)
        children.append([])
        children[parent].append(v)
        labels[v] = len(labels) + 1

    for s, d in g.edges:
        x = len(children)
        children.append([])
        children[s].append(x)
        children[x].append(d)
        add_leaf(x)
    for v in g.sinks:
        add_leaf(v)
    return Network(children, labels, 0)


def generator_problems(g: Generator, k: int) -> list[str]:
    problems = []
    n = g.n_vertices
    if n < 2:
        return ["fewer than two vertices"]
    if any(not (0 <= s < n and 0 <= d < n) or s == d for s, d in g.edges):
        return ["edge out of range or loop"]
    if any(m > 2 for m in g.multiplicity.values()):
        problems.append("more than two parallel edges")
    if _topological(n, g.edges) is None:
        problems.append("directed cycle")
        return problems
    roots = [v for v, (i, _) in enumerate(g.degrees) if i == 0]
    if roots != [0] or g.degrees[0] != (0, 2):
        problems.append("vertex 0 must be the unique root with outdegree 2")
    for v, deg in enumerate(g.degrees[1:], start=1):
        if deg not in _TYPES.values():
            problems.append(f"vertex {v} has (in, out) = {deg}")
    if g.n_reticulations > k:
        problems.append(f"{g.n_reticulations} indegree-2 vertices exceed k={k}")
    return problems


def is_valid_generator(g: Generator, k: int) -> bool:
    """Degree/acyclicity invariants plus a constructive realizability check."""
    if generator_problems(g, k):
        return False
    net = single_blow_up(g)
    if not validate_level_k(net, k):
        return False
    tree = decompose(net)
    # a simple network is its own head: the decomposition is a single star
    return all(not c for c in tree.children[1:]) and len(tree.children[0]) == net.n_leaves


def _relabel_topological(n, edges) -> Generator:
    order = _topological(n, edges)
    pos = {v: i for i, v in enumerate(order)}
    return Generator(n, tuple((pos[s], pos[d]) for s, d in edges))


def enumerate_generators(k: int, shuffle_seed: int | None = None) -> list[Generator]:
    """All level-k generators up to isomorphism, sorted by canonical code.

    Vertices are added in topological order, each consuming one or two open
    outgoing stubs; partial graphs are merged by canonical form with vertex
    colours recording the number of open stubs. ``shuffle_seed`` permutes the
    order in which extensions are tried (the result must not depend on it).
    """
    if not (1 <= k <= K_MAX):
        raise ValueError(f"k must lie in 1..{K_MAX}")
    import random

    rng = random.Random(shuffle_seed) if shuffle_seed is not None else None
    found: dict = {}
    for r0 in range(1, k + 1):
        for r1 in range(0, k - r0 + 1):
            t = r1 + 2 * r0 - 2
            for g in _grow(t, r1, r0, rng):
                if not is_valid_generator(g, k):
                    continue
                g = _relabel_topological(g.n_vertices, g.edges)
                found.setdefault(g.code, g)
    return [found[c] for c in sorted(found)]


def _grow(t, r1, r0, rng):
    # state: (edges, open stubs per vertex, remaining (t, r1, r0))
    start = ((), (2,), (t, r1, r0))
    level = {None: start}
    while level:
        nxt = {}
        for edges, stubs, rem in level.values():
            if rem == (0, 0, 0):
                if not any(stubs):
                    yield Generator(len(stubs), edges)
                continue
            options = []
            for kind, (indeg, outdeg) in zip(range(3), ((1, 2), (2, 1), (2, 0))):
                if rem[kind] == 0:
                    continue
                new_rem = tuple(r - (i == kind) for i, r in enumerate(rem))
                open_v = [v for v, s in enumerate(stubs) if s]
                if indeg == 1:
                    choices = [(u,) for u in open_v]
                else:
                    choices = [(u, w) for a, u in enumerate(open_v) for w in open_v[a:]
                               if u != w or stubs[u] >= 2]
                for parents in choices:
                    options.append((parents, outdeg, new_rem))
            if rng is not None:
                rng.shuffle(options)
            for parents, outdeg, new_rem in options:
                v = len(stubs)
                new_stubs = list(stubs) + [outdeg]
                for u in parents:
                    new_stubs[u] -= 1
                new_edges = edges + tuple((u, v) for u in parents)
                # a partial graph can only finish if the open stubs can be absorbed
                need_in = 1 * new_rem[0] + 2 * (new_rem[1] + new_rem[2])
                supply = sum(new_stubs) + 2 * new_rem[0] + new_rem[1]
                if supply != need_in or (any(new_rem) and not any(new_stubs)):
                    continue
                key = canonical_form(v + 1, new_edges, [(s,) for s in new_stubs]).code
                nxt.setdefault((key, new_rem), (new_edges, tuple(new_stubs), new_rem))
        level = nxt


@dataclass
class GeneratorTable:
    """Per-level generator statistics feeding the head weight series.

    ``counts[(i, j, l)]`` is the number of generators with labelled sinks,
    plain edges and parallel pairs, i.e. ``sum i! j! l! / |Aut|``.
    ``weights[(i, f, l)]`` is the coefficient of ``z^i S^f P^l`` in the head
    series, where ``S = 1/(1-z)`` and ``P = z/(1-z) + z^2/(2(1-z)^2)``; it
    averages over the automorphisms that fix all leaves.
    """

    k: int | None
    counts: dict[tuple[int, int, int], int] = field(default_factory=dict)
    weights: dict[tuple[int, int, int], Fraction] = field(default_factory=dict)

    def naive_weights(self) -> dict[tuple[int, int, int], Fraction]:
        """``counts / (i! j! l!)``: ignores symmetries that fix every leaf."""
        return {(i, j, l): Fraction(c, factorial(i) * factorial(j) * factorial(l))
                for (i, j, l), c in self.counts.items()}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "i", "j", "l", "count"])
        for (i, j, l), c in sorted(self.counts.items()):
            w.writerow([self.k, i, j, l, c])
        return buf.getvalue()


def generator_weight_terms(g: Generator) -> Counter:
    """``{(i, f, l): weight}`` contribution of one generator."""
    i, _, l = g.signature
    terms: Counter = Counter()
    a = len(g.automorphisms)
    for perm in g.leaf_fixing_automorphisms:
        f = len(g.fixed_plain_edges(perm))
        terms[(i, f, l)] += Fraction(1, a)
    return terms


def tabulate_generators(gens: list[Generator], k: int | None = None) -> GeneratorTable:
    codes = [g.code for g in gens]
    if len(set(codes)) != len(codes):
        raise ValueError("generator list contains isomorphic duplicates")
    table = GeneratorTable(k)
    for g in gens:
        i, j, l = g.signature
        n_labellings = factorial(i) * factorial(j) * factorial(l)
        a = len(g.automorphisms)
        if n_labellings % a:
            raise ArithmeticError("automorphism group does not act freely on labellings")
        table.counts[(i, j, l)] = table.counts.get((i, j, l), 0) + n_labellings // a
        for key, w in generator_weight_terms(g).items():
            table.weights[key] = table.weights.get(key, Fraction(0)) + w
    return table


def generators_to_json(gens: list[Generator]) -> str:
    return json.dumps([g.to_dict() for g in gens], indent=1)


def generators_from_json(text: str) -> list[Generator]:
    return [Generator.from_dict(d) for d in json.loads(text)]
