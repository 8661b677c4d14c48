"""Head structures: the cherry and the simple networks obtained from generators.

A simple head arises from a generator by subdividing edges into paths and
hanging one leaf below every subdivision vertex and every sink. Of the two
edges of a parallel pair at least one must be subdivided.

Counting and sampling share one bookkeeping device. For a generator ``g`` let
``Gamma_g`` be its automorphism group extended by swapping the edges inside each
parallel pair, and call an *assignment* the vector of subdivision counts per
physical edge. An assignment ``a`` contributes ``|K_a| / |Gamma_g|`` to the
exponential generating series, where ``K_a`` collects the automorphisms that
fix every leaf of the blow-up: those fixing all sinks and pair endpoints and
moving only plain edges that are not subdivided.
"""
from __future__ import annotations

import itertools
import json
import random
from bisect import bisect_right
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import comb, factorial
from typing import Iterator, Sequence

from .generators import Generator, GeneratorTable
from .network import Network
from .series import Series

__all__ = [
    "HeadStructure",
    "HeadWeights",
    "HeadFamily",
    "head_weight_series",
    "enumerate_heads",
    "sample_head",
    "head_surplus",
    "CHERRY",
    "term_coefficient",
    "leaf_distances",
]


@dataclass(frozen=True)
class HeadStructure:
    """A head on ``d`` leaves in compact layout.

    Local vertex 0 is the root, ``1..n_surplus`` are the surplus vertices in
    topological order and ``n_surplus + i`` is the leaf labelled ``i``.
    """

    n_surplus: int
    d: int
    edges: tuple[tuple[int, int], ...]
    generator: int = -1  # -1 for the cherry
    subdivisions: tuple[int, ...] = ()

    @property
    def kind(self) -> str:
        return "cherry" if self.generator < 0 else "simple"

    @property
    def n_vertices(self) -> int:
        return 1 + self.n_surplus + self.d

    @cached_property
    def network(self) -> Network:
        s = self.n_surplus
        return Network.from_edges(self.n_vertices, self.edges,
                                  {s + i: i for i in range(1, self.d + 1)})

    def serialize(self) -> str:
        from .network import serialize

        return serialize(self.network)


CHERRY = HeadStructure(0, 2, ((0, 1), (0, 2)))


def head_surplus(h) -> int:
    """Non-root, non-leaf vertices of a head (``HeadStructure`` or ``Network``)."""
    if isinstance(h, HeadStructure):
        return h.n_surplus
    return h.n_vertices - 1 - h.n_leaves


def term_coefficient(i: int, f: int, l: int, d: int) -> Fraction:
    """``[z^d] z^i S^f P^l`` with ``S = 1/(1-z)`` and ``P = (S^2 - 1)/2``."""
    total = 0
    for c in range(l + 1):
        m = f + 2 * c
        if m == 0:
            part = int(d == i)
        elif d < i:
            part = 0
        else:
            part = comb(d - i + m - 1, m - 1)
        total += (-1) ** (l - c) * comb(l, c) * part
    return Fraction(total, 2 ** l)


class _Template:
    """Precomputed data for fast blow-ups of one generator."""

    def __init__(self, index: int, g: Generator):
        self.index = index
        self.g = g
        self.i, self.j, self.l = g.signature
        self.slots = self.j + 2 * self.l
        # physical edges: plain edges first, then both copies of every pair
        self.slot_edges = list(g.plain_edges) + [e for p in g.pairs for e in (p, p)]
        self.n_aut = len(g.automorphisms)
        self.fixed_sets = [g.fixed_plain_edges(p) for p in g.leaf_fixing_automorphisms]
        self.n_kernel = len(self.fixed_sets)
        self.extended_order = self.n_aut * 2 ** self.l
        out = [[] for _ in range(g.n_vertices)]
        for slot, (s, d) in enumerate(self.slot_edges):
            out[s].append(slot)
        self.out_slots = out
        self.sinks = set(g.sinks)

    def series(self, order: int) -> Series:
        """Exponential generating series of this generator's heads."""
        one = Series.monomial(0, order)
        z = Series.monomial(1, order)
        s = Series.geometric(order)
        p = (s * s - one) * Fraction(1, 2)
        base = z ** self.i * p ** self.l
        total = Series.zero(order)
        for fixed in self.fixed_sets:
            total = total + base * s ** len(fixed)
        return total * Fraction(1, self.n_aut)

    def kernel_size(self, m: Sequence[int]) -> int:
        moved_ok = 0
        busy = {e for e in range(self.j) if m[e]}
        for fixed in self.fixed_sets:
            if busy <= fixed:
                moved_ok += 1
        return moved_ok

    def valid_assignment(self, m: Sequence[int]) -> bool:
        j = self.j
        return all(m[j + 2 * q] or m[j + 2 * q + 1] for q in range(self.l))

    def build(self, m: Sequence[int], labels: Sequence[int] | None = None) -> HeadStructure:
        """Blow up with ``m[slot]`` subdivisions; ``labels[t]`` labels the t-th leaf.

        Leaves are enumerated in surplus order (subdivision leaves, then sinks).
        """
        g = self.g
        n_gen = g.n_vertices
        # surplus order: generator vertex v, then subdivision chains of its out-edges
        local = [0] * n_gen
        chains: list[list[int]] = [[] for _ in self.slot_edges]
        nxt = 0
        leaf_parents = []
        for v in range(n_gen):
            local[v] = nxt
            nxt += 1
            if v in self.sinks:
                leaf_parents.append(local[v])
            for slot in self.out_slots[v]:
                chain = list(range(nxt, nxt + m[slot]))
                nxt += m[slot]
                chains[slot] = chain
                leaf_parents.extend(chain)
        n_surplus = nxt - 1
        d = len(leaf_parents)
        if labels is None:
            labels = range(1, d + 1)
        edges = []
        for slot, (s, dst) in enumerate(self.slot_edges):
            path = [local[s]] + chains[slot] + [local[dst]]
            edges.extend(zip(path, path[1:]))
        for parent, lab in zip(leaf_parents, labels):
            edges.append((parent, n_surplus + lab))
        return HeadStructure(n_surplus, d, tuple(edges), self.index, tuple(m))

    def assignments(self, total: int) -> Iterator[tuple[int, ...]]:
        """All valid subdivision vectors with ``sum == total``."""
        if self.slots == 0:
            if total == 0:
                yield ()
            return
        for cut in itertools.combinations(range(total + self.slots - 1), self.slots - 1):
            bounds = (-1,) + cut + (total + self.slots - 1,)
            m = tuple(bounds[q + 1] - bounds[q] - 1 for q in range(self.slots))
            if self.valid_assignment(m):
                yield m

    def random_assignment(self, total: int, rng: random.Random) -> tuple[int, ...]:
        slots = self.slots
        if slots == 0:
            return ()
        while True:
            cut = sorted(rng.sample(range(total + slots - 1), slots - 1))
            prev = -1
            m = []
            for c in cut:
                m.append(c - prev - 1)
                prev = c
            m.append(total + slots - 2 - prev)
            if self.valid_assignment(m):
                return tuple(m)


@dataclass
class HeadWeights:
    """``h[d] = |heads on d leaves| / d!`` as exact rationals up to ``order``."""

    h: tuple[Fraction, ...]

    @property
    def order(self) -> int:
        return len(self.h) - 1

    @property
    def series(self) -> Series:
        return Series(self.h)

    def labelled_count(self, d: int) -> int:
        c = self.h[d] * factorial(d)
        if c.denominator != 1:
            raise ArithmeticError(f"non-integral head count at d={d}")
        return c.numerator

    def to_json(self) -> str:
        return json.dumps({str(d): f"{c.numerator}/{c.denominator}"
                           for d, c in enumerate(self.h) if c})

    @classmethod
    def from_json(cls, text: str, order: int) -> "HeadWeights":
        data = json.loads(text)
        h = [Fraction(0)] * (order + 1)
        for d, c in data.items():
            if int(d) <= order:
                h[int(d)] = Fraction(c)
        return cls(tuple(h))


def _finish(total: Series) -> tuple[Fraction, ...]:
    cs = list(total.coeffs)
    cs[0] = Fraction(0)
    if len(cs) > 1:
        # a blow-up with a single leaf has only one bridge source
        cs[1] = Fraction(0)
    if len(cs) > 2:
        cs[2] += Fraction(1, 2)
    return tuple(cs)


def head_weight_series(table: GeneratorTable, order: int, naive: bool = False) -> HeadWeights:
    """Coefficients of ``z^2/2 + sum c(i,f,l) z^i S^f P^l`` up to ``order``.

    With ``naive=True`` the plain-edge exponent is the number of plain edges and
    the coefficient ``counts / (i! j! l!)``; that form misses heads whose
    generator has a nontrivial symmetry fixing all leaves.
    """
    terms = table.naive_weights() if naive else table.weights
    one = Series.monomial(0, order)
    z = Series.monomial(1, order)
    s = Series.geometric(order)
    p = (s * s - one) * Fraction(1, 2)
    total = Series.zero(order)
    for (i, f, l), c in sorted(terms.items()):
        total = total + (z ** i * s ** f * p ** l) * c
    return HeadWeights(_finish(total))


class HeadFamily:
    """All head structures of one level: counting, enumeration and sampling."""

    def __init__(self, generators: Sequence[Generator], order: int = 64):
        self.generators = list(generators)
        self.templates = [_Template(q, g) for q, g in enumerate(self.generators)]
        self.order = order
        self._gen_cache: dict[tuple[int, int], Fraction] = {}
        h = [Fraction(0)] * (order + 1)
        for d in range(2, order + 1):
            h[d] = sum((self.generator_weight(q, d) for q in range(len(self.templates))),
                       Fraction(0))
        if order >= 2:
            h[2] += Fraction(1, 2)
        self.weights = HeadWeights(tuple(h))
        self._choice: dict[int, tuple[list[float], list[int]]] = {}

    @property
    def h(self) -> tuple[Fraction, ...]:
        return self.weights.h

    def weight(self, d: int) -> Fraction:
        """``h[d]`` for any ``d``, beyond the stored order too."""
        if d <= self.order:
            return self.h[d]
        return (sum((self.generator_weight(q, d) for q in range(len(self.templates))),
                    Fraction(0)) + (Fraction(1, 2) if d == 2 else 0))

    def generator_weight(self, q: int, d: int) -> Fraction:
        """Contribution of generator ``q`` to ``h[d]`` (closed form)."""
        if d <= 1:
            return Fraction(0)
        key = (q, d)
        got = self._gen_cache.get(key)
        if got is None:
            t = self.templates[q]
            got = sum((term_coefficient(t.i, len(f), t.l, d) for f in t.fixed_sets),
                      Fraction(0)) / t.n_aut
            self._gen_cache[key] = got
        return got

    def _chooser(self, d: int):
        got = self._choice.get(d)
        if got is None:
            ws = [(q, self.generator_weight(q, d)) for q in range(len(self.templates))]
            if d == 2:
                ws.append((-1, Fraction(1, 2)))
            ws = [(q, w) for q, w in ws if w]
            total = sum(w for _, w in ws)
            cum, acc = [], Fraction(0)
            for _, w in ws:
                acc += w
                cum.append(float(acc / total))
            cum[-1] = 1.0
            got = (cum, [q for q, _ in ws])
            self._choice[d] = got
        return got

    def sample(self, d: int, rng: random.Random, kind: str | None = None) -> HeadStructure:
        """Uniform head on ``d`` labelled leaves (``kind='cherry'`` forces the cherry)."""
        if d < 2:
            raise ValueError("heads have at least two leaves")
        if kind == "cherry":
            if d != 2:
                raise ValueError("the cherry has two leaves")
            return CHERRY
        cum, qs = self._chooser(d)
        if not qs:
            raise ValueError(f"no head structures on {d} leaves")
        q = qs[bisect_right(cum, rng.random())] if len(qs) > 1 else qs[0]
        if q < 0:
            return CHERRY
        t = self.templates[q]
        while True:
            m = t.random_assignment(d - t.i, rng)
            if t.n_kernel == 1 or rng.random() * t.n_kernel < t.kernel_size(m):
                break
        labels = list(range(1, d + 1))
        rng.shuffle(labels)
        return t.build(m, labels)

    def orbit_weights(self, d: int) -> Iterator[tuple[Fraction, HeadStructure]]:
        """Every assignment on ``d`` leaves with its series weight.

        The weights sum to ``h[d]``; each yielded head carries the identity
        leaf labelling.
        """
        if d == 2:
            yield Fraction(1, 2), CHERRY
        for t in self.templates:
            if d - t.i < 0:
                continue
            for m in t.assignments(d - t.i):
                yield Fraction(t.kernel_size(m), t.extended_order), t.build(m)

    def enumerate(self, d: int, budget: int = 10**6) -> list[HeadStructure]:
        """All labelled heads on ``{1..d}`` (duplicates removed by canonical form)."""
        if d < 2:
            raise ValueError("heads have at least two leaves")
        expected = self.weights.labelled_count(d) if d <= self.order else None
        if expected is not None and expected > budget:
            raise RuntimeError(f"{expected} heads on {d} leaves exceed the budget {budget}")
        seen: dict = {}
        for _, base in self.orbit_weights(d):
            t = self.templates[base.generator] if base.generator >= 0 else None
            for perm in itertools.permutations(range(1, d + 1)):
                head = t.build(base.subdivisions, perm) if t else CHERRY
                key = head.network.canonical()
                if key not in seen:
                    seen[key] = head
                    if len(seen) > budget:
                        raise RuntimeError("head enumeration exceeded its budget")
        return list(seen.values())

    def surplus_mean(self, d: int) -> Fraction:
        """Exact mean surplus of a uniform head on ``d`` leaves."""
        total = self.weight(d)
        if total == 0:
            raise ValueError(f"no heads on {d} leaves")
        acc = Fraction(0)
        for t in self.templates:
            w = self.generator_weight(t.index, d)
            acc += w * (t.g.n_vertices - 1 + d - t.i)
        return acc / total


def enumerate_heads(family: HeadFamily, d: int, budget: int = 10**6) -> list[HeadStructure]:
    return family.enumerate(d, budget)


def sample_head(family: HeadFamily, d: int, rng: random.Random,
                kind: str | None = None) -> HeadStructure:
    return family.sample(d, rng, kind)


def leaf_distances(head: HeadStructure, directed: bool = True) -> list[int]:
    """Shortest path lengths from the root to leaves ``1..d``."""
    n = head.n_vertices
    adj: list[list[int]] = [[] for _ in range(n)]
    for s, d in head.edges:
        adj[s].append(d)
        if not directed:
            adj[d].append(s)
    dist = [-1] * n
    dist[0] = 0
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if dist[w] < 0:
                dist[w] = dist[v] + 1
                queue.append(w)
    s = head.n_surplus
    return [dist[s + i] for i in range(1, head.d + 1)]
