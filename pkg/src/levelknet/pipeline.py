"""Cached per-level setup: generators, head weights, offspring model."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .generators import Generator, GeneratorTable, enumerate_generators, tabulate_generators
from .heads import HeadFamily
from .offspring import OffspringModel, build_offspring, solve_t0
from .series import DEFAULT_ORDER, Series, solve_network_series

__all__ = ["Level", "level", "HIGH_ORDER"]

# order used for t0 and the pmf; the head series is cheap at this size
HIGH_ORDER = 256


@dataclass
class Level:
    k: int
    generators: list[Generator]
    table: GeneratorTable
    heads: HeadFamily
    model: OffspringModel

    @property
    def h_series(self) -> Series:
        return self.heads.weights.series

    def network_series(self, order: int = DEFAULT_ORDER) -> Series:
        return _network_series(self.k, order)


@lru_cache(maxsize=None)
def level(k: int) -> Level:
    gens = enumerate_generators(k)
    table = tabulate_generators(gens, k)
    heads = HeadFamily(gens, HIGH_ORDER)
    h = heads.weights.series
    t0, err = solve_t0(h)
    model = build_offspring(h, t0, err, table=table, k=k)
    return Level(k, gens, table, heads, model)


@lru_cache(maxsize=None)
def _network_series(k: int, order: int) -> Series:
    return solve_network_series(level(k).h_series.truncate(order))
