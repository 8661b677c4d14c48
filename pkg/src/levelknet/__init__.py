"""Enumeration and uniform sampling of level-k phylogenetic networks."""
from .constants import derive_constants
from .generators import Generator, enumerate_generators, tabulate_generators
from .heads import HeadFamily, HeadStructure, head_weight_series
from .network import (DecoratedTree, Network, blow_up, decompose, deserialize, serialize,
                      to_dot, validate_level_k)
from .offspring import OffspringModel, build_offspring, exact_count, solve_t0
from .pipeline import level
from .sampler import (SampleConfig, sample_conditioned_tree, sample_network, sample_root_limit,
                      sample_spine_tree, sample_vertex_limit)
from .series import Series, solve_network_series

__version__ = "0.1.0"
