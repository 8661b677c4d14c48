"""The acceptance suite: ten criteria, each run at its stated tolerance.

Every criterion returns a :class:`CriterionResult`; :func:`run_suite` runs a
selection and reports one line per criterion. Monte-Carlo criteria draw all
randomness from one seed through :mod:`levelknet.parallel`, so results do not
depend on the worker count.
"""
from __future__ import annotations

import math
import os
import time
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import mpmath
import numpy as np
from scipy import stats as sps

from .bruteforce import chi_square, enumerate_decorated_trees, enumerate_networks, raw_heads
from .constants import estimate_b, exact_depth, spine_expectations
from .network import blow_up, decompose, validate_level_k
from .offspring import criticality_bound, exact_count
from .parallel import child_seeds, pmap, rng_for
from .pipeline import level
from .sampler import VertexLimitSampler, ball, sample_network, sample_root_limit, spawn
from .stats import (Census, ball_code, census_from_balls, census_tv, directed_heights,
                    excursion_moment, longest_directed_path, neighborhood_census,
                    undirected_heights)

__all__ = ["CriterionResult", "VerifyContext", "CRITERIA", "QUICK", "run_suite"]

ROOT_PI_2 = math.sqrt(math.pi / 2)


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] criterion {self.number:2d} {self.title}: {self.detail} ({self.seconds:.1f}s)"


def _default_cache() -> Path:
    return Path(os.environ.get("LEVELKNET_CACHE", Path.home() / ".cache" / "levelknet"))


@dataclass
class VerifyContext:
    seed: int = 2024
    jobs: int = 1
    cache_dir: Path = field(default_factory=_default_cache)
    log: Callable[[str], None] = lambda s: None
    _memo: dict = field(default_factory=dict)

    def memo(self, key, make):
        if key not in self._memo:
            self._memo[key] = make()
        return self._memo[key]

    def universe(self, k: int, n: int):
        return self.memo(("universe", k, n),
                         lambda: enumerate_networks(k, n, cache_dir=self.cache_dir))

    def batch(self, k: int, n: int, count: int, stream: int, census: bool = False):
        """Per-network summaries of ``count`` uniform networks (memoised)."""
        def make():
            seeds = child_seeds(self.seed, count, stream)
            self.log(f"  sampling {count} networks, k={k}, n={n}")
            return pmap(_network_summary, [(k, n, s, census) for s in seeds], self.jobs)
        return self.memo(("batch", k, n, count, stream, census), make)


def _network_summary(args):
    k, n, seed, census = args
    lev = level(k)
    rng = rng_for(seed)
    s = sample_network(lev.heads, lev.model, n, rng)
    net = s.network
    hd = directed_heights(net)
    hu = undirected_heights(net)
    out = {
        "n_vertices": net.n_vertices,
        "tree_size": len(s.tree.degrees),
        "H": max(hd),
        "H_undir": max(hu),
        "longest": longest_directed_path(net),
        "root_code": ball_code(ball(net.n_vertices, net.edges, net.root, 1)),
    }
    if census:
        out["census"] = neighborhood_census(net, 1).counts
    return out


# -- criteria ---------------------------------------------------------------------

def c1_exact_counts(ctx: VerifyContext) -> CriterionResult:
    rows, ok = [], True
    for k in (1, 2):
        series = level(k).network_series(8)
        for n in range(1, 5):
            got = exact_count(series, n)
            want = len(ctx.universe(k, n))
            ok &= got == want
            rows.append(f"k={k},n={n}:{got}/{want}")
    return CriterionResult(1, "exact counts vs brute force", ok, " ".join(rows))


def c2_bijection(ctx: VerifyContext) -> CriterionResult:
    checked, failures = 0, 0
    for k in (1, 2):
        for n in range(1, 5):
            for net in ctx.universe(k, n).networks:
                checked += 1
                failures += blow_up(decompose(net)) != net
        heads = raw_heads(k, 4)
        for n in range(1, 5):
            for tree in enumerate_decorated_trees(heads, range(1, n + 1)):
                checked += 1
                failures += decompose(blow_up(tree)) != tree
    return CriterionResult(2, "bijection round trip", failures == 0,
                           f"{failures} failures in {checked} round trips")


def c3_criticality(ctx: VerifyContext) -> CriterionResult:
    parts, ok = [], True
    for k in (1, 2):
        bound = criticality_bound(level(k).model)
        ok &= bound <= 1e-10
        parts.append(f"k={k}: |E xi - 1| <= {mpmath.nstr(bound, 3)}")
    return CriterionResult(3, "criticality", ok, "; ".join(parts))


def c4_uniformity(ctx: VerifyContext, samples: int = 100_000) -> CriterionResult:
    lev = level(1)
    parts, ok = [], True
    for n in (3, 2):
        universe = ctx.universe(1, n)
        rng = np.random.default_rng([ctx.seed, 4, n])
        codes = [sample_network(lev.heads, lev.model, n, rng).network.canonical()
                 for _ in range(samples)]
        p = chi_square(codes, universe)
        ok &= p > 1e-3
        parts.append(f"n={n}: p={p:.4f} over {len(universe)} networks")
    return CriterionResult(4, "sampler uniformity", ok, "; ".join(parts))


def c5_asymptotic_constant(ctx: VerifyContext) -> CriterionResult:
    parts, ok = [], True
    ns = (30, 40, 50)
    for k in (1, 2):
        lev = level(k)
        series = lev.network_series(max(ns))
        m = lev.model
        with mpmath.workdps(40):
            seq = [mpmath.mpf(exact_count(series, n)) * m.rho**n * mpmath.mpf(n) ** 1.5
                   / mpmath.factorial(n) for n in ns]
            vals = [float(x) for x in seq]
            a_k = float(m.a)
        spread = (max(vals) - min(vals)) / np.mean(vals)
        # correction terms are O(1/n)
        fit = np.polyfit([1 / n for n in ns], vals, 1)
        limit = fit[1]
        rel = abs(limit / a_k - 1)
        ok &= spread < 0.05 and rel < 0.10
        parts.append(f"k={k}: spread {spread:.4f}, extrapolated {limit:.6g} vs a_k {a_k:.6g} "
                     f"({rel:.2%})")
    return CriterionResult(5, "asymptotic constant", ok, "; ".join(parts))


def _height_constants(ctx: VerifyContext, k: int, reps: int = 1000):
    def make():
        lev = level(k)
        rng = np.random.default_rng([ctx.seed, 6, k])
        b, _ = estimate_b(lev.model, reps, rng)
        eta = spine_expectations(lev.heads, lev.model, ["eta"], 2000, spawn(rng),
                                 exact_depth(lev.heads))["eta"]
        return b.value / eta.value, b, eta
    return ctx.memo(("bk", k, reps), make)


def c6_height_moments(ctx: VerifyContext, networks: int = 2000) -> CriterionResult:
    parts, ok = [], True
    m2 = excursion_moment(2)
    for k in (1, 2):
        b_k, b, eta = _height_constants(ctx, k)
        est, second = {}, {}
        for n in (500, 2000):
            count = 10_000 if (k == 1 and n == 2000) else networks
            hs = np.array([r["H"] for r in ctx.batch(k, n, count, stream=k)], dtype=float)
            est[n] = b_k * hs.mean() / math.sqrt(n)
            second[n] = b_k**2 * (hs**2).mean() / n
        gap = {n: abs(est[n] / ROOT_PI_2 - 1) for n in est}
        gap2 = abs(second[2000] / m2 - 1)
        good = gap[2000] <= 0.15 and gap[2000] < gap[500] and gap2 <= 0.20
        ok &= good
        parts.append(f"k={k}: b={b.value:.4f}+-{b.error:.4f}, E eta={eta.value:.5f}, "
                     f"first {est[500]:.4f}->{est[2000]:.4f} (gap {gap[500]:.2%}->{gap[2000]:.2%}), "
                     f"second {second[2000]:.4f} vs {m2:.4f} ({gap2:.2%})")
    return CriterionResult(6, "height moments", ok, "; ".join(parts))


def tail_fit(heights, n: int, min_survivors: int = 30):
    """Linear fit of ``log P(H > x)`` against ``x^2/n`` where enough samples survive."""
    hs = np.sort(np.asarray(heights))
    total = len(hs)
    xs, ys = [], []
    for x in np.unique(hs):
        surv = total - np.searchsorted(hs, x, side="right")
        if surv < min_survivors:
            break
        xs.append(x * x / n)
        ys.append(math.log(surv / total))
    fit = sps.linregress(xs, ys)
    return fit.slope, fit.rvalue**2, len(xs)


def c7_tail(ctx: VerifyContext, samples: int = 10_000) -> CriterionResult:
    hs = [r["H"] for r in ctx.batch(1, 2000, samples, stream=1)]
    slope, r2, points = tail_fit(hs, 2000)
    ok = slope < 0 and r2 >= 0.9
    return CriterionResult(7, "height tail shape", ok,
                           f"k=1, n=2000: slope {slope:.3f}, R^2 {r2:.4f} over {points} points")


def _vertex_census(ctx, k, n, networks, stream):
    total = Census(Counter(), 1)
    for r in ctx.batch(k, n, networks, stream, census=True):
        total = total.merge(Census(r["census"], 1, sum(r["census"].values())))
    return total


def _root_census(ctx, k, n, networks, stream):
    codes = Counter(r["root_code"] for r in ctx.batch(k, n, networks, stream))
    return Census(codes, 1, sum(codes.values()))


def _limit_censuses(ctx, k, draws):
    def make():
        lev = level(k)
        rng = np.random.default_rng([ctx.seed, 8, k])
        prng = spawn(rng)
        vs = VertexLimitSampler(lev.heads, lev.model, k)
        vertex = census_from_balls((vs.sample(1, prng=prng) for _ in range(draws)), 1)
        root = census_from_balls((sample_root_limit(lev.heads, lev.model, 1, rng)
                                  for _ in range(draws)), 1)
        return vertex, root
    return ctx.memo(("limits", k, draws), make)


def c8_local_limit(ctx: VerifyContext, draws: int = 100_000) -> CriterionResult:
    k = 1
    vertex_lim, root_lim = _limit_censuses(ctx, k, draws)
    tv_vertex = census_tv(_vertex_census(ctx, k, 2000, 200, stream=8), vertex_lim)
    tv_root = census_tv(_root_census(ctx, k, 2000, 10_000, stream=1), root_lim)
    # the finite-size effect is resolvable above sampling noise only for small n
    small = (25, 50)
    tv_v = [census_tv(_vertex_census(ctx, k, n, 4000, stream=80 + n), vertex_lim) for n in small]
    tv_r = [census_tv(_root_census(ctx, k, n, 20_000, stream=80 + n), root_lim) for n in small]
    ok = tv_vertex <= 0.05 and tv_root <= 0.05 and tv_v[1] < tv_v[0] and tv_r[1] < tv_r[0]
    return CriterionResult(
        8, "local limit census", ok,
        f"n=2000: vertex TV {tv_vertex:.4f}, root TV {tv_root:.4f}; "
        f"vertex TV n={small[0]}->{small[1]}: {tv_v[0]:.4f}->{tv_v[1]:.4f}, "
        f"root TV: {tv_r[0]:.4f}->{tv_r[1]:.4f}")


def c9_concentration(ctx: VerifyContext, networks: int = 50) -> CriterionResult:
    parts, ok = [], True
    for k in (1, 2):
        rows = ctx.batch(k, 2000, networks, stream=90 + k, census=True)
        freqs = [Census(r["census"], 1).frequencies() for r in rows]
        keys = set().union(*freqs)
        mat = np.array([[f.get(c, 0.0) for c in keys] for f in freqs])
        mean = mat.mean(axis=0)
        cv = mat.std(axis=0, ddof=1) / np.where(mean > 0, mean, 1)
        common = mean >= 0.01
        worst = float(cv[common].max())
        ok &= worst <= 0.1
        parts.append(f"k={k}: max CV {worst:.4f} over {int(common.sum())} classes")
    return CriterionResult(9, "quenched concentration", ok, "; ".join(parts))


def c10_invariants(ctx: VerifyContext, total: int = 10_000) -> CriterionResult:
    grid = [(k, n) for k in (1, 2, 3) for n in (1, 2, 3, 5, 10, 30, 100, 300)]
    per = -(-total // len(grid))
    violations: Counter = Counter()
    checked = 0
    for k, n in grid:
        lev = level(k)
        rng = np.random.default_rng([ctx.seed, 10, k, n])
        for _ in range(per):
            s = sample_network(lev.heads, lev.model, n, rng)
            net = s.network
            checked += 1
            if not validate_level_k(net, k):
                violations["level-k"] += 1
            hd, hu = directed_heights(net), undirected_heights(net)
            if any(u > d for u, d in zip(hu, hd)):
                violations["h_G<=h_N"] += 1
            if net.n_vertices > 4 * n * (k + 1):
                violations["|N|"] += 1
            if any(h.n_vertices > 2 * (h.d + k) for h in s.heads.values()):
                violations["head size"] += 1
            if len(s.tree.degrees) > 2 * n - 1:
                violations["tree size"] += 1
    bad = sum(violations.values())
    detail = f"{bad} violations in {checked} networks"
    if bad:
        detail += f" {dict(violations)}"
    return CriterionResult(10, "structural invariants", bad == 0, detail)


CRITERIA: dict[int, Callable[[VerifyContext], CriterionResult]] = {
    1: c1_exact_counts,
    2: c2_bijection,
    3: c3_criticality,
    4: c4_uniformity,
    5: c5_asymptotic_constant,
    6: c6_height_moments,
    7: c7_tail,
    8: c8_local_limit,
    9: c9_concentration,
    10: c10_invariants,
}

# criteria whose full-tolerance run takes at most a few minutes
QUICK = (1, 3, 4, 5, 10)


def run_criterion(number: int, ctx: VerifyContext) -> CriterionResult:
    t = time.time()
    res = CRITERIA[number](ctx)
    res.seconds = time.time() - t
    return res


def run_suite(numbers=None, ctx: VerifyContext | None = None,
              report: Callable[[str], None] = print) -> list[CriterionResult]:
    ctx = ctx or VerifyContext()
    out = []
    for number in numbers or sorted(CRITERIA):
        res = run_criterion(number, ctx)
        report(res.line())
        out.append(res)
    return out
