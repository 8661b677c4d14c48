"""Derived constants of a level: analytic ones from the offspring law, spine
functionals of heads, and the tree height constant ``b`` by Monte Carlo."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import mpmath
import numpy as np

from .heads import HeadFamily, HeadStructure, leaf_distances
from .offspring import OffspringModel, criticality_bound
from .sampler import Discrete, sample_conditioned_tree, spawn

__all__ = [
    "Estimate",
    "head_longest_paths",
    "spine_expectation",
    "spine_expectations",
    "estimate_b",
    "derive_constants",
    "D_EXACT",
    "exact_depth",
    "constants_json",
    "B_SIZES",
]

D_EXACT = 8
B_SIZES = (1000, 4000, 16000)
# cap on enumerated assignments per spine expectation; bounds D_EXACT at k=3
_EXACT_BUDGET = 400_000


@dataclass
class Estimate:
    value: float
    error: float
    method: str
    # "abs_error" for certified bounds, "stderr" for Monte Carlo
    error_kind: str = "abs_error"

    def to_dict(self) -> dict:
        return {"value": self.value, self.error_kind: self.error, "method": self.method}


def head_longest_paths(head: HeadStructure) -> list[int]:
    """Longest directed path lengths from the head root to leaves ``1..d``."""
    n = head.n_vertices
    children: list[list[int]] = [[] for _ in range(n)]
    indeg = [0] * n
    for s, d in head.edges:
        children[s].append(d)
        indeg[d] += 1
    best = [0] * n
    queue = deque(v for v in range(n) if indeg[v] == 0)
    while queue:
        v = queue.popleft()
        for w in children[v]:
            best[w] = max(best[w], best[v] + 1)
            indeg[w] -= 1
            if indeg[w] == 0:
                queue.append(w)
    s = head.n_surplus
    return [best[s + i] for i in range(1, head.d + 1)]


FUNCTIONALS: dict[str, Callable[[HeadStructure], list[int]]] = {
    "eta": lambda h: leaf_distances(h, directed=True),
    "eta_prime": lambda h: leaf_distances(h, directed=False),
    "eta_dprime": head_longest_paths,
}


def _assignment_count(family: HeadFamily, d: int) -> int:
    total = 1 if d == 2 else 0
    for t in family.templates:
        m = d - t.i
        if m < 0:
            continue
        slots = len(t.slot_edges)
        total += math.comb(m + slots - 1, slots - 1)
    return total


def exact_depth(family: HeadFamily, d_max: int = D_EXACT, budget: int = _EXACT_BUDGET) -> int:
    """Largest ``d <= d_max`` whose cumulative enumeration fits in ``budget``."""
    used = 0
    for d in range(2, d_max + 1):
        used += _assignment_count(family, d)
        if used > budget:
            return d - 1
    return d_max


def spine_expectations(family: HeadFamily, model: OffspringModel, fns, n_mc: int,
                       prng, d_exact: int | None = None) -> dict[str, Estimate]:
    """``E f`` where the head has ``xi_hat`` leaves and the leaf is uniform.

    Sizes up to ``d_exact`` are averaged exactly over all heads; larger sizes
    by Monte Carlo, weighted by their mass under ``xi_hat``. All functionals
    share one enumeration and one set of Monte-Carlo heads.
    """
    fns = list(fns)
    fs = [FUNCTIONALS[fn] for fn in fns]
    if d_exact is None:
        d_exact = exact_depth(family)
    pmf = model.pmf_mp
    hat = [i * p for i, p in enumerate(pmf)]
    total_hat = mpmath.fsum(hat)
    exact = [mpmath.mpf(0)] * len(fs)
    for d in range(2, min(d_exact, len(pmf) - 1) + 1):
        if hat[d] == 0:
            continue
        acc = [Fraction(0)] * len(fs)
        for w, head in family.orbit_weights(d):
            for j, f in enumerate(fs):
                vals = f(head)
                acc[j] += w * Fraction(sum(vals), len(vals))
        for j in range(len(fs)):
            mean_d = acc[j] / family.weight(d)
            exact[j] += hat[d] * mpmath.mpf(mean_d.numerator) / mean_d.denominator
    tail_hat = [float(h) if d > d_exact else 0.0 for d, h in enumerate(hat)]
    tail_mass = float(mpmath.fsum(hat[d_exact + 1:]))
    method = f"exact d<={d_exact}"
    mc_mean = [0.0] * len(fs)
    mc_se = [0.0] * len(fs)
    if tail_mass > 0 and n_mc > 0:
        draw = Discrete(tail_hat)
        vals = np.empty((n_mc, len(fs)))
        for i in range(n_mc):
            head = family.sample(draw(prng), prng)
            for j, f in enumerate(fs):
                ds = f(head)
                vals[i, j] = sum(ds) / len(ds)
        mc_mean = list(vals.mean(axis=0))
        mc_se = list(vals.std(axis=0, ddof=1) / math.sqrt(n_mc)) if n_mc > 1 \
            else [float("inf")] * len(fs)
        method += f" + monte carlo tail ({n_mc} heads)"
    total = float(total_hat)
    return {fn: Estimate((float(exact[j]) + tail_mass * mc_mean[j]) / total,
                         tail_mass * mc_se[j] / total, method, "stderr")
            for j, fn in enumerate(fns)}


def spine_expectation(family: HeadFamily, model: OffspringModel, fn: str,
                      n_mc: int, prng, d_exact: int | None = None) -> Estimate:
    return spine_expectations(family, model, [fn], n_mc, prng, d_exact)[fn]


def estimate_b(model: OffspringModel, reps: int, rng: np.random.Generator,
               sizes=B_SIZES) -> tuple[Estimate, dict]:
    """Tree height constant ``b`` from ``E H(tau_n) / sqrt(n) = sqrt(pi/2)/b + c/sqrt(n)``.

    Returns the estimate and the raw per-size means for reporting.
    """
    xs, ys, ws, raw = [], [], [], {}
    for n in sizes:
        hs = np.empty(reps)
        for j in range(reps):
            hs[j] = sample_conditioned_tree(model, n, rng).height()
        mean = hs.mean() / math.sqrt(n)
        se = hs.std(ddof=1) / math.sqrt(n) / math.sqrt(reps)
        raw[n] = {"mean_height_over_sqrt_n": mean, "stderr": se}
        xs.append(1 / math.sqrt(n))
        ys.append(mean)
        ws.append(1 / se**2)
    X = np.column_stack([np.ones(len(xs)), xs])
    W = np.diag(ws)
    cov = np.linalg.inv(X.T @ W @ X)
    beta = cov @ X.T @ W @ np.array(ys)
    intercept, se_int = float(beta[0]), float(math.sqrt(cov[0, 0]))
    root = math.sqrt(math.pi / 2)
    b = root / intercept
    se_b = root * se_int / intercept**2
    return Estimate(b, se_b, f"regression over n={list(sizes)}, {reps} trees each",
                    "stderr"), raw


def derive_constants(family: HeadFamily, model: OffspringModel, mc_budget: int = 2000,
                     rng: np.random.Generator | None = None,
                     b_sizes=B_SIZES) -> dict[str, Estimate]:
    """Every constant as an :class:`Estimate`.

    ``mc_budget`` is the number of Monte-Carlo heads per spine functional and
    of trees per size in the ``b`` regression.
    """
    if mc_budget < 2:
        raise ValueError("mc_budget must be at least 2 to report a standard error")
    rng = rng if rng is not None else np.random.default_rng(0)
    prng = spawn(rng)
    with mpmath.workdps(30):
        err_t0 = float(model.t0_error)
        out = {
            "t0": Estimate(float(model.t0), err_t0, "certified bisection"),
            "rho_k": Estimate(float(model.rho), float(model.tail) + err_t0,
                              "t0 - H(t0), closed form"),
            "p0": Estimate(float(model.p0), float(model.tail), "1 - H(t0)/t0"),
            "var_xi": Estimate(float(model.var_xi), float(model.tail), "t0 H''(t0)"),
            "a_k": Estimate(float(model.a), float(model.tail),
                            "sqrt(p0/(2 pi Var xi)) t0"),
            "criticality": Estimate(float(criticality_bound(model)), 0.0,
                                    "bound on |E xi - 1| from the series tail"),
        }
        kappa = mpmath.fsum(p * mpmath.mpf(float(family.surplus_mean(d)))
                            for d, p in enumerate(model.pmf_mp) if d >= 2 and p > 0)
    out["E_kappa"] = Estimate(float(kappa), float(model.tail) * 4 * (model.k + 1),
                              "exact surplus means over the truncated pmf")
    d_exact = exact_depth(family)
    spine = spine_expectations(family, model, ["eta", "eta_prime", "eta_dprime"],
                               mc_budget, prng, d_exact)
    out["E_eta"] = spine["eta"]
    out["E_eta_prime"] = spine["eta_prime"]
    out["E_eta_dprime"] = spine["eta_dprime"]
    b, raw = estimate_b(model, mc_budget, rng, b_sizes)
    out["b"] = b
    sigma = math.sqrt(float(model.var_xi))
    b_cf = sigma * math.sqrt(float(model.p0)) / 2
    out["b_closed_form_candidate"] = Estimate(b_cf, 0.0, "sigma sqrt(p0) / 2")
    out["b_disagreement_sigmas"] = Estimate(abs(b.value - b_cf) / b.error if b.error else 0.0,
                                            0.0, "flag if above 3")
    for src, key in (("E_eta", "b_k"), ("E_eta_prime", "b_k_prime"),
                     ("E_eta_dprime", "b_k_dprime")):
        e = out[src]
        val = b.value / e.value
        se = val * math.hypot(b.error / b.value, e.error / e.value)
        out[key] = Estimate(val, se, f"b / {src}", "stderr")
    model.constants = {k: v.to_dict() for k, v in out.items()}
    out["_b_raw"] = Estimate(0.0, 0.0, repr(raw))
    return out


def constants_json(consts: dict[str, Estimate]) -> dict:
    return {k: v.to_dict() for k, v in consts.items() if not k.startswith("_")}
