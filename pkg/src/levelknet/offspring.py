"""The critical offspring law obtained by tilting the head series at ``t0``.

``P(xi = l) = h[l] t0^(l-1)`` for ``l >= 2`` and ``P(xi = 0) = 1 - H(t0)/t0``
where ``t0`` solves ``H'(t0) = 1``. Besides the series route, ``H`` and its
first two derivatives have a closed form in ``t`` (a rational function), which
is used for certified tail masses and as an independent check of ``t0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

import mpmath
import numpy as np

from .generators import GeneratorTable
from .series import Series, _powers_online, series_derivative, series_eval

__all__ = [
    "OffspringModel",
    "SizeBiasedLaw",
    "solve_t0",
    "build_offspring",
    "closed_form_h",
    "exact_count",
    "leaf_count_law",
    "count_via_leaf_law",
    "criticality_bound",
    "PMF_TAIL",
]

PMF_TAIL = 1e-15
_DPS = 60


def _mpf(c: Fraction):
    return mpmath.mpf(c.numerator) / c.denominator


def _jet_mul(a, b):
    return (a[0] * b[0], a[0] * b[1] + a[1] * b[0],
            a[0] * b[2] + 2 * a[1] * b[1] + a[2] * b[0])


def _jet_pow(a, e):
    out = (mpmath.mpf(1), mpmath.mpf(0), mpmath.mpf(0))
    for _ in range(e):
        out = _jet_mul(out, a)
    return out


def closed_form_h(table: GeneratorTable, t) -> tuple:
    """``(H(t), H'(t), H''(t))`` from the generator weights, for ``0 <= t < 1``.

    ``H = t^2/2 + sum c t^i S^f P^l - c_1 t`` with ``S = 1/(1-t)``,
    ``P = (S^2-1)/2``; the last term removes the one-leaf blow-ups.
    """
    t = mpmath.mpf(t)
    if not (0 <= t < 1):
        raise ValueError("closed form valid on [0, 1) only")
    s = 1 / (1 - t)
    z_jet = (t, mpmath.mpf(1), mpmath.mpf(0))
    s_jet = (s, s**2, 2 * s**3)
    p_jet = ((s**2 - 1) / 2, s**3, 3 * s**4)
    total = [t**2 / 2, t, mpmath.mpf(1)]
    linear = Fraction(0)
    for (i, f, l), c in table.weights.items():
        term = _jet_mul(_jet_mul(_jet_pow(z_jet, i), _jet_pow(s_jet, f)), _jet_pow(p_jet, l))
        cm = _mpf(c)
        for q in range(3):
            total[q] += cm * term[q]
        if i == 1 and l == 0:
            linear += c
    lin = _mpf(linear)
    total[0] -= lin * t
    total[1] -= lin
    return tuple(total)


def solve_t0(h_series: Series, tol=mpmath.mpf(10) ** -30, radius=1):
    """Bisection for ``H'(t0) = 1`` using certified partial sums.

    Returns ``(t0, error_bound)`` where ``error_bound`` bounds ``|t - t0|``.
    """
    with mpmath.workdps(_DPS):
        tol = mpmath.mpf(tol)
        deriv = series_derivative(h_series)

        def side(t):
            r = (t + radius) / 2
            v, e = series_eval(deriv, t, r)
            if v - e > 1:
                return 1
            if v + e < 1:
                return -1
            return 0

        lo, hi = mpmath.mpf(0), None
        probe = mpmath.mpf(1) / 2
        for _ in range(200):
            sd = side(probe)
            if sd > 0:
                hi = probe
                break
            lo = probe
            probe = (probe + radius) / 2
        if hi is None:
            raise ValueError("no bracket for H'(t) = 1 below the radius of convergence")
        while hi - lo > tol:
            mid = (lo + hi) / 2
            sd = side(mid)
            if sd > 0:
                hi = mid
            elif sd < 0:
                lo = mid
            else:
                # the truncation error no longer resolves the sign
                break
        return (lo + hi) / 2, (hi - lo) / 2


@dataclass
class SizeBiasedLaw:
    pmf_hat: np.ndarray

    def sample(self, rng: np.random.Generator, size=None):
        return rng.choice(len(self.pmf_hat), size=size, p=self.pmf_hat)


@dataclass
class OffspringModel:
    """Tilted law of ``xi`` and the constants derived from it."""

    k: int
    t0: mpmath.mpf
    t0_error: mpmath.mpf
    h_t0: mpmath.mpf
    pmf_mp: list
    tail: mpmath.mpf
    var_xi: mpmath.mpf
    h: tuple = ()
    constants: dict = field(default_factory=dict)

    @property
    def p0(self):
        return self.pmf_mp[0]

    @property
    def rho(self):
        return self.t0 - self.h_t0

    @property
    def a(self):
        return mpmath.sqrt(self.p0 / (2 * mpmath.pi * self.var_xi)) * self.t0

    @property
    def support(self) -> int:
        return len(self.pmf_mp) - 1

    @property
    def pmf(self) -> np.ndarray:
        """Truncated pmf as floats, renormalised to sum to one."""
        arr = np.array([float(p) for p in self.pmf_mp])
        return arr / arr.sum()

    def mean(self):
        return mpmath.fsum(i * p for i, p in enumerate(self.pmf_mp))

    def size_biased(self) -> SizeBiasedLaw:
        arr = np.array([i * float(p) for i, p in enumerate(self.pmf_mp)])
        return SizeBiasedLaw(arr / arr.sum())

    def summary(self) -> dict:
        return {
            "k": self.k,
            "t0": mpmath.nstr(self.t0, 35),
            "t0_error": mpmath.nstr(self.t0_error, 5),
            "rho_k": mpmath.nstr(self.rho, 25),
            "a_k": mpmath.nstr(self.a, 25),
            "p0": mpmath.nstr(self.p0, 25),
            "var_xi": mpmath.nstr(self.var_xi, 25),
            "pmf_tail": mpmath.nstr(self.tail, 5),
        }


def build_offspring(h_series: Series, t0, t0_error=0, table: GeneratorTable | None = None,
                    k: int = 0, tail_target: float = PMF_TAIL) -> OffspringModel:
    """Tilted pmf truncated where the remaining mass drops below ``tail_target``.

    With ``table`` the omitted mass is computed from the closed form of ``H``;
    otherwise from a geometric bound on the series tail.
    """
    with mpmath.workdps(_DPS):
        t0 = mpmath.mpf(t0)
        h = h_series.coeffs
        m = h_series.order
        hv = [_mpf(c) for c in h]
        if table is not None:
            h_t0, _, h2 = closed_form_h(table, t0)
        else:
            val, err = series_eval(h_series, t0, (1 + t0) / 2)
            h_t0 = val
            h2 = series_eval(series_derivative(series_derivative(h_series)), t0,
                             (1 + t0) / 2)[0]
        p0 = 1 - h_t0 / t0
        pmf = [p0, mpmath.mpf(0)]
        acc = mpmath.mpf(0)
        last = 1
        for ell in range(2, m + 1):
            p = hv[ell] * t0 ** (ell - 1)
            pmf.append(p)
            acc += p
            last = ell
            remaining = h_t0 / t0 - acc
            if ell >= 4 and remaining < tail_target:
                break
        tail = h_t0 / t0 - acc
        if tail > tail_target:
            raise ValueError("truncation order too small for the requested pmf tail")
        var_xi = t0 * h2
        return OffspringModel(k, t0, mpmath.mpf(t0_error), h_t0, pmf[: last + 1],
                              max(tail, mpmath.mpf(0)), var_xi, tuple(h))


def exact_count(n_series: Series, n: int) -> int:
    """``n! [z^n] N``: the number of level-k networks on ``n`` labelled leaves."""
    if n > n_series.order:
        raise ValueError(f"n={n} exceeds the truncation order {n_series.order}")
    if n < 1:
        raise ValueError("n must be positive")
    c = n_series.coeffs[n] * factorial(n)
    if c.denominator != 1:
        raise ArithmeticError("non-integral network count")
    return c.numerator


def leaf_count_law(model: OffspringModel, order: int) -> list:
    """``P(L(tau) = n)`` for ``n <= order`` via ``Z = p0 z + sum P(xi=l) Z^l``."""
    with mpmath.workdps(_DPS):
        q = [mpmath.mpf(0)] * (order + 1)
        for ell in range(2, min(order, len(model.h) - 1) + 1):
            q[ell] = _mpf(model.h[ell]) * model.t0 ** (ell - 1)
        return _powers_online(q, order, linear=model.p0, zero=mpmath.mpf(0))


def count_via_leaf_law(model: OffspringModel, law: list, n: int):
    """``n! P(L = n) t0 rho^-n`` as a high-precision real.

    Without the ``n!`` the product is the coefficient ``[z^n] N`` of the
    exponential generating series, not the labelled count.
    """
    with mpmath.workdps(_DPS):
        return mpmath.factorial(n) * law[n] * model.t0 * model.rho ** (-n)


def criticality_bound(model: OffspringModel):
    """Certified upper bound on ``|E xi - 1| = |H'(t0) - 1|``.

    Uses the full stored series plus its tail bound and the uncertainty of
    ``t0`` (through ``H''``), not the truncated pmf.
    """
    with mpmath.workdps(_DPS):
        series = Series([Fraction(c) for c in model.h])
        deriv = series_derivative(series)
        r = (1 + model.t0) / 2
        val, err = series_eval(deriv, model.t0, r)
        slope = series_eval(series_derivative(deriv), model.t0 + model.t0_error, r)[0]
        return abs(val - 1) + err + slope * model.t0_error
