"""Truncated formal power series with exact rational coefficients."""
from __future__ import annotations

import json
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath

__all__ = [
    "Series",
    "series_add_mul",
    "series_compose",
    "series_derivative",
    "series_eval",
    "solve_network_series",
    "solve_network_series_fixpoint",
    "DEFAULT_ORDER",
]

DEFAULT_ORDER = 64


class Series:
    """Power series ``sum c_i z^i`` known exactly for ``0 <= i <= order``."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable, order: int | None = None):
        cs = [Fraction(c) for c in coeffs]
        if order is not None:
            if order < 0:
                raise ValueError("truncation order must be nonnegative")
            cs = (cs + [Fraction(0)] * (order + 1))[: order + 1]
        if not cs:
            raise ValueError("a series needs at least the constant coefficient")
        self.coeffs = tuple(cs)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @classmethod
    def zero(cls, order: int) -> "Series":
        return cls([], order)

    @classmethod
    def monomial(cls, power: int, order: int, coeff=1) -> "Series":
        cs = [Fraction(0)] * (order + 1)
        if power <= order:
            cs[power] = Fraction(coeff)
        return cls(cs)

    @classmethod
    def geometric(cls, order: int, power: int = 1) -> "Series":
        """Truncation of ``(1 - z)^(-power)``."""
        from math import comb

        return cls([comb(m + power - 1, power - 1) if power > 0 else int(m == 0)
                    for m in range(order + 1)])

    def __getitem__(self, i: int) -> Fraction:
        return self.coeffs[i]

    def __len__(self) -> int:
        return len(self.coeffs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Series):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __repr__(self) -> str:
        terms = [f"{c}*z^{i}" for i, c in enumerate(self.coeffs) if c]
        return f"Series({' + '.join(terms) or '0'}; O(z^{self.order + 1}))"

    def _check(self, other: "Series") -> None:
        if not isinstance(other, Series):
            raise TypeError("expected a Series")
        if other.order != self.order:
            raise ValueError(f"truncation orders differ: {self.order} vs {other.order}")

    def __add__(self, other: "Series") -> "Series":
        return series_add_mul(self, other, "add")

    def __sub__(self, other: "Series") -> "Series":
        self._check(other)
        return Series([a - b for a, b in zip(self.coeffs, other.coeffs)])

    def __neg__(self) -> "Series":
        return Series([-a for a in self.coeffs])

    def __mul__(self, other) -> "Series":
        if isinstance(other, Series):
            return series_add_mul(self, other, "mul")
        c = Fraction(other)
        return Series([c * a for a in self.coeffs])

    __rmul__ = __mul__

    def __pow__(self, e: int) -> "Series":
        if e < 0:
            raise ValueError("negative powers are not supported")
        out = Series.monomial(0, self.order)
        base = self
        while e:
            if e & 1:
                out = out * base
            e >>= 1
            if e:
                base = base * base
        return out

    def truncate(self, order: int) -> "Series":
        return Series(self.coeffs, order)

    def to_json(self) -> str:
        return json.dumps([f"{c.numerator}/{c.denominator}" for c in self.coeffs])

    @classmethod
    def from_json(cls, text: str) -> "Series":
        data = json.loads(text)
        if not isinstance(data, list) or not all(isinstance(x, str) for x in data):
            raise ValueError("expected a JSON array of 'p/q' strings")
        return cls(Fraction(x) for x in data)


def series_add_mul(a: Series, b: Series, op: str) -> Series:
    a._check(b)
    if op == "add":
        return Series([x + y for x, y in zip(a.coeffs, b.coeffs)])
    if op != "mul":
        raise ValueError(f"unknown operation {op!r}")
    m = a.order
    ac, bc = a.coeffs, b.coeffs
    nz_a = [i for i, c in enumerate(ac) if c]
    nz_b = [j for j, c in enumerate(bc) if c]
    out = [Fraction(0)] * (m + 1)
    for i in nz_a:
        ci = ac[i]
        for j in nz_b:
            if i + j > m:
                break
            out[i + j] += ci * bc[j]
    return Series(out)


def series_compose(outer: Series, inner: Series) -> Series:
    """``outer(inner(z))`` truncated at the common order (Horner scheme)."""
    outer._check(inner)
    if inner.coeffs[0] != 0:
        raise ValueError("inner series must have zero constant term")
    m = outer.order
    result = Series.monomial(0, m, outer.coeffs[m])
    for c in reversed(outer.coeffs[:m]):
        result = result * inner
        result = Series((result.coeffs[0] + c,) + result.coeffs[1:])
    return result


def series_derivative(a: Series) -> Series:
    if a.order == 0:
        return Series([0])
    return Series([i * a.coeffs[i] for i in range(1, a.order + 1)])


def series_eval(a: Series, t, tail_bound_radius) -> tuple[mpmath.mpf, mpmath.mpf]:
    """Partial sum at ``t`` plus a geometric bound on the omitted tail.

    The tail bound assumes ``|c_i| <= C r^{-i}`` for ``i > order`` with
    ``r = tail_bound_radius`` and ``C`` the largest ``|c_i| r^i`` over the upper
    half of the known coefficients.
    """
    t = mpmath.mpf(t)
    r = mpmath.mpf(tail_bound_radius)
    if not (0 <= t < r):
        raise ValueError("need 0 <= t < tail_bound_radius")
    m = a.order
    value = mpmath.mpf(0)
    for c in reversed(a.coeffs):
        value = value * t + (mpmath.mpf(c.numerator) / c.denominator)
    if t == 0:
        return value, mpmath.mpf(0)
    window = range(m // 2, m + 1)
    big_c = max(abs(mpmath.mpf(a.coeffs[i].numerator) / a.coeffs[i].denominator) * r**i
                for i in window)
    q = t / r
    return value, big_c * q ** (m + 1) / (1 - q)


def _powers_online(h: Sequence, order: int, linear=Fraction(1), zero=Fraction(0)):
    """Solve ``X = linear*z + sum_d h[d] X^d`` one coefficient at a time.

    ``pw[d][n]`` holds ``[z^n] X^d``; because ``h[0] = h[1] = 0`` the coefficient
    ``X[n]`` depends only on ``X[1..n-1]``, so each round fixes one more
    coefficient of the fixpoint. Works for any field type (``Fraction``, ``mpf``).
    """
    n_coef = [zero] * (order + 1)
    pw = [[zero] * (order + 1) for _ in range(order + 1)]
    if order >= 1:
        n_coef[1] = linear
        pw[1][1] = linear
    active = [d for d in range(2, min(order, len(h) - 1) + 1) if h[d]]
    need = range(2, (max(active) if active else 1) + 1)
    for n in range(2, order + 1):
        for d in need:
            if d > n:
                break
            prev = pw[d - 1]
            s = zero
            for a in range(d - 1, n):
                pa = prev[a]
                if pa:
                    s += pa * n_coef[n - a]
            pw[d][n] = s
        total = zero
        for d in active:
            if d > n:
                break
            total += h[d] * pw[d][n]
        n_coef[n] = total
        pw[1][n] = total
    return n_coef


def solve_network_series(h_series: Series) -> Series:
    """The unique ``N`` with ``N = z + H(N)``, ``N(0) = 0``, ``N'(0) = 1``."""
    if h_series.coeffs[0] != 0 or (h_series.order >= 1 and h_series.coeffs[1] != 0):
        raise ValueError("H must have vanishing z^0 and z^1 coefficients")
    coeffs = _powers_online(h_series.coeffs, h_series.order)
    return Series(coeffs)


def solve_network_series_fixpoint(h_series: Series) -> Series:
    """Plain fixpoint iteration ``N <- z + H(N)``; slow, kept as a cross-check."""
    m = h_series.order
    z = Series.monomial(1, m)
    current = z
    for _ in range(m + 1):
        nxt = z + series_compose(h_series, current)
        if nxt == current:
            return current
        current = nxt
    raise RuntimeError("fixpoint iteration did not stabilise")
