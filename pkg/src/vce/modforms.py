"""q-expansions of Eisenstein series and the Weierstrass family P_l(z, tau).

Conventions:

* ``E_k(q) = -B_k/k! + 2/(k-1)! * sum_{n>=1} sigma_{k-1}(n) q^n`` for even k,
  and ``E_k = 0`` for odd k.
* ``P_1(z) = 1/z - sum_{k>=2} E_k z^{k-1}`` and ``P_{l+1} = -(1/l) dP_l/dz``.

The nome ``q`` is a formal variable; ``tau`` only enters through q-expansions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .qseries import Q, RAT, TruncSeries

__all__ = [
    "bernoulli",
    "divisor_sigma",
    "partition_count",
    "EisensteinSeries",
    "WeierstrassP",
    "eisenstein",
    "weierstrass_p",
    "weierstrass_p_direct",
    "eta_quotient_character",
    "ETA_PREFACTOR_PER_UNIT_CHARGE",
]

# q^{-c/24}: the exponent per unit of central charge.
ETA_PREFACTOR_PER_UNIT_CHARGE = Q(-1, 24)


@lru_cache(maxsize=None)
def bernoulli(n: int) -> RAT:
    """Bernoulli number B_n with B_1 = -1/2 (from sum_{j<=n} C(n+1, j) B_j = 0)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return Q(1)
    s = sum(math.comb(n + 1, j) * bernoulli(j) for j in range(n))
    return -s / (n + 1)


@lru_cache(maxsize=None)
def divisor_sigma(k: int, n: int) -> int:
    if n <= 0:
        raise ValueError("n must be positive")
    total = 0
    d = 1
    while d * d <= n:
        if n % d == 0:
            total += d ** k
            e = n // d
            if e != d:
                total += e ** k
        d += 1
    return total


@lru_cache(maxsize=None)
def partition_count(n: int) -> int:
    """p(n) via Euler's pentagonal recurrence."""
    if n < 0:
        return 0
    if n == 0:
        return 1
    total = 0
    k = 1
    while True:
        g1 = k * (3 * k - 1) // 2
        if g1 > n:
            break
        sign = 1 if k % 2 else -1
        total += sign * partition_count(n - g1)
        g2 = k * (3 * k + 1) // 2
        if g2 <= n:
            total += sign * partition_count(n - g2)
        k += 1
    return total


@dataclass(frozen=True)
class EisensteinSeries:
    weight: int
    expansion: TruncSeries

    def constant_term(self) -> RAT:
        return self.expansion[0]


@dataclass(frozen=True)
class WeierstrassP:
    """P_l as a Laurent series in z whose coefficients are q-series."""

    index: int
    expansion: TruncSeries


@lru_cache(maxsize=None)
def _eisenstein_coeffs(k: int, q_order: int) -> tuple[RAT, ...]:
    if k % 2:
        return (Q(0),) * (q_order + 1)
    fact = math.factorial(k - 1)
    out = [-bernoulli(k) / (k * fact)]
    for n in range(1, q_order + 1):
        out.append(Q(2 * divisor_sigma(k - 1, n), fact))
    return tuple(out)


def eisenstein(k: int, q_order: int) -> EisensteinSeries:
    if k < 1:
        raise ValueError("weight must be positive")
    return EisensteinSeries(k, TruncSeries("q", 0, _eisenstein_coeffs(k, q_order), q_order))


def _p1(z_order: int, q_order: int) -> TruncSeries:
    coeffs = [TruncSeries.one("q", q_order)]
    # z^0 term: no k contributes (k - 1 = 0 needs k = 1, excluded).
    coeffs.append(TruncSeries.zero("q", q_order))
    for e in range(1, z_order + 1):
        coeffs.append(-eisenstein(e + 1, q_order).expansion)
    return TruncSeries("z", -1, coeffs, z_order)


@lru_cache(maxsize=None)
def _weierstrass(l: int, z_order: int, q_order: int) -> TruncSeries:
    if l == 1:
        return _p1(z_order, q_order)
    # P_l = -(1/(l-1)) d/dz P_{l-1}; differentiation costs one order.
    prev = _weierstrass(l - 1, z_order + 1, q_order)
    return prev.differentiate().scale(Q(-1, l - 1)).truncate(z_order)


def weierstrass_p(l: int, z_order: int, q_order: int) -> WeierstrassP:
    if l < 1:
        raise ValueError("index must be positive")
    return WeierstrassP(l, _weierstrass(l, z_order, q_order))


def weierstrass_p_direct(l: int, z_order: int, q_order: int) -> TruncSeries:
    """Closed form ``z^{-l} + (-1)^l sum_{k>=l} C(k-1, l-1) E_k z^{k-l}`` (independent of the recursion)."""
    coeffs = {-l: TruncSeries.one("q", q_order)}
    for e in range(-l + 1, z_order + 1):
        k = e + l
        if k < 2 or k < l:
            coeffs[e] = TruncSeries.zero("q", q_order)
            continue
        c = math.comb(k - 1, l - 1) * (-1) ** l
        coeffs[e] = eisenstein(k, q_order).expansion.scale(c)
    return TruncSeries("z", -l, [coeffs[e] for e in range(-l, z_order + 1)], z_order)


def eta_quotient_character(q_order: int) -> tuple[TruncSeries, RAT]:
    """``prod_{n=1..q_order} (1 - q^n)^{-1}`` and the prefactor exponent -1/24."""
    if q_order < 0:
        raise ValueError("q_order must be non-negative")
    result = TruncSeries.one("q", q_order)
    for n in range(1, q_order + 1):
        # (1 - q^n)^{-1} = sum_k q^{nk}
        geo = TruncSeries.from_dict("q", {n * k: 1 for k in range(q_order // n + 1)}, q_order, 0)
        result = result * geo
    return result, ETA_PREFACTOR_PER_UNIT_CHARGE
