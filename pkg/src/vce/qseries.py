"""Truncated formal Laurent series with exact rational coefficients.

A :class:`TruncSeries` in a variable ``t`` stores the coefficients of
``t**lowest .. t**order``; everything above ``order`` is unknown.  Coefficients
are exact rationals (``gmpy2.mpq``) or, for iterated expansions,
further ``TruncSeries`` in a deeper variable (for example a series in ``z``
whose coefficients are series in ``q``).
"""

from __future__ import annotations

from fractions import Fraction

from gmpy2 import mpq as Q
from typing import Callable, Iterable, Sequence, Union

__all__ = [
    "Q",
    "RAT",
    "is_rational",
    "SeriesError",
    "VariableMismatch",
    "NotAUnit",
    "DomainError",
    "TruncSeries",
    "rational",
    "rational_to_str",
    "rational_from_str",
    "exp_series",
    "log1p_series",
    "nested_constant",
    "first_mismatch",
]

RAT = type(Q(0))
Coeff = Union[RAT, "TruncSeries"]


def is_rational(x) -> bool:
    return isinstance(x, RAT)


class SeriesError(ValueError):
    pass


class VariableMismatch(SeriesError):
    pass


class NotAUnit(SeriesError):
    pass


class DomainError(SeriesError):
    pass


def rational(x) -> RAT:
    if isinstance(x, RAT):
        return x
    if isinstance(x, str):
        return rational_from_str(x)
    if isinstance(x, Fraction):
        return Q(x.numerator, x.denominator)
    return Q(x)


def rational_to_str(x) -> str:
    return f"{x.numerator}/{x.denominator}"


def rational_from_str(s: str) -> RAT:
    num, _, den = s.partition("/")
    return Q(int(num), int(den) if den else 1)


def _is_zero(c: Coeff) -> bool:
    """Exact zero test; a nested series is never treated as exactly zero."""
    return isinstance(c, RAT) and c == 0


def _zero_like(c: Coeff) -> Coeff:
    if isinstance(c, TruncSeries):
        return c.zero_like()
    return Q(0)


class TruncSeries:
    """Immutable truncated Laurent series ``sum c_k var**k, lowest <= k <= order``."""

    __slots__ = ("var", "lowest", "order", "coeffs")

    def __init__(self, var: str, lowest: int, coeffs: Sequence, order: int | None = None):
        coeffs = tuple(c if isinstance(c, TruncSeries) else rational(c) for c in coeffs)
        if order is None:
            order = lowest + len(coeffs) - 1
        if len(coeffs) != order - lowest + 1:
            if len(coeffs) > order - lowest + 1:
                coeffs = coeffs[: max(order - lowest + 1, 0)]
            else:
                pad = _zero_like(coeffs[0]) if coeffs else Q(0)
                coeffs = coeffs + (pad,) * (order - lowest + 1 - len(coeffs))
        if order < lowest:
            # Nothing is known; keep an empty coefficient list.
            lowest, coeffs = order + 1, ()
        object.__setattr__(self, "var", var)
        object.__setattr__(self, "lowest", lowest)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "coeffs", coeffs)

    def __setattr__(self, name, value):
        raise AttributeError("TruncSeries is immutable")

    # -- construction -------------------------------------------------

    @classmethod
    def zero(cls, var: str, order: int, lowest: int = 0) -> "TruncSeries":
        return cls(var, lowest, [Q(0)] * (order - lowest + 1), order)

    @classmethod
    def one(cls, var: str, order: int) -> "TruncSeries":
        return cls.monomial(var, 0, order)

    @classmethod
    def monomial(cls, var: str, exponent: int, order: int, coeff=1) -> "TruncSeries":
        if order < exponent:
            return cls(var, exponent, [], order)
        return cls(var, exponent, [rational(coeff)] + [Q(0)] * (order - exponent), order)

    @classmethod
    def from_dict(cls, var: str, terms: dict, order: int, lowest: int | None = None) -> "TruncSeries":
        if lowest is None:
            lowest = min([e for e in terms if e <= order], default=0)
        return cls(var, lowest, [rational(terms.get(e, 0)) for e in range(lowest, order + 1)], order)

    def zero_like(self) -> "TruncSeries":
        """An empty series (zero up to ``order``) in the same variable."""
        return TruncSeries(self.var, self.order + 1, [], self.order)

    # -- queries ------------------------------------------------------

    @property
    def is_nested(self) -> bool:
        return bool(self.coeffs) and isinstance(self.coeffs[0], TruncSeries)

    def __getitem__(self, k: int) -> Coeff:
        if k > self.order:
            raise SeriesError(f"coefficient of {self.var}^{k} is beyond truncation order {self.order}")
        if k < self.lowest:
            return self._zero_coeff()
        return self.coeffs[k - self.lowest]

    def _zero_coeff(self) -> Coeff:
        for c in self.coeffs:
            if isinstance(c, TruncSeries):
                return c.zero_like()
            return Q(0)
        return Q(0)

    def items(self) -> Iterable[tuple[int, Coeff]]:
        return zip(range(self.lowest, self.order + 1), self.coeffs)

    def valuation(self) -> int | None:
        """Exponent of the first coefficient that is not exactly zero."""
        for e, c in self.items():
            if not _is_zero(c):
                return e
        return None

    def is_zero(self) -> bool:
        return all(c.is_zero() if isinstance(c, TruncSeries) else c == 0 for c in self.coeffs)

    def depth(self) -> int:
        return 1 + (self.coeffs[0].depth() if self.is_nested else 0)

    def variables(self) -> list[str]:
        return [self.var] + (self.coeffs[0].variables() if self.is_nested else [])

    # -- normalisation --------------------------------------------------

    def normalized(self) -> "TruncSeries":
        """Drop leading exact-zero rational coefficients (tightens ``lowest``)."""
        if self.is_nested:
            return self
        i = 0
        while i < len(self.coeffs) and self.coeffs[i] == 0:
            i += 1
        if i == 0:
            return self
        if i == len(self.coeffs):
            return TruncSeries(self.var, self.order + 1, [], self.order)
        return TruncSeries(self.var, self.lowest + i, self.coeffs[i:], self.order)

    def truncate(self, order: int | Sequence[int]) -> "TruncSeries":
        """Truncate to ``order``; a sequence truncates nested levels too."""
        if isinstance(order, int):
            orders: list[int] = [order]
        else:
            orders = list(order)
        top, rest = orders[0], orders[1:]
        if top > self.order:
            raise SeriesError(f"cannot raise truncation order of {self.var} from {self.order} to {top}")
        coeffs = self.coeffs[: max(top - self.lowest + 1, 0)]
        if rest and self.is_nested:
            coeffs = [c.truncate(rest) for c in coeffs]
        return TruncSeries(self.var, min(self.lowest, top + 1), coeffs, top)

    def orders(self) -> list[int]:
        """Guaranteed order per nesting level (minimum over coefficients)."""
        out = [self.order]
        deeper: list[list[int]] = []
        for c in self.coeffs:
            if isinstance(c, TruncSeries):
                for level, o in enumerate(c.orders()):
                    if level == len(deeper):
                        deeper.append([])
                    deeper[level].append(o)
        return out + [min(col) for col in deeper]

    # -- arithmetic ---------------------------------------------------

    def _check(self, other: "TruncSeries") -> None:
        if not isinstance(other, TruncSeries):
            raise TypeError(f"expected TruncSeries, got {type(other).__name__}")
        if other.var != self.var:
            raise VariableMismatch(f"cannot combine series in {self.var!r} and {other.var!r}")

    @classmethod
    def _raw(cls, var: str, lowest: int, coeffs: list, order: int) -> "TruncSeries":
        # Trusted constructor: coefficients are already valid and sized.
        out = object.__new__(cls)
        for name, value in (("var", var), ("lowest", lowest), ("order", order), ("coeffs", tuple(coeffs))):
            object.__setattr__(out, name, value)
        return out

    def __add__(self, other):
        if not isinstance(other, TruncSeries):
            if isinstance(other, (int, RAT, Fraction)) and not self.is_nested:
                return self + TruncSeries.monomial(self.var, 0, self.order, other) if other else self
            return NotImplemented
        self._check(other)
        order = min(self.order, other.order)
        lowest = min(self.lowest, other.lowest)
        if order < lowest:
            return TruncSeries(self.var, lowest, [], order)
        coeffs = []
        for e in range(lowest, order + 1):
            a_in = self.lowest <= e
            b_in = other.lowest <= e
            if a_in and b_in:
                coeffs.append(self.coeffs[e - self.lowest] + other.coeffs[e - other.lowest])
            elif a_in:
                coeffs.append(self.coeffs[e - self.lowest])
            else:
                coeffs.append(other.coeffs[e - other.lowest])
        return TruncSeries._raw(self.var, lowest, coeffs, order)

    __radd__ = __add__

    def __neg__(self):
        return TruncSeries(self.var, self.lowest, [-c for c in self.coeffs], self.order)

    def __sub__(self, other):
        if not isinstance(other, TruncSeries):
            return self + (-rational(other))
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, RAT, Fraction)):
            return self.scale(rational(other))
        if not isinstance(other, TruncSeries):
            return NotImplemented
        self._check(other)
        order = min(self.order + other.lowest, other.order + self.lowest)
        lowest = self.lowest + other.lowest
        if order < lowest:
            return TruncSeries(self.var, lowest, [], order)
        n = order - lowest + 1
        a, b = self.coeffs, other.coeffs
        nested = self.is_nested or other.is_nested
        acc: list = [None] * n
        if nested:
            b_live = [(j, bj) for j, bj in enumerate(b) if not (isinstance(bj, TruncSeries) and not bj.coeffs)]
        else:
            b_live = [(j, bj) for j, bj in enumerate(b) if bj != 0]
        for i, ai in enumerate(a):
            if i >= n:
                break
            if nested:
                if isinstance(ai, TruncSeries) and not ai.coeffs:
                    continue
            elif ai == 0:
                continue
            lim = n - i
            for j, bj in b_live:
                if j >= lim:
                    break
                term = ai * bj
                k = i + j
                acc[k] = term if acc[k] is None else acc[k] + term
        if nested:
            zero = None
            for k in range(n):
                if acc[k] is None:
                    if zero is None:
                        zero = (self if self.is_nested else other)._zero_coeff()
                    acc[k] = zero
        else:
            acc = [Q(0) if c is None else c for c in acc]
        return TruncSeries._raw(self.var, lowest, acc, order)

    def __rmul__(self, other):
        if isinstance(other, (int, RAT, Fraction)):
            return self.scale(rational(other))
        return NotImplemented

    def scale(self, c) -> "TruncSeries":
        """Multiply every coefficient by ``c`` (a rational or a coefficient-ring element)."""
        if isinstance(c, (int, RAT, Fraction)):
            c = rational(c)
            if c == 1:
                return self
            return TruncSeries._raw(self.var, self.lowest, [x * c for x in self.coeffs], self.order)
        if isinstance(c, TruncSeries) and c.var == self.var:
            raise VariableMismatch("scale() expects a coefficient, not a series in the same variable")
        return TruncSeries(self.var, self.lowest, [_coeff_mul(x, c) for x in self.coeffs], self.order)

    def tensor(self, other: "TruncSeries") -> "TruncSeries":
        """Product with a series in independent variables nested below this one.

        Every rational leaf ``f`` is replaced by ``f * other``; the result has
        this series' variables outermost followed by ``other``'s.
        """
        def leaf(c):
            if isinstance(c, TruncSeries):
                return c.tensor(other)
            return other.scale(c)
        return TruncSeries(self.var, self.lowest, [leaf(c) for c in self.coeffs], self.order)

    def map_coeffs(self, fn: Callable[[Coeff], Coeff]) -> "TruncSeries":
        return TruncSeries(self.var, self.lowest, [fn(c) for c in self.coeffs], self.order)

    def map_leaves(self, fn: Callable[[RAT], Coeff]) -> "TruncSeries":
        return self.map_coeffs(lambda c: c.map_leaves(fn) if isinstance(c, TruncSeries) else fn(c))

    def shift(self, k: int) -> "TruncSeries":
        """Multiply by ``var**k``."""
        return TruncSeries(self.var, self.lowest + k, self.coeffs, self.order + k)

    def __pow__(self, k: int) -> "TruncSeries":
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.invert() ** (-k)
        result = None
        base = self
        while k:
            if k & 1:
                result = base if result is None else result * base
            k >>= 1
            if k:
                base = base * base
        if result is None:
            if self.is_nested:
                raise SeriesError("zeroth power of a nested series needs an explicit constant")
            v = self.valuation()
            return TruncSeries.one(self.var, self.order - (v if v is not None else self.order))
        return result

    def invert(self) -> "TruncSeries":
        """Multiplicative inverse; the leading stored coefficient must be a nonzero rational."""
        if self.is_nested:
            raise SeriesError("inversion is only supported for rational coefficients")
        a = self.normalized()
        if not a.coeffs or a.coeffs[0] == 0:
            raise NotAUnit(f"series in {self.var} has zero leading coefficient")
        rel = a.order - a.lowest
        c0 = a.coeffs[0]
        inv0 = 1 / c0
        b = [inv0]
        for k in range(1, rel + 1):
            s = Q(0)
            for i in range(1, k + 1):
                ai = a.coeffs[i]
                if ai:
                    s += ai * b[k - i]
            b.append(-s * inv0)
        return TruncSeries(self.var, -a.lowest, b, -a.lowest + rel)

    def __truediv__(self, other):
        if isinstance(other, (int, RAT, Fraction)):
            return self.scale(1 / rational(other))
        if isinstance(other, TruncSeries):
            return self * other.invert()
        return NotImplemented

    def differentiate(self) -> "TruncSeries":
        """Termwise d/dvar; the truncation order drops by one."""
        lowest, order = self.lowest - 1, self.order - 1
        if order < lowest:
            return TruncSeries(self.var, order + 1, [], order)
        zero = self._zero_coeff()
        out = [zero] * (order - lowest + 1)
        for e, c in self.items():
            if e != 0:
                out[e - 1 - lowest] = c * e if isinstance(c, RAT) else c.scale(e)
        return TruncSeries(self.var, lowest, out, order).normalized()

    def substitute_scale(self, factor) -> "TruncSeries":
        """``f(factor * var)`` for a rational ``factor``."""
        factor = rational(factor)
        return TruncSeries(
            self.var, self.lowest,
            [_coeff_mul(c, factor ** e) for e, c in self.items()], self.order,
        )

    # -- comparison ---------------------------------------------------

    def equal_to_order(self, other: "TruncSeries") -> bool:
        return first_mismatch(self, other) is None

    def __eq__(self, other):
        if not isinstance(other, TruncSeries):
            return NotImplemented
        return (
            self.var == other.var
            and self.order == other.order
            and first_mismatch(self, other, check_orders=True) is None
        )

    __hash__ = None

    def __repr__(self):
        return f"TruncSeries({self.var!r}, {self.format()})"

    def format(self, decimal: bool = False, limit: int | None = None) -> str:
        parts = []
        for e, c in self.items():
            if isinstance(c, TruncSeries):
                if c.is_zero():
                    continue
                cs = "(" + c.format(decimal) + ")"
            else:
                if c == 0:
                    continue
                cs = f"{float(c):.6g}" if decimal else str(c)
            mono = "" if e == 0 else (self.var if e == 1 else f"{self.var}^{e}")
            parts.append(cs if not mono else (mono if cs == "1" else f"{cs}*{mono}"))
            if limit is not None and len(parts) >= limit:
                break
        body = " + ".join(parts) if parts else "0"
        return f"{body} + O({self.var}^{self.order + 1})"

    # -- serialisation ------------------------------------------------

    def to_json(self) -> dict:
        return {
            "var": self.var,
            "lowest": self.lowest,
            "order": self.order,
            "coeffs": [c.to_json() if isinstance(c, TruncSeries) else rational_to_str(c) for c in self.coeffs],
        }

    @classmethod
    def from_json(cls, data: dict) -> "TruncSeries":
        coeffs = [cls.from_json(c) if isinstance(c, dict) else rational_from_str(c) for c in data["coeffs"]]
        return cls(data["var"], int(data["lowest"]), coeffs, int(data["order"]))


def _coeff_mul(x: Coeff, c) -> Coeff:
    if isinstance(x, TruncSeries):
        if isinstance(c, TruncSeries) and c.var == x.var:
            return x * c
        return x.scale(c)
    if isinstance(c, TruncSeries):
        return c.scale(x)
    return x * c


def first_mismatch(a: Coeff, b: Coeff, check_orders: bool = False, path: tuple = ()) -> tuple | None:
    """Address ``((var, exponent), ...)`` of the first differing coefficient, or None.

    Comparison runs up to the shared truncation order at every level.
    """
    if not isinstance(a, TruncSeries) or not isinstance(b, TruncSeries):
        if isinstance(a, TruncSeries) or isinstance(b, TruncSeries):
            return path + (("<type>", None),)
        return None if a == b else path
    if a.var != b.var:
        return path + ((a.var, None),)
    if check_orders and a.order != b.order:
        return path + ((a.var, min(a.order, b.order) + 1),)
    top = min(a.order, b.order)
    for e in range(min(a.lowest, b.lowest), top + 1):
        ca = a[e]
        cb = b[e]
        if isinstance(ca, TruncSeries) and isinstance(cb, TruncSeries):
            m = first_mismatch(ca, cb, check_orders, path + ((a.var, e),))
            if m is not None:
                return m
        elif isinstance(ca, TruncSeries) or isinstance(cb, TruncSeries):
            nz = ca if isinstance(ca, TruncSeries) else cb
            other = cb if nz is ca else ca
            if other != 0 or not nz.is_zero():
                return path + ((a.var, e),)
        elif ca != cb:
            return path + ((a.var, e),)
    return None


def _require_power_series_without_constant(a: TruncSeries) -> None:
    if a.is_nested:
        raise DomainError("exp/log are only defined for rational coefficients")
    for e, c in a.items():
        if e <= 0 and c != 0:
            raise DomainError("argument must have zero constant term and no negative exponents")


def exp_series(a: TruncSeries) -> TruncSeries:
    """``exp(a)`` for a power series without constant term."""
    _require_power_series_without_constant(a)
    n = a.order
    if n < 0:
        return TruncSeries(a.var, 0, [], n)
    ac = [a[k] if k >= a.lowest else Q(0) for k in range(0, n + 1)]
    # b' = a' b  =>  k b_k = sum_{i=1..k} i a_i b_{k-i}
    b = [Q(1)]
    for k in range(1, n + 1):
        s = Q(0)
        for i in range(1, k + 1):
            if ac[i]:
                s += i * ac[i] * b[k - i]
        b.append(s / k)
    return TruncSeries(a.var, 0, b, n)


def log1p_series(a: TruncSeries) -> TruncSeries:
    """``log(1 + a)`` for a power series without constant term."""
    _require_power_series_without_constant(a)
    n = a.order
    if n < 0:
        return TruncSeries(a.var, 0, [], n)
    ac = [a[k] if k >= a.lowest else Q(0) for k in range(0, n + 1)]
    # (1 + a) c' = a'  =>  k c_k = k a_k - sum_{i=1..k-1} (k-i) c_{k-i} a_i
    c = [Q(0)]
    for k in range(1, n + 1):
        s = k * ac[k]
        for i in range(1, k):
            if ac[i]:
                s -= (k - i) * c[k - i] * ac[i]
        c.append(s / k)
    return TruncSeries(a.var, 0, c, n)


def nested_constant(value: Coeff, variables: Sequence[str], orders: Sequence[int]) -> Coeff:
    """``value`` viewed as a series constant in each of ``variables`` (outermost first)."""
    if not variables:
        return value
    inner = nested_constant(value, variables[1:], orders[1:])
    return TruncSeries(variables[0], 0, [inner], orders[0]) if orders[0] >= 0 else \
        TruncSeries(variables[0], 0, [], orders[0])
