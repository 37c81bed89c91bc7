"""Rank-one Heisenberg vertex operator algebra on partition-indexed Fock states.

A basis state ``a(-l1) ... a(-lk) 1`` is stored as the partition
``(l1, ..., lk)`` (weakly decreasing); vectors are dicts ``partition -> RAT``.
The Heisenberg relation is ``[a(m), a(n)] = m * delta_{m+n,0}``, the conformal
vector is ``omega = 1/2 a(-1)^2 1`` (central charge 1), and the bilinear form is
the Fock form with ``a(n)^dagger = a(-n)``, so ``<a(-1)1, a(-1)1> = 1``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Dict, Iterable, Mapping, Protocol, Sequence

from .qseries import Q, RAT, TruncSeries, exp_series, rational_to_str

__all__ = [
    "Partition",
    "Vector",
    "CutoffError",
    "DegenerateFormError",
    "InvalidState",
    "VoaState",
    "GradedBasis",
    "ModeMatrix",
    "BilinearFormTable",
    "VertexAlgebra",
    "Heisenberg",
    "HEISENBERG",
    "parse_partition",
    "enumerate_basis",
    "apply_heisenberg_mode",
    "vertex_mode",
    "virasoro_mode",
    "virasoro_apply",
    "shift_mode",
    "weight_basis",
    "matrix_of",
    "mode_matrix",
    "square_bracket_coefficient",
    "square_bracket_mode",
    "dual_state",
    "dual_basis",
    "gram_matrix",
    "bilinear_form",
    "vector_weights",
    "add_into",
    "exact_inverse",
]

Partition = tuple
Vector = Dict[tuple, RAT]


class CutoffError(ValueError):
    """A result would leave the weight-truncated space."""


class DegenerateFormError(ArithmeticError):
    pass


class InvalidState(ValueError):
    pass


@dataclass(frozen=True, order=True)
class VoaState:
    partition: tuple

    def __post_init__(self):
        p = tuple(self.partition)
        if any((not isinstance(x, int)) or x < 1 for x in p):
            raise InvalidState("invalid partition part")
        object.__setattr__(self, "partition", tuple(sorted(p, reverse=True)))

    @property
    def weight(self) -> int:
        return sum(self.partition)

    @classmethod
    def parse(cls, text: str) -> "VoaState":
        return cls(parse_partition(text))

    def vector(self) -> Vector:
        return {self.partition: Q(1)}

    def __str__(self):
        return "[" + ",".join(map(str, self.partition)) + "]"


def parse_partition(text: str) -> tuple:
    """Parse a literal such as ``"[2,1,1]"``; ``"[]"`` is the vacuum."""
    try:
        parts = json.loads(text)
    except (json.JSONDecodeError, TypeError) as exc:
        raise InvalidState(f"cannot parse state {text!r}") from exc
    if not isinstance(parts, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in parts):
        raise InvalidState(f"cannot parse state {text!r}")
    if any(x < 1 for x in parts):
        raise InvalidState("invalid partition part")
    return tuple(sorted(parts, reverse=True))


# -- vectors ---------------------------------------------------------------


def add_into(acc: Vector, vec: Mapping[tuple, RAT], scale=1) -> Vector:
    for k, c in vec.items():
        v = acc.get(k, 0) + c * scale
        if v:
            acc[k] = v
        else:
            acc.pop(k, None)
    return acc


def vector_weights(vec: Mapping[tuple, RAT]) -> set[int]:
    return {sum(p) for p in vec}


def _as_vector(v) -> Vector:
    if isinstance(v, VoaState):
        return v.vector()
    if isinstance(v, tuple):
        return {v: Q(1)}
    return dict(v)


# -- basis -------------------------------------------------------------------


@lru_cache(maxsize=None)
def _partitions(n: int, largest: int | None = None) -> tuple:
    if largest is None:
        largest = n
    if n == 0:
        return ((),)
    out = []
    for first in range(min(n, largest), 0, -1):
        for rest in _partitions(n - first, first):
            out.append((first,) + rest)
    return tuple(out)


def weight_basis(n: int) -> tuple:
    """Partitions of ``n`` in lexicographically decreasing order."""
    return _partitions(n)


@dataclass(frozen=True)
class GradedBasis:
    cutoff: int
    by_weight: tuple

    def dims(self) -> list[int]:
        return [len(b) for b in self.by_weight]

    def __getitem__(self, weight: int) -> tuple:
        return self.by_weight[weight]

    def states(self) -> Iterable[tuple]:
        for b in self.by_weight:
            yield from b

    def to_json(self) -> dict:
        return {
            "cutoff": self.cutoff,
            "weights": [[list(p) for p in b] for b in self.by_weight],
        }


def enumerate_basis(N: int) -> GradedBasis:
    if N < 0:
        raise ValueError("cutoff must be non-negative")
    return GradedBasis(N, tuple(weight_basis(n) for n in range(N + 1)))


# -- modes ---------------------------------------------------------------------


def _check_cutoff(p: tuple, N: int | None) -> None:
    if N is not None and sum(p) > N:
        raise CutoffError(f"state of weight {sum(p)} exceeds cutoff {N}")


@lru_cache(maxsize=None)
def _heis(m: int, p: tuple) -> tuple:
    if m < 0:
        return ((tuple(sorted(p + (-m,), reverse=True)), 1),)
    if m == 0:
        return ()
    count = p.count(m)
    if not count:
        return ()
    i = p.index(m)
    return ((p[:i] + p[i + 1:], m * count),)


def apply_heisenberg_mode(m: int, s, N: int | None = None) -> Vector:
    """``a(m)`` applied to a state or vector."""
    out: Vector = {}
    for p, c in _as_vector(s).items():
        for r, k in _heis(m, p):
            _check_cutoff(r, N)
            add_into(out, {r: Q(k)}, c)
    return out


def _gbinom(x: int, r: int) -> int:
    """Generalised binomial C(x, r) for integer x and r >= 0."""
    if r < 0:
        return 0
    if x >= 0:
        return math.comb(x, r)
    return (-1) ** r * math.comb(-x + r - 1, r)


def _compositions(total: int, parts: int):
    """Tuples of ``parts`` positive integers summing to ``total``."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@lru_cache(maxsize=None)
def _vertex_mode_basis(lam: tuple, n: int, p: tuple) -> tuple:
    """``v(n) p`` for ``v = a(-lam_1)...a(-lam_k) 1`` as a tuple of (partition, int).

    Uses ``Y(v, x) = :prod_i d^{(lam_i - 1)} a(x):`` so that
    ``v(n) = sum C(-m_i-1, lam_i-1) :a(m_1)...a(m_k):`` over ``sum m_i = n + 1 - wt v``.
    """
    if not lam:
        return ((p, 1),) if n == -1 else ()
    k = len(lam)
    target = n + 1 - sum(lam)
    parts_present = sorted(set(p))
    out: dict = {}
    # choose which positions annihilate (m > 0) and with which part value
    choices = [[0] + parts_present for _ in range(k)]
    for ann in product(*choices):
        ann_sum = sum(ann)
        n_create = ann.count(0)
        create_total = ann_sum - target  # sum of |m| over creation positions
        if n_create == 0:
            if create_total != 0:
                continue
            comps: Iterable[tuple] = [()]
        else:
            if create_total < n_create:
                continue
            comps = _compositions(create_total, n_create)
        # apply annihilators first (normal ordering puts them on the right)
        state = p
        coef = 1
        for i, m in enumerate(ann):
            if m:
                coef *= _gbinom(-m - 1, lam[i] - 1)
                res = _heis(m, state)
                if not res:
                    coef = 0
                    break
                state, c = res[0]
                coef *= c
        if not coef:
            continue
        create_pos = [i for i, m in enumerate(ann) if not m]
        for comp in comps:
            c2 = coef
            for i, a in zip(create_pos, comp):
                c2 *= _gbinom(a - 1, lam[i] - 1)
                if not c2:
                    break
            if not c2:
                continue
            r = tuple(sorted(state + comp, reverse=True))
            out[r] = out.get(r, 0) + c2
    return tuple((r, c) for r, c in out.items() if c)


def vertex_mode(v, n: int, w, N: int | None = None) -> Vector:
    """The mode ``v(n)`` of ``Y(v, x) = sum v(n) x^{-n-1}`` applied to ``w``."""
    out: Vector = {}
    for lam, a in _as_vector(v).items():
        for p, b in _as_vector(w).items():
            for r, c in _vertex_mode_basis(lam, n, p):
                _check_cutoff(r, N)
                add_into(out, {r: Q(c)}, a * b)
    return out


def shift_mode(v_partition: tuple, shift: int, w: Mapping[tuple, RAT]) -> Vector:
    """The mode of ``v`` raising weight by ``shift``: ``v(wt v - 1 - shift)``."""
    n = sum(v_partition) - 1 - shift
    out: Vector = {}
    for p, b in w.items():
        for r, c in _vertex_mode_basis(v_partition, n, p):
            add_into(out, {r: Q(c)}, b)
    return out


_OMEGA2 = (1, 1)  # 2 * omega


def virasoro_apply(n: int, w, N: int | None = None) -> Vector:
    """``L(n) w`` with ``L(n) = omega(n + 1)``."""
    out = vertex_mode({_OMEGA2: Q(1)}, n + 1, w, N)
    return {k: c / 2 for k, c in out.items()}


@dataclass(frozen=True)
class ModeMatrix:
    """Dense matrix of an operator from ``V_(source)`` to ``V_(target)``."""

    source_weight: int
    target_weight: int
    entries: tuple  # rows indexed by target basis, columns by source basis

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.entries), len(self.entries[0]) if self.entries else 0)

    def __matmul__(self, other: "ModeMatrix") -> "ModeMatrix":
        if other.target_weight != self.source_weight:
            raise ValueError("weight mismatch in composition")
        rows = []
        inner = len(self.entries[0]) if self.entries else 0
        for row in self.entries:
            rows.append(tuple(
                sum((row[k] * other.entries[k][j] for k in range(inner)), Q(0))
                for j in range(other.shape[1])
            ))
        return ModeMatrix(other.source_weight, self.target_weight, tuple(rows))

    def __sub__(self, other: "ModeMatrix") -> "ModeMatrix":
        return ModeMatrix(self.source_weight, self.target_weight, tuple(
            tuple(a - b for a, b in zip(r1, r2)) for r1, r2 in zip(self.entries, other.entries)
        ))

    def __add__(self, other: "ModeMatrix") -> "ModeMatrix":
        return ModeMatrix(self.source_weight, self.target_weight, tuple(
            tuple(a + b for a, b in zip(r1, r2)) for r1, r2 in zip(self.entries, other.entries)
        ))

    def scale(self, c) -> "ModeMatrix":
        return ModeMatrix(self.source_weight, self.target_weight, tuple(
            tuple(a * c for a in r) for r in self.entries
        ))

    def trace(self) -> RAT:
        return sum((self.entries[i][i] for i in range(len(self.entries))), Q(0))

    def to_json(self) -> dict:
        return {
            "source_weight": self.source_weight,
            "target_weight": self.target_weight,
            "entries": [[rational_to_str(x) for x in r] for r in self.entries],
        }


def matrix_of(apply, source_weight: int, target_weight: int) -> ModeMatrix:
    src = weight_basis(source_weight) if source_weight >= 0 else ()
    tgt = weight_basis(target_weight) if target_weight >= 0 else ()
    index = {p: i for i, p in enumerate(tgt)}
    cols = []
    for p in src:
        image = apply({p: Q(1)})
        col = [Q(0)] * len(tgt)
        for r, c in image.items():
            if r not in index:
                raise ValueError(f"image {r} outside weight {target_weight}")
            col[index[r]] = c
        cols.append(col)
    rows = tuple(tuple(cols[j][i] for j in range(len(src))) for i in range(len(tgt)))
    return ModeMatrix(source_weight, target_weight, rows)


def mode_matrix(v, n: int, source_weight: int) -> ModeMatrix:
    """``v(n)`` restricted to ``V_(source)``; lands in ``V_(source + wt v - n - 1)``."""
    vec = _as_vector(v)
    weights = vector_weights(vec)
    if len(weights) != 1:
        raise ValueError("mode matrices need a homogeneous state")
    target = source_weight + weights.pop() - n - 1
    return matrix_of(lambda w: vertex_mode(vec, n, w), source_weight, target)


def virasoro_mode(n: int, N: int) -> dict[int, ModeMatrix]:
    """``L(n)`` as one matrix per source weight ``m`` with ``0 <= m, m - n <= N``."""
    out = {}
    for m in range(0, N + 1):
        if 0 <= m - n <= N:
            out[m] = matrix_of(lambda w: virasoro_apply(n, w), m, m - n)
    return out


# -- bilinear form -------------------------------------------------------------


def bilinear_form(u, w) -> RAT:
    """Fock form with ``a(n)^dagger = a(-n)``: ``<a(-l)1, w> = <1, a(l_k)...a(l_1) w>``."""
    total = Q(0)
    uv, wv = _as_vector(u), _as_vector(w)
    for p, a in uv.items():
        vec = dict(wv)
        for part in p:
            vec = apply_heisenberg_mode(part, vec)
            if not vec:
                break
        total += a * vec.get((), 0)
    return total


def gram_matrix(basis: Sequence) -> list[list[RAT]]:
    return [[bilinear_form(u, w) for w in basis] for u in basis]


def exact_inverse(m: Sequence[Sequence[RAT]]) -> list[list[RAT]]:
    """Gauss-Jordan inverse over the rationals."""
    n = len(m)
    a = [list(map(RAT, row)) + [Q(int(i == j)) for j in range(n)] for i, row in enumerate(m)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            raise DegenerateFormError("singular Gram matrix")
        a[col], a[pivot] = a[pivot], a[col]
        inv = 1 / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [row[n:] for row in a]


@dataclass(frozen=True)
class BilinearFormTable:
    cutoff: int
    gram: tuple
    inverse: tuple

    @classmethod
    def build(cls, N: int) -> "BilinearFormTable":
        grams, invs = [], []
        for n in range(N + 1):
            g = gram_matrix(weight_basis(n))
            grams.append(tuple(map(tuple, g)))
            invs.append(tuple(map(tuple, exact_inverse(g))))
        return cls(N, tuple(grams), tuple(invs))


def dual_basis(basis: Sequence) -> list[Vector]:
    """Dual basis with respect to the bilinear form: ``<dual_i, basis_j> = delta_ij``."""
    vecs = [_as_vector(b) for b in basis]
    ginv = exact_inverse(gram_matrix(vecs))
    out = []
    for i in range(len(vecs)):
        acc: Vector = {}
        for j, w in enumerate(vecs):
            if ginv[j][i]:
                add_into(acc, w, ginv[j][i])
        out.append(acc)
    return out


def dual_state(u, N: int, basis: Sequence | None = None) -> Vector:
    """The dual of ``u`` relative to ``basis`` (default: the partition basis of its weight)."""
    vec = _as_vector(u)
    weights = vector_weights(vec)
    if len(weights) != 1:
        raise ValueError("dual_state needs a homogeneous state")
    wt = weights.pop()
    if wt > N:
        raise CutoffError(f"state of weight {wt} exceeds cutoff {N}")
    if basis is None:
        basis = [{p: Q(1)} for p in weight_basis(wt)]
    else:
        basis = [_as_vector(b) for b in basis]
    for i, b in enumerate(basis):
        if b == vec:
            return dual_basis(basis)[i]
    raise ValueError("state is not a member of the given basis")


# -- square-bracket modes ------------------------------------------------------


@lru_cache(maxsize=None)
def square_bracket_coefficient(h: int, i: int, j: int) -> RAT:
    """``[z^{-j-1}] e^{h z} (e^z - 1)^{-i-1}`` so that ``v[j] = sum_{i>=j} c v(i)``."""
    if i < j:
        return Q(0)
    target = -j - 1
    power = -i - 1
    # e^z - 1 = z * g(z), g(0) = 1; need relative precision target - power = i - j.
    rel = i - j
    z = TruncSeries.monomial("z", 1, rel + 1)
    g = (exp_series(z) - 1).normalized()
    g = TruncSeries(g.var, 0, g.coeffs, g.order - 1)  # divide by z
    factor = exp_series(z.scale(h).truncate(rel)) if rel >= 0 else None
    gp = g.truncate(rel) ** power if power != 0 else TruncSeries.one("z", rel)
    prod = gp * factor
    return prod[rel]


def square_bracket_mode(v, j: int, target, N: int | None = None) -> Vector:
    """``v[j] w`` for homogeneous basis states in ``v``."""
    out: Vector = {}
    wvec = _as_vector(target)
    for lam, a in _as_vector(v).items():
        h = sum(lam)
        for p, b in wvec.items():
            top = h + sum(p) - 1  # v(i) p = 0 for i > top
            for i in range(j, top + 1):
                c = square_bracket_coefficient(h, i, j)
                if not c:
                    continue
                for r, k in _vertex_mode_basis(lam, i, p):
                    _check_cutoff(r, N)
                    add_into(out, {r: Q(k)}, a * b * c)
    return out


# -- algebra interface -----------------------------------------------------------


class VertexAlgebra(Protocol):
    """What the character engine needs from a graded vertex operator algebra."""

    central_charge: RAT

    def basis(self, weight: int) -> Sequence[tuple]: ...

    def mode(self, v: Mapping, n: int, w: Mapping) -> Vector: ...

    def virasoro(self, n: int, w: Mapping) -> Vector: ...

    def gram(self, basis: Sequence) -> list[list[RAT]]: ...

    def bracket(self, v: Mapping, j: int, w: Mapping) -> Vector: ...


class Heisenberg:
    """Rank-one Heisenberg algebra with conformal vector ``1/2 a(-1)^2 1``."""

    name = "heisenberg"
    central_charge = Q(1)

    def basis(self, weight: int) -> Sequence[tuple]:
        return weight_basis(weight)

    def mode(self, v, n, w):
        return vertex_mode(v, n, w)

    def virasoro(self, n, w):
        return virasoro_apply(n, w)

    def gram(self, basis):
        return gram_matrix(basis)

    def bracket(self, v, j, w):
        return square_bracket_mode(v, j, w)


HEISENBERG = Heisenberg()
