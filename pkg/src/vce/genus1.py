"""Genus-one n-point character functions of the Heisenberg algebra.

Two independent routes compute ``Z(v_1, z_1; ...; v_n, z_n; tau)``:

* :func:`trace_n_point_direct` evaluates the defining trace
  ``Tr Y(q_{z_1}^{L(0)} v_1, q_{z_1}) ... q^{L(0) - c/24}`` by applying modes to
  every basis vector.  Each q-coefficient is a rational function of
  ``x_i = e^{z_i}`` whose pole orders are bounded by the weights, so a finite
  number of trace coefficients determines it exactly; it is then expanded in
  the difference variables.
* :func:`zhu_reduce` applies the genus-one recursion symbolically, producing
  one-point functions weighted by polynomials in ``P_l(z_a - z_b)`` and
  ``E_k``, and evaluates those with :mod:`vce.modforms`.

Expansion domain.  For ordered labels ``l_1, ..., l_n`` the variables are
``u_i = z_i - z_{i+1}`` (named ``"l_i-l_{i+1}"``), nested with ``u_1``
outermost and ``q`` innermost, and expanded in ``|u_1| < |u_2| < ...``.  A
function of ``z_a - z_b = u_a + ... + u_{b-1}`` is Taylor-expanded around
its last summand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Callable, Iterable, Mapping, Sequence

from .modforms import eisenstein, weierstrass_p
from .qseries import (
    Q,
    RAT,
    SeriesError,
    TruncSeries,
    exp_series,
    first_mismatch,
    nested_constant,
    rational_from_str,
    rational_to_str,
)
from .voa import (
    HEISENBERG,
    CutoffError,
    VoaState,
    _vertex_mode_basis,
    add_into,
    square_bracket_mode,
    weight_basis,
)

__all__ = [
    "Insertion",
    "InsertionList",
    "CharacterValue",
    "AnchoredReduction",
    "trace_one_point",
    "one_point_series",
    "trace_n_point_direct",
    "zhu_reduce",
    "reduction_trace",
    "evaluate_coefficient",
    "difference_vars",
]

MAX_MARGIN = 64


# -- insertions ------------------------------------------------------------------


def _freeze(vec: Mapping) -> tuple:
    return tuple(sorted((p, Q(c)) for p, c in vec.items() if c))


def _to_vector(state) -> dict:
    if isinstance(state, VoaState):
        return state.vector()
    if isinstance(state, tuple) and all(isinstance(x, int) for x in state):
        return {tuple(sorted(state, reverse=True)): Q(1)}
    if isinstance(state, (list,)):
        return {tuple(sorted(state, reverse=True)): Q(1)}
    return {p: Q(c) for p, c in dict(state).items() if c}


@dataclass(frozen=True)
class Insertion:
    state: tuple  # frozen vector: ((partition, coeff), ...)
    label: str

    @property
    def weights(self) -> set[int]:
        return {sum(p) for p, _ in self.state}

    @property
    def max_weight(self) -> int:
        return max(self.weights, default=0)


@dataclass(frozen=True)
class InsertionList:
    insertions: tuple
    q_order: int
    z_orders: tuple

    def __post_init__(self):
        labels = [i.label for i in self.insertions]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate z tags: {labels}")
        if len(self.z_orders) != max(len(labels) - 1, 0):
            raise ValueError("need one z-order per difference variable")

    @classmethod
    def build(cls, items: Iterable, q_order: int, z_order: int | Sequence[int] = 4) -> "InsertionList":
        """``items`` are ``(state, label)`` pairs; states may be VoaState, partitions or vectors."""
        ins = tuple(Insertion(_freeze(_to_vector(s)), str(lab)) for s, lab in items)
        nvars = max(len(ins) - 1, 0)
        zo = tuple(z_order) if not isinstance(z_order, int) else (z_order,) * nvars
        return cls(ins, q_order, zo)

    @property
    def labels(self) -> tuple:
        return tuple(i.label for i in self.insertions)

    def __len__(self):
        return len(self.insertions)

    def variables(self) -> tuple:
        return difference_vars(self.labels)

    def total_weight(self) -> int:
        return sum(i.max_weight for i in self.insertions)

    def check_cutoff(self, N: int | None) -> None:
        if N is None:
            return
        for i in self.insertions:
            if i.max_weight > N:
                raise CutoffError(f"insertion {i.label} has weight {i.max_weight} > cutoff {N}")
        if self.q_order > N:
            raise CutoffError(f"q-order {self.q_order} exceeds cutoff {N}")

    def permuted(self, order: Sequence[int]) -> "InsertionList":
        ins = tuple(self.insertions[i] for i in order)
        return InsertionList(ins, self.q_order, self.z_orders[: max(len(ins) - 1, 0)])


def difference_vars(labels: Sequence[str]) -> tuple:
    return tuple(f"{a}-{b}" for a, b in zip(labels, labels[1:]))


@dataclass(frozen=True)
class CharacterValue:
    """``q^{prefactor_exp} * body``; ``body`` is nested over ``vars`` then ``q``."""

    prefactor_exp: RAT
    vars: tuple
    body: TruncSeries

    def mismatch(self, other: "CharacterValue") -> tuple | None:
        if self.prefactor_exp != other.prefactor_exp:
            return (("prefactor", None),)
        if self.vars != other.vars:
            return (("vars", None),)
        return first_mismatch(self.body, other.body)

    def __eq__(self, other):
        if not isinstance(other, CharacterValue):
            return NotImplemented
        return self.mismatch(other) is None

    __hash__ = None

    def to_json(self) -> dict:
        return {
            "prefactor_exp": rational_to_str(self.prefactor_exp),
            "vars": list(self.vars) + ["q"],
            "body": self.body.to_json(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "CharacterValue":
        return cls(rational_from_str(data["prefactor_exp"]), tuple(data["vars"][:-1]),
                   TruncSeries.from_json(data["body"]))


def _prefactor() -> RAT:
    return -HEISENBERG.central_charge / 24


# -- one-point functions -------------------------------------------------------


@lru_cache(maxsize=None)
def _zero_mode_trace(lam: tuple, n: int) -> int:
    """``Tr_{V_(n)} o(v)`` for the basis state ``v = a(-lam)1``; ``o(v) = v(wt v - 1)``."""
    mode = sum(lam) - 1
    total = 0
    for p in weight_basis(n):
        for r, c in _vertex_mode_basis(lam, mode, p):
            if r == p:
                total += c
    return total


def one_point_series(vec: Mapping, q_order: int) -> TruncSeries:
    """``sum_n Tr_{V_(n)} o(v) q^n`` (without the ``q^{-c/24}`` prefactor)."""
    coeffs = [Q(0)] * (q_order + 1)
    for lam, c in dict(vec).items():
        for n in range(q_order + 1):
            t = _zero_mode_trace(lam, n)
            if t:
                coeffs[n] += c * t
    return TruncSeries("q", 0, coeffs, q_order)


def trace_one_point(v, N: int) -> CharacterValue:
    vec = _to_vector(v)
    wt = max((sum(p) for p in vec), default=0)
    if wt > N:
        raise CutoffError(f"state of weight {wt} exceeds cutoff {N}")
    return CharacterValue(_prefactor(), (), one_point_series(vec, N))


# -- nested-series builders -------------------------------------------------------


def _empty(var: str, order: int) -> TruncSeries:
    return TruncSeries(var, order + 1, [], order)


def _nest(vars: Sequence[str], orders: Sequence[int], terms: Mapping[tuple, object], leaf_zero) -> object:
    """Nested series from ``{exponent tuple: leaf}``, outermost variable first."""
    if not vars:
        return terms.get((), leaf_zero)
    var, order = vars[0], orders[0]
    groups: dict[int, dict] = {}
    for exps, val in terms.items():
        if exps[0] <= order:
            groups.setdefault(exps[0], {})[exps[1:]] = val
    if not groups:
        return _empty(var, order)
    lowest = min(groups)
    if len(vars) == 1:
        return TruncSeries(var, lowest, [groups.get(e, {}).get((), leaf_zero) for e in range(lowest, order + 1)], order)
    inner_zero = _empty(vars[1], orders[1])
    coeffs = [
        _nest(vars[1:], orders[1:], groups[e], leaf_zero) if e in groups else inner_zero
        for e in range(lowest, order + 1)
    ]
    return TruncSeries(var, lowest, coeffs, order)


def _rename(s: TruncSeries, var: str) -> TruncSeries:
    return TruncSeries(var, s.lowest, s.coeffs, s.order)


def _compositions_with_zero(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions_with_zero(total - first, parts - 1):
            yield (first,) + rest


def _multinomial(exps: Sequence[int]) -> int:
    out = math.factorial(sum(exps))
    for e in exps:
        out //= math.factorial(e)
    return out


def _shifted(taylor: Callable[[int], TruncSeries | None], ia: int, ib: int,
             vars: Sequence[str], orders: Sequence[int]) -> TruncSeries:
    """``f(u_ia + ... + u_{ib-1})`` expanded around ``u_{ib-1}``.

    ``taylor(k)`` returns ``f^{(k)}/k!`` as a series in ``vars[ib-1]`` whose
    coefficients are the leaves (rationals or q-series).
    """
    dom = ib - 1
    shift_levels = list(range(ia, dom))
    inner_vars, inner_orders = list(vars[dom + 1:]), list(orders[dom + 1:])

    def placed(k: int) -> TruncSeries | None:
        g = taylor(k)
        if g is None:
            return None
        g = _rename(g, vars[dom])
        if inner_vars:
            g = g.map_coeffs(lambda c: nested_constant(c, inner_vars, inner_orders))
        return g

    if not shift_levels:
        core = placed(0)
    else:
        kmax = sum(orders[l] for l in shift_levels)
        terms: dict[tuple, TruncSeries] = {}
        for k in range(kmax + 1):
            g = None
            for exps in _compositions_with_zero(k, len(shift_levels)):
                if any(e > orders[l] for e, l in zip(exps, shift_levels)):
                    continue
                if g is None:
                    g = placed(k)
                    if g is None:
                        break
                terms[exps] = g.scale(_multinomial(exps))
        core = _nest([vars[l] for l in shift_levels], [orders[l] for l in shift_levels],
                     terms, _empty(vars[dom], orders[dom]))
    return nested_constant(core, list(vars[:ia]), list(orders[:ia]))


def _attach_q(series_list: Sequence, q_order: int):
    """Stack per-q-degree expansions ``F_0, ..., F_Q`` into one series with ``q`` innermost."""
    if all(not isinstance(s, TruncSeries) for s in series_list):
        return TruncSeries("q", 0, list(series_list), q_order)
    sib = next(s for s in series_list if isinstance(s, TruncSeries))
    items = [s if isinstance(s, TruncSeries) else _empty(sib.var, sib.order) for s in series_list]
    order = min(s.order for s in items)
    lowest = min(s.lowest for s in items)
    if order < lowest:
        return _empty(sib.var, order)
    coeffs = []
    for e in range(lowest, order + 1):
        column = [s[e] for s in items]
        if all(isinstance(c, TruncSeries) and not c.coeffs for c in column) or \
                all(not isinstance(c, TruncSeries) and c == 0 for c in column):
            coeffs.append(None)
        else:
            coeffs.append(_attach_q(column, q_order))
    filler = next((c for c in coeffs if c is not None), None)
    if filler is None:
        return _empty(sib.var, order)
    zero = filler.zero_like() if isinstance(filler, TruncSeries) else Q(0)
    return TruncSeries(sib.var, lowest, [zero if c is None else c for c in coeffs], order)


def _with_margin(build: Callable[[list[int]], TruncSeries], targets: Sequence[int],
                 q_order: int, start: int) -> TruncSeries:
    """Evaluate at raised working orders until every level reaches its target."""
    margin = start
    while True:
        work = [t + margin for t in targets]
        body = build(work)
        try:
            return body.truncate(list(targets) + [q_order])
        except SeriesError:
            if margin > MAX_MARGIN:
                raise
            margin += 4


# -- direct trace ------------------------------------------------------------------


def _int_shift_mode(lam: tuple, shift: int, vec: Mapping[tuple, int]) -> dict:
    n = sum(lam) - 1 - shift
    out: dict = {}
    for p, b in vec.items():
        for r, c in _vertex_mode_basis(lam, n, p):
            v = out.get(r, 0) + b * c
            if v:
                out[r] = v
            else:
                out.pop(r, None)
    return out


def _pole_orders(lams: Sequence[tuple]) -> dict:
    wts = [sum(l) for l in lams]
    return {(i, j): wts[i] + wts[j] for i in range(len(lams)) for j in range(i + 1, len(lams))
            if wts[i] + wts[j] > 0}


def _numerator_box(lams: Sequence[tuple], N: int) -> tuple[list[int], list[int]]:
    """Bounds on ``S_l = e_{l+1} + ... + e_{n-1}`` for the exponents of the numerator."""
    n = len(lams)
    K = _pole_orders(lams)
    k = lambda i, j: K.get((min(i, j), max(i, j)), 0)
    lo = [-N - sum(k(i, j) for j in range(i + 1, n)) for i in range(n)]
    hi = [N + sum(k(i, j) for j in range(i)) for i in range(n)]
    smin, smax = [], []
    for l in range(n - 1):
        smax.append(min(sum(hi[l + 1:]), -sum(lo[: l + 1])))
        smin.append(max(-N, sum(lo[l + 1:]), -sum(hi[: l + 1])))
    return smin, smax


@lru_cache(maxsize=None)
def _direct_numerator(lams: tuple, N: int, extra: int = 0) -> tuple:
    """Numerator ``G_N`` of the q^N coefficient as ``((S tuple, int), ...)``.

    ``F_N = sum_S f_S prod_l y_l^{S_l}`` with ``y_l = x_{l+1}/x_l`` is the raw
    trace; ``G_N = F_N * prod_{i<j} (1 - x_j/x_i)^{K_ij}`` is a Laurent
    polynomial supported in the box of :func:`_numerator_box`.  ``extra``
    widens the computed range so tests can confirm the support bound.
    """
    n = len(lams)
    smin, smax = _numerator_box(lams, N)
    smax = [s + extra for s in smax]
    F: dict[tuple, int] = {}

    def dfs(j: int, vec: dict, S: tuple, w: tuple):
        # apply v_j; S holds (S_j, ..., S_{n-2}) already chosen
        if j == 0:
            cur = S[0] if S else 0
            out = _int_shift_mode(lams[0], -cur, vec)
            c = out.get(w, 0)
            if c:
                F[S] = F.get(S, 0) + c
            return
        s_j = S[0] if S else 0
        for s_prev in range(-N, smax[j - 1] + 1):
            new = _int_shift_mode(lams[j], s_prev - s_j, vec)
            if new:
                dfs(j - 1, new, (s_prev,) + S, w)

    for w in weight_basis(N):
        dfs(n - 1, {w: 1}, (), w)

    G = F
    for (i, j), K in sorted(_pole_orders(lams).items()):
        for _ in range(K):
            nxt: dict[tuple, int] = {}
            for S, c in G.items():
                nxt[S] = nxt.get(S, 0) + c
                T = tuple(s + 1 if i <= l < j else s for l, s in enumerate(S))
                if all(t <= m for t, m in zip(T, smax)):
                    nxt[T] = nxt.get(T, 0) - c
            G = {S: c for S, c in nxt.items() if c}
    for S, c in G.items():
        if any(s < m for s, m in zip(S, smin)):
            raise AssertionError(f"numerator term {S} below the proven support bound")
    return tuple(sorted(G.items()))


def _exp_sum(terms: Mapping[tuple, int], vars: Sequence[str], orders: Sequence[int]):
    """``sum_S c_S prod_l exp(-S_l u_l)`` as a nested series with rational leaves."""
    if not vars:
        return Q(sum(terms.values()))
    groups: dict[int, dict] = {}
    for S, c in terms.items():
        g = groups.setdefault(S[0], {})
        g[S[1:]] = g.get(S[1:], 0) + c
    order = orders[0]
    fact = [math.factorial(k) for k in range(order + 1)]
    coeffs = [None] * (order + 1)
    for s, sub in sorted(groups.items()):
        inner = _exp_sum(sub, vars[1:], orders[1:])
        powk = 1
        for k in range(order + 1):
            if powk:
                term = inner * Q(powk, fact[k]) if not isinstance(inner, TruncSeries) else inner.scale(Q(powk, fact[k]))
                coeffs[k] = term if coeffs[k] is None else coeffs[k] + term
            powk *= -s
    if len(vars) == 1:
        zero = Q(0)
    else:
        zero = _empty(vars[1], orders[1])
    return TruncSeries(vars[0], 0, [zero if c is None else c for c in coeffs], order)


@lru_cache(maxsize=None)
def _h_taylor(K: int, order: int, k: int) -> TruncSeries:
    """``h^{(k)}/k!`` for ``h(t) = (1 - e^{-t})^{-K}``, known to ``order``."""
    top = order + k
    t = TruncSeries.monomial("t", 1, top + K + 1)
    one_minus = (-(exp_series(-t) - 1)).normalized()  # t - t^2/2 + ...
    h = one_minus.invert() ** K
    h = h.truncate(top)
    for i in range(k):
        h = h.differentiate()
    return h.scale(Q(1, math.factorial(k)))


@lru_cache(maxsize=None)
def _denominator_expansion(pairs: tuple, vars: tuple, orders: tuple):
    """``prod (1 - e^{-(z_i - z_j)})^{-K_ij}`` in the nested domain."""
    result = None
    for (i, j), K in pairs:
        atom = _shifted(lambda k, K=K, o=orders[j - 1]: _h_taylor(K, o, k), i, j, vars, orders)
        result = atom if result is None else result * atom
    if result is None:
        result = nested_constant(Q(1), list(vars), list(orders))
    return result


def _direct_basis(lams: tuple, labels: tuple, q_order: int, targets: tuple) -> TruncSeries:
    n = len(lams)
    if n == 1:
        return one_point_series({lams[0]: Q(1)}, q_order)
    if n == 0:
        return one_point_series({(): Q(1)}, q_order)
    vars = difference_vars(labels)
    pairs = tuple(sorted(_pole_orders(lams).items()))
    start = sum(K for _, K in pairs) + 2

    def build(work: list[int]) -> TruncSeries:
        H = _denominator_expansion(pairs, vars, tuple(work))
        per_q = []
        for N in range(q_order + 1):
            G = dict(_direct_numerator(lams, N))
            if not G:
                per_q.append(_empty(vars[0], work[0]))
                continue
            poly = _exp_sum(G, vars, work)
            per_q.append(poly * H)
        return _attach_q(per_q, q_order)

    return _with_margin(build, targets, q_order, start)


def _expand_multilinear(ins: InsertionList) -> list[tuple[tuple, RAT]]:
    out = []
    for combo in product(*[i.state for i in ins.insertions]):
        coef = Q(1)
        for _, c in combo:
            coef *= c
        out.append((tuple(p for p, _ in combo), coef))
    return out


def trace_n_point_direct(ins: InsertionList, N: int | None = None) -> CharacterValue:
    """The defining trace, evaluated by brute force over the graded basis."""
    ins.check_cutoff(N)
    if any(not i.state for i in ins.insertions):
        return _zero_value(ins)
    body = None
    for lams, coef in _expand_multilinear(ins):
        part = _direct_basis(lams, ins.labels, ins.q_order, ins.z_orders).scale(coef)
        body = part if body is None else body + part
    if body is None:
        body = one_point_series({(): Q(1)}, ins.q_order)
    return CharacterValue(_prefactor(), ins.variables(), body)


def _zero_value(ins: InsertionList) -> CharacterValue:
    vars = ins.variables()
    zero = TruncSeries.zero("q", ins.q_order)
    body = nested_constant(zero, list(vars), list(ins.z_orders)) if vars else zero
    return CharacterValue(_prefactor(), vars, body)


# -- Zhu recursion --------------------------------------------------------------------

# Atoms: ("E", k) for E_k(q); ("P", l, a, b) for P_l(z_a - z_b) with a before b.


def _p_atom(l: int, a: str, b: str, rank: Mapping[str, int]) -> tuple[tuple, int]:
    if rank[a] < rank[b]:
        return ("P", l, a, b), 1
    return ("P", l, b, a), (-1) ** l


def _accumulate(out: dict, sub: Mapping, scale, atoms: tuple) -> None:
    for p, coef in sub.items():
        target = out.setdefault(p, {})
        for mono, c in coef.items():
            key = tuple(sorted(mono + atoms))
            v = target.get(key, 0) + c * scale
            if v:
                target[key] = v
            else:
                target.pop(key, None)
        if not target:
            out.pop(p, None)


@lru_cache(maxsize=None)
def _reduce(entries: tuple, anchor: int, order: tuple) -> dict:
    """Reduce ``Z(entries)`` to ``{w: {monomial: coeff}}`` with ``Z = sum c * mono * Z(w)``."""
    n = len(entries)
    if n == 0:
        return {(): {(): Q(1)}}
    if any(not vec for vec, _ in entries):
        return {}
    if n == 1:
        return {p: {(): c} for p, c in entries[0][0]}
    rank = {lab: i for i, lab in enumerate(order)}
    a_vec, a_lab = entries[anchor]
    rest = entries[:anchor] + entries[anchor + 1:]
    out: dict = {}

    def sub_with(k: int, new_vec: dict) -> tuple:
        return rest[:k] + ((_freeze(new_vec), rest[k][1]),) + rest[k + 1:]

    def vec_weight(vec) -> int:
        return max(sum(p) for p, _ in vec)

    for lam, alpha in a_vec:
        h = sum(lam)
        # sum_k sum_m P_{m+1}(z_a - z_k) Z(..., v_a[m] v_k, ...)
        for k, (vk, lk) in enumerate(rest):
            for m in range(0, h + vec_weight(vk)):
                new = square_bracket_mode({lam: Q(1)}, m, dict(vk))
                if not new:
                    continue
                atom, sign = _p_atom(m + 1, a_lab, lk, rank)
                _accumulate(out, _reduce(sub_with(k, new), 0, order), alpha * sign, (atom,))
        # Zero-mode term Tr o(v_a) Y(...): the z^0 part of the associativity
        # expansion around the first remaining point b.
        vb, lb = rest[0]
        for m in range(-1, h + vec_weight(vb)):
            if m == -1:
                factor, atoms = Q(1), ()
            elif m % 2 == 1:
                factor, atoms = Q(-1), (("E", m + 1),)
            else:
                continue
            new = square_bracket_mode({lam: Q(1)}, m, dict(vb))
            if not new:
                continue
            _accumulate(out, _reduce(sub_with(0, new), 0, order), alpha * factor, atoms)
        for k in range(1, len(rest)):
            vk, lk = rest[k]
            for m in range(0, h + vec_weight(vk)):
                new = square_bracket_mode({lam: Q(1)}, m, dict(vk))
                if not new:
                    continue
                atom, sign = _p_atom(m + 1, lb, lk, rank)
                _accumulate(out, _reduce(sub_with(k, new), 0, order), -alpha * sign, (atom,))
    return out


@dataclass(frozen=True)
class AnchoredReduction:
    """One-point data of a reduction: ``Z = sum_w c_w(P, E) * Z(w; tau)``.

    ``terms`` is a sorted tuple of ``(w, ((monomial, coeff), ...))`` where a
    monomial is a sorted tuple of atoms ``("P", l, a, b)`` = ``P_l(z_a - z_b)``
    and ``("E", k)`` = ``E_k(tau)``.
    """

    anchor: int
    labels: tuple
    terms: tuple

    def structure(self) -> tuple:
        return tuple((w, tuple(m for m, _ in coef)) for w, coef in self.terms)

    def states(self) -> list[VoaState]:
        return [VoaState(w) for w, _ in self.terms]

    def pairs(self, q_order: int, z_orders: Sequence[int]) -> list[tuple[VoaState, TruncSeries]]:
        """``(w, c_w)`` with ``c_w`` evaluated as a nested series."""
        return [(VoaState(w), evaluate_coefficient(dict(coef), self.labels, q_order, z_orders))
                for w, coef in self.terms]

    def reconstruct(self, q_order: int, z_orders: Sequence[int]) -> CharacterValue:
        return _evaluate_reduction(self.terms, self.labels, q_order, tuple(z_orders))

    def to_json(self) -> dict:
        return {
            "anchor": self.anchor,
            "labels": list(self.labels),
            "terms": [
                {"state": list(w),
                 "coefficient": [{"atoms": [list(a) for a in m], "coeff": rational_to_str(c)} for m, c in coef]}
                for w, coef in self.terms
            ],
        }


def _entries(ins: InsertionList) -> tuple:
    return tuple((i.state, i.label) for i in ins.insertions)


def reduction_trace(ins: InsertionList, anchor: int, N: int | None = None) -> AnchoredReduction:
    """Full reduction to one-point functions with the given anchor (0-based)."""
    ins.check_cutoff(N)
    n = len(ins)
    if n == 0:
        red = _reduce((), 0, ())
    else:
        if not 0 <= anchor < n:
            raise IndexError(f"anchor {anchor} out of range for {n} insertions")
        red = _reduce(_entries(ins), anchor, ins.labels)
    terms = tuple(sorted((w, tuple(sorted(coef.items()))) for w, coef in red.items()))
    return AnchoredReduction(anchor, ins.labels, terms)


def zhu_reduce(ins: InsertionList, anchor: int = 0, N: int | None = None) -> CharacterValue:
    red = reduction_trace(ins, anchor, N)
    return red.reconstruct(ins.q_order, ins.z_orders)


# -- evaluation of reductions ------------------------------------------------------------


def _e_product(atoms: Iterable[tuple], q_order: int) -> TruncSeries:
    out = TruncSeries.one("q", q_order)
    for a in atoms:
        out = out * eisenstein(a[1], q_order).expansion
    return out


@lru_cache(maxsize=None)
def _p_taylor(l: int, order: int, q_order: int, k: int) -> TruncSeries:
    """``d^k/dt^k P_l(t) / k! = (-1)^k C(l+k-1, k) P_{l+k}(t)``."""
    p = weierstrass_p(l + k, order, q_order).expansion
    return p.scale((-1) ** k * math.comb(l + k - 1, k))


@lru_cache(maxsize=None)
def _p_monomial(pmono: tuple, labels: tuple, q_order: int, work: tuple) -> TruncSeries:
    vars = difference_vars(labels)
    rank = {lab: i for i, lab in enumerate(labels)}
    result = None
    for _, l, a, b in pmono:
        ia, ib = rank[a], rank[b]
        atom = _shifted(lambda k, l=l, o=work[ib - 1]: _p_taylor(l, o, q_order, k), ia, ib, vars, work)
        result = atom if result is None else result * atom
    if result is None:
        result = nested_constant(TruncSeries.one("q", q_order), list(vars), list(work))
    return result


def _group_by_p(terms: Iterable[tuple[tuple, Iterable]], q_order: int) -> dict[tuple, TruncSeries]:
    grouped: dict[tuple, TruncSeries] = {}
    for w, coef in terms:
        zw = one_point_series({w: Q(1)}, q_order) if w is not None else TruncSeries.one("q", q_order)
        for mono, c in coef:
            pm = tuple(a for a in mono if a[0] == "P")
            em = [a for a in mono if a[0] == "E"]
            qs = (_e_product(em, q_order) * zw).scale(c)
            grouped[pm] = qs if pm not in grouped else grouped[pm] + qs
    return grouped


def _evaluate_grouped(grouped: Mapping[tuple, TruncSeries], labels: tuple, q_order: int,
                      z_orders: tuple) -> TruncSeries:
    vars = difference_vars(labels)
    if not vars:
        total = TruncSeries.zero("q", q_order)
        for qs in grouped.values():
            total = total + qs
        return total
    start = 2 * max((a[1] for pm in grouped for a in pm), default=0) + 2

    def build(work: list[int]) -> TruncSeries:
        total = None
        for pm, qs in sorted(grouped.items()):
            part = _p_monomial(pm, labels, q_order, tuple(work)).scale(qs)
            total = part if total is None else total + part
        if total is None:
            total = nested_constant(TruncSeries.zero("q", q_order), list(vars), list(work))
        return total

    return _with_margin(build, z_orders, q_order, start)


def _evaluate_reduction(terms: tuple, labels: tuple, q_order: int, z_orders: tuple) -> CharacterValue:
    body = _evaluate_grouped(_group_by_p(terms, q_order), labels, q_order, z_orders)
    return CharacterValue(_prefactor(), difference_vars(labels), body)


def evaluate_coefficient(coef: Mapping[tuple, RAT], labels: Sequence[str], q_order: int,
                         z_orders: Sequence[int]) -> TruncSeries:
    """Evaluate a polynomial in P- and E-atoms as a nested series."""
    grouped = _group_by_p([(None, tuple(coef.items()))], q_order)
    return _evaluate_grouped(grouped, tuple(labels), q_order, tuple(z_orders))
