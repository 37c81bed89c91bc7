"""Genus-two characters from two sewn tori, as an expansion in the sewing parameter.

The coefficient of ``eps^m`` is

    sum over u in the weight-m basis of
        Z(a_1, x_1; ...; a_L, x_L; u, p1; q1) * Z(b_R, y_R; ...; b_1, y_1; dual(u), p2; q2)

with the extra state always inserted innermost.  Each genus-one factor is a
direct trace; the product of the two factors is a nested series over the left
variables and ``q1`` followed by the right variables and ``q2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .genus1 import InsertionList, trace_n_point_direct
from .qseries import Q, SeriesError, TruncSeries
from .voa import CutoffError, _as_vector, dual_basis, weight_basis

__all__ = [
    "LEFT_PUNCTURE",
    "RIGHT_PUNCTURE",
    "SewnSpec",
    "SewnCharacter",
    "sew",
    "epsilon_coefficient",
    "epsilon_weight",
    "side_factor",
    "basis_slice",
    "rename_innermost",
]

LEFT_PUNCTURE = "p1"
RIGHT_PUNCTURE = "p2"


def epsilon_weight(u_weight: int) -> int:
    """Power of eps attached to a basis state of the given weight."""
    return u_weight


@dataclass(frozen=True)
class SewnSpec:
    """Insertions are ``(state, label)`` pairs; ``right`` is listed as ``b_1, ..., b_R``."""

    left: tuple = ()
    right: tuple = ()
    eps_order: int = 2
    cutoff: int = 8
    q_order: int | None = None
    z_order: int = 4

    def __post_init__(self):
        object.__setattr__(self, "left", tuple(self.left))
        object.__setattr__(self, "right", tuple(self.right))
        if self.eps_order > self.cutoff:
            raise CutoffError(f"eps-order {self.eps_order} exceeds cutoff {self.cutoff}")
        if self.q_order is not None and self.q_order > self.cutoff:
            raise CutoffError(f"q-order {self.q_order} exceeds cutoff {self.cutoff}")
        left = [lab for _, lab in self.left]
        right = [lab for _, lab in self.right]
        if set(left) & set(right):
            raise ValueError("the two sides must use disjoint labels")
        if {LEFT_PUNCTURE, RIGHT_PUNCTURE} & (set(left) | set(right)):
            raise ValueError(f"labels {LEFT_PUNCTURE!r} and {RIGHT_PUNCTURE!r} are reserved for the punctures")

    @property
    def qo(self) -> int:
        return self.cutoff if self.q_order is None else self.q_order


def rename_innermost(s: TruncSeries, old: str, new: str) -> TruncSeries:
    if s.var == old:
        return TruncSeries(new, s.lowest, s.coeffs, s.order)
    return s.map_coeffs(lambda c: rename_innermost(c, old, new))


def side_factor(items: Sequence, extra: Mapping | None, puncture: str, q_var: str,
                q_order: int, z_order: int, cutoff: int) -> TruncSeries:
    """One genus-one factor with an optional extra state inserted innermost."""
    entries = list(items)
    if extra is not None:
        entries.append((dict(extra), puncture))
    ins = InsertionList.build(entries, q_order, z_order)
    body = trace_n_point_direct(ins, cutoff).body
    return rename_innermost(body, "q", q_var)


@dataclass(frozen=True)
class SewnCharacter:
    """``coefficients[m]`` is the exact eps^m coefficient for ``m <= eps_order``."""

    eps_order: int
    coefficients: tuple

    def __getitem__(self, m: int) -> TruncSeries:
        if m > self.eps_order:
            raise SeriesError(f"eps^{m} is beyond the computed order {self.eps_order}")
        return self.coefficients[m]

    def to_json(self) -> list:
        return [[m, c.to_json()] for m, c in enumerate(self.coefficients)]


def basis_slice(spec: SewnSpec, m: int, basis: Mapping[int, Sequence] | None = None):
    """``(u, dual(u))`` over the basis states contributing to eps^m."""
    weights = [w for w in range(spec.eps_order + 1) if epsilon_weight(w) == m]
    for w in weights:
        if basis is not None and w in basis:
            states = [_as_vector(b) for b in basis[w]]
        else:
            states = [{p: Q(1)} for p in weight_basis(w)]
        for u, ubar in zip(states, dual_basis(states)):
            yield u, ubar


def epsilon_coefficient(spec: SewnSpec, m: int, basis: Mapping[int, Sequence] | None = None) -> TruncSeries:
    """Exact eps^m coefficient; ``basis`` optionally replaces the basis of some weights."""
    if m > spec.eps_order:
        raise SeriesError(f"eps^{m} is beyond the requested order {spec.eps_order}")
    total = None
    right = list(reversed(spec.right))
    for u, ubar in basis_slice(spec, m, basis):
        lf = side_factor(spec.left, u, LEFT_PUNCTURE, "q1", spec.qo, spec.z_order, spec.cutoff)
        rf = side_factor(right, ubar, RIGHT_PUNCTURE, "q2", spec.qo, spec.z_order, spec.cutoff)
        term = lf.tensor(rf)
        total = term if total is None else total + term
    if total is None:
        lf = side_factor(spec.left, {(): Q(0)}, LEFT_PUNCTURE, "q1", spec.qo, spec.z_order, spec.cutoff)
        rf = side_factor(right, {(): Q(0)}, RIGHT_PUNCTURE, "q2", spec.qo, spec.z_order, spec.cutoff)
        total = lf.tensor(rf)
    return total


def sew(spec: SewnSpec, basis: Mapping[int, Sequence] | None = None) -> SewnCharacter:
    return SewnCharacter(spec.eps_order,
                         tuple(epsilon_coefficient(spec, m, basis) for m in range(spec.eps_order + 1)))
