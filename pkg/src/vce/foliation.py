"""Charts, transition maps and foliation checks on sewn configurations.

A configuration places ``n`` states on two sewn tori: the first ``p`` on side 1
and the rest on side 2.  A chart is an anchor point on one side; its image is
the Zhu reduction of that side's genus-one factors (one per sewing basis
state ``u``) to one-point functions, carried together with the untouched
factors of the other side.

The transition from chart ``j`` to chart ``i`` reconstructs the value from
``j``'s reduction and re-reduces it at ``i``.  This is the map written
``phi_i o phi_j^{-1}``; the opposite composition order is obtained by
swapping the arguments.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from typing import Sequence

from .genus1 import AnchoredReduction, InsertionList, reduction_trace
from .qseries import TruncSeries, first_mismatch
from .sewing import (
    LEFT_PUNCTURE,
    RIGHT_PUNCTURE,
    SewnSpec,
    basis_slice,
    epsilon_weight,
    rename_innermost,
    sew,
    side_factor,
)
from .voa import _as_vector

__all__ = [
    "Configuration",
    "Chart",
    "ChartReduction",
    "TransitionMap",
    "all_charts",
    "chart_map",
    "transition",
    "compose",
    "verify_foliation",
]

SIDE_NOME = {1: "q1", 2: "q2"}
SIDE_PUNCTURE = {1: LEFT_PUNCTURE, 2: RIGHT_PUNCTURE}


@dataclass(frozen=True)
class Configuration:
    """``states`` are ``(state, label)`` pairs; indices ``< p`` sit on side 1."""

    states: tuple
    p: int
    eps_order: int = 2
    cutoff: int = 8
    q_order: int | None = None
    z_order: int = 4

    def __post_init__(self):
        object.__setattr__(self, "states", tuple((_as_vector(s), str(lab)) for s, lab in self.states))
        if not 0 <= self.p <= len(self.states):
            raise ValueError(f"side split p={self.p} outside 0..{len(self.states)}")

    @property
    def n(self) -> int:
        return len(self.states)

    def spec(self) -> SewnSpec:
        return SewnSpec(self.states[: self.p], self.states[self.p:], self.eps_order,
                        self.cutoff, self.q_order, self.z_order)

    def side_of(self, index: int) -> int:
        return 1 if index < self.p else 2

    def side_indices(self, side: int) -> list[int]:
        """Global indices in the insertion order used on that side (side 2 is reversed)."""
        if side == 1:
            return list(range(self.p))
        return list(reversed(range(self.p, self.n)))

    def side_items(self, side: int) -> list:
        return [self.states[i] for i in self.side_indices(side)]

    def slots(self) -> list[tuple[int, int, dict, dict]]:
        """``(m, k, u, dual(u))`` for every sewing basis state with eps-power m <= eps_order."""
        spec = self.spec()
        out = []
        for m in range(self.eps_order + 1):
            for k, (u, ubar) in enumerate(basis_slice(spec, m)):
                out.append((m, k, u, ubar))
        return out

    def with_eps_order(self, eps_order: int) -> "Configuration":
        return Configuration(self.states, self.p, eps_order, self.cutoff, self.q_order, self.z_order)


@dataclass(frozen=True, order=True)
class Chart:
    side: int
    anchor: int  # global index into Configuration.states

    def to_json(self) -> list:
        return [self.side, self.anchor]


def all_charts(cfg: Configuration) -> list[Chart]:
    return [Chart(cfg.side_of(i), i) for i in range(cfg.n)]


def _check_chart(cfg: Configuration, ch: Chart) -> None:
    if not 0 <= ch.anchor < cfg.n:
        raise ValueError(f"anchor {ch.anchor} out of range")
    if cfg.side_of(ch.anchor) != ch.side:
        raise ValueError(f"anchor {ch.anchor} is not on side {ch.side}")


def _side_insertions(cfg: Configuration, side: int, extra: dict) -> InsertionList:
    items = cfg.side_items(side) + [(extra, SIDE_PUNCTURE[side])]
    return InsertionList.build(items, cfg.spec().qo, cfg.z_order)


@dataclass(frozen=True)
class ChartReduction:
    """Per sewing slot: the chart side's reduction and the other side's factor."""

    chart: Chart
    leaves: tuple  # ((m, k, AnchoredReduction), ...)
    other: tuple   # ((m, k, TruncSeries), ...)

    def structure(self) -> tuple:
        return tuple((m, k, r.structure()) for m, k, r in self.leaves)

    def side_values(self, cfg: Configuration) -> list[TruncSeries]:
        out = []
        for _, _, red in self.leaves:
            z_orders = (cfg.z_order,) * (len(red.labels) - 1)
            body = red.reconstruct(cfg.spec().qo, z_orders).body
            out.append(rename_innermost(body, "q", SIDE_NOME[self.chart.side]))
        return out

    def reconstruct(self, cfg: Configuration) -> list[TruncSeries]:
        """The eps-coefficients of the sewn character rebuilt from this chart."""
        coeffs: list = [None] * (cfg.eps_order + 1)
        for (m, _, _), mine, (_, _, theirs) in zip(self.leaves, self.side_values(cfg), self.other):
            left, right = (mine, theirs) if self.chart.side == 1 else (theirs, mine)
            term = left.tensor(right)
            coeffs[m] = term if coeffs[m] is None else coeffs[m] + term
        return coeffs

    def to_json(self) -> dict:
        return {"chart": self.chart.to_json(),
                "leaves": [{"eps": m, "slot": k, "reduction": r.to_json()} for m, k, r in self.leaves]}


def chart_map(cfg: Configuration, ch: Chart) -> ChartReduction:
    _check_chart(cfg, ch)
    side, other_side = ch.side, 3 - ch.side
    pos = cfg.side_indices(side).index(ch.anchor)
    other_items = cfg.side_items(other_side)
    leaves, other = [], []
    for m, k, u, ubar in cfg.slots():
        mine, theirs = (u, ubar) if side == 1 else (ubar, u)
        leaves.append((m, k, reduction_trace(_side_insertions(cfg, side, mine), pos, cfg.cutoff)))
        other.append((m, k, side_factor(other_items, theirs, SIDE_PUNCTURE[other_side], SIDE_NOME[other_side],
                                        cfg.spec().qo, cfg.z_order, cfg.cutoff)))
    return ChartReduction(ch, tuple(leaves), tuple(other))


def _values_mismatch(a: Sequence, b: Sequence) -> tuple | None:
    for m, (x, y) in enumerate(zip(a, b)):
        if (x is None) != (y is None):
            return (("eps", m),)
        if x is None:
            continue
        mm = first_mismatch(x, y)
        if mm is not None:
            return (("eps", m),) + tuple(mm)
    return None


def _other_mismatch(a: ChartReduction, b: ChartReduction) -> tuple | None:
    for (m, k, x), (_, _, y) in zip(a.other, b.other):
        mm = first_mismatch(x, y)
        if mm is not None:
            return (("eps", m), ("slot", k)) + tuple(mm)
    return None


@dataclass(frozen=True)
class TransitionMap:
    """Transition from ``source`` to ``target``: reconstruct, then re-reduce at the target anchor."""

    source: Chart
    target: Chart
    domain: ChartReduction
    image: ChartReduction
    mismatch: tuple | None   # reconstructions of domain vs image
    side_local: bool         # other-side data untouched when both charts share a side

    @property
    def consistent(self) -> bool:
        return self.mismatch is None


def _transition_from(cfg: Configuration, domain: ChartReduction, target: Chart) -> TransitionMap:
    image = chart_map(cfg, target)
    mm = _values_mismatch(domain.reconstruct(cfg), image.reconstruct(cfg))
    same_side = domain.chart.side == target.side
    side_local = (not same_side) or _other_mismatch(domain, image) is None
    return TransitionMap(domain.chart, target, domain, image, mm, side_local)


def transition(cfg: Configuration, source: Chart, target: Chart) -> TransitionMap:
    _check_chart(cfg, source)
    _check_chart(cfg, target)
    return _transition_from(cfg, chart_map(cfg, source), target)


def compose(cfg: Configuration, second: TransitionMap, first: TransitionMap) -> TransitionMap:
    """``second`` after ``first``; requires ``first.target == second.source``."""
    if first.target != second.source:
        raise ValueError("transitions do not chain")
    return _transition_from(cfg, first.image, second.target)


def _check(name: str, charts: Sequence[Chart], mismatch: tuple | None, ok: bool | None = None) -> dict:
    passed = (mismatch is None) if ok is None else ok
    return {
        "check": name,
        "charts": [c.to_json() for c in charts],
        "pass": passed,
        "mismatch": None if mismatch is None else [list(step) for step in mismatch],
    }


def verify_foliation(cfg: Configuration, charts: Sequence[Chart] | None = None) -> dict:
    """Identity, cocycle, split-form, reconstruction and grading checks as a JSON-ready report."""
    report = {"n": cfg.n, "p": cfg.p, "eps_order": cfg.eps_order, "checks": []}
    if cfg.n == 0:
        report.update(trivial=True, passed=True)
        return report
    charts = sorted(all_charts(cfg) if charts is None else charts)
    for ch in charts:
        _check_chart(cfg, ch)
    checks = report["checks"]
    maps = {ch: chart_map(cfg, ch) for ch in charts}
    sewn = list(sew(cfg.spec()).coefficients)

    for ch in charts:
        checks.append(_check("reconstruction", [ch], _values_mismatch(maps[ch].reconstruct(cfg), sewn)))

    trans = {}
    for i in charts:
        for j in charts:
            t = _transition_from(cfg, maps[j], i)
            trans[(j, i)] = t
            if i == j:
                same = t.image.structure() == maps[i].structure()
                checks.append(_check("identity", [i], t.mismatch, same and t.consistent))
            else:
                checks.append(_check("transition", [j, i], t.mismatch))
            if i.side == j.side:
                checks.append(_check("split_form", [j, i], _other_mismatch(t.domain, t.image), t.side_local))

    for k, j, i in permutations(charts, 3):
        direct = trans[(k, i)]
        chained = compose(cfg, trans[(j, i)], trans[(k, j)])
        mm = _values_mismatch(chained.image.reconstruct(cfg), direct.image.reconstruct(cfg))
        same = chained.image.structure() == direct.image.structure()
        checks.append(_check("cocycle", [k, j, i], mm, mm is None and same))

    if cfg.eps_order > 0:
        lower = cfg.with_eps_order(cfg.eps_order - 1)
        for ch in charts:
            small = chart_map(lower, ch).structure()
            big = [leaf for leaf in maps[ch].structure() if leaf[0] <= lower.eps_order]
            checks.append(_check("grading", [ch], None, tuple(big) == small))

    report["trivial"] = len(charts) < 2
    report["passed"] = all(c["pass"] for c in checks)
    return report
