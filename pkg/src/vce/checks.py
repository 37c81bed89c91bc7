"""Invariant suites run by ``vce verify``.

Each check returns a JSON-ready dict with ``check``, ``pass`` and, on failure,
the address of the first differing coefficient.  Checks contain no timing or
environment data, so repeated runs produce identical reports.
"""

from __future__ import annotations

from itertools import product
from typing import Callable

from . import foliation, genus1, modforms, sewing, voa
from .qseries import Q, first_mismatch

__all__ = ["CHECKS", "run_checks"]


def _result(name: str, mismatch=None, ok: bool | None = None, **extra) -> dict:
    passed = (mismatch is None) if ok is None else ok
    out = {"check": name, "pass": passed}
    if mismatch is not None:
        out["mismatch"] = [list(step) for step in mismatch]
    out.update(extra)
    return out


def check_virasoro(N: int, span: int = 3) -> dict:
    """``[L(m), L(n)] = (m - n) L(m + n) + (c/12)(m^3 - m) delta`` on every weight space that fits."""
    c = voa.HEISENBERG.central_charge
    mats = {k: voa.virasoro_mode(k, N) for k in range(-2 * span, 2 * span + 1)}
    compared = 0
    for m, n in product(range(-span, span + 1), repeat=2):
        for s in range(N + 1):
            mids = (s - n, s - m, s - m - n)
            if not all(0 <= x <= N for x in mids):
                continue
            lhs = mats[m][s - n] @ mats[n][s] - mats[n][s - m] @ mats[m][s]
            rhs = mats[m + n][s].scale(Q(m - n))
            if m + n == 0:
                dim = len(voa.weight_basis(s))
                central = c * (m ** 3 - m) / 12
                ident = tuple(tuple(central if i == j else Q(0) for j in range(dim)) for i in range(dim))
                rhs = rhs + voa.ModeMatrix(s, s, ident)
            compared += 1
            if lhs.entries != rhs.entries:
                return _result("virasoro", ((("m", m), ("n", n), ("weight", s))), compared=compared)
    return _result("virasoro", compared=compared)


def check_character(N: int) -> dict:
    z = genus1.trace_one_point(voa.VoaState(()), N)
    dims = [len(voa.weight_basis(n)) for n in range(N + 1)]
    eta, pref = modforms.eta_quotient_character(N)
    ok = (list(z.body.coeffs) == [Q(d) for d in dims] and z.body == eta and z.prefactor_exp == pref)
    return _result("character", first_mismatch(z.body, eta), ok, coefficients=[str(c) for c in z.body.coeffs])


def check_weierstrass(N: int, z_order: int = 4) -> dict:
    p2 = modforms.weierstrass_p(2, z_order, N).expansion
    mm = first_mismatch(p2, modforms.weierstrass_p_direct(2, z_order, N))
    e2 = modforms.eisenstein(2, 3).expansion.coeffs
    e4 = modforms.eisenstein(4, 1).expansion.coeffs
    ok = mm is None and list(e2) == [Q(-1, 12), 2, 6, 8] and list(e4) == [Q(1, 720), Q(1, 3)]
    return _result("weierstrass", mm, ok)


def _insertion_lists(max_n: int, max_weight: int):
    states = [p for w in range(max_weight + 1) for p in voa.weight_basis(w)]
    for n in range(1, max_n + 1):
        for combo in product(states, repeat=n):
            if sum(sum(p) for p in combo) <= max_weight:
                yield combo


def check_zhu_vs_direct(N: int, z_order: int = 4, max_n: int = 3, max_weight: int = 4) -> list[dict]:
    """Recursion against brute-force trace, and agreement across anchors."""
    cases = 0
    for combo in _insertion_lists(max_n, max_weight):
        labels = [f"z{i + 1}" for i in range(len(combo))]
        ins = genus1.InsertionList.build(list(zip(combo, labels)), N, z_order)
        direct = genus1.trace_n_point_direct(ins, N)
        values = [genus1.zhu_reduce(ins, a, N) for a in range(len(combo))]
        cases += 1
        mm = direct.mismatch(values[0])
        if mm is not None:
            return [_result("zhu_vs_direct", (("case", str(list(combo))),) + tuple(mm))]
        for a, v in enumerate(values[1:], 1):
            mm = values[0].mismatch(v)
            if mm is not None:
                return [_result("zhu_vs_direct", cases=cases),
                        _result("anchor_independence", (("case", str(list(combo))), ("anchor", a)) + tuple(mm))]
    return [_result("zhu_vs_direct", cases=cases), _result("anchor_independence", cases=cases)]


def check_two_point(N: int, z_order: int = 4) -> dict:
    """``Z(a, z1; a, z2) = P_2(z1 - z2) Z(1)`` with both sides built independently."""
    ins = genus1.InsertionList.build([((1,), "z1"), ((1,), "z2")], N, z_order)
    direct = genus1.trace_n_point_direct(ins, N).body
    z1 = genus1.trace_one_point(voa.VoaState(()), N).body
    p2 = modforms.weierstrass_p_direct(2, z_order, N)
    closed = p2.map_coeffs(lambda c: c * z1)
    closed = genus1.TruncSeries("z1-z2", closed.lowest, closed.coeffs, closed.order)
    return _result("two_point_closed_form", first_mismatch(direct, closed))


def check_sewing(N: int, eps_order: int = 2, z_order: int = 2) -> list[dict]:
    out = []
    base = sewing.SewnSpec(eps_order=eps_order, cutoff=N, z_order=z_order)
    sc = sewing.sew(base)
    z1 = genus1.trace_one_point(voa.VoaState(()), N).body
    prod0 = sewing.rename_innermost(z1, "q", "q1").tensor(sewing.rename_innermost(z1, "q", "q2"))
    out.append(_result("sewing_vacuum_degeneration", first_mismatch(sc[0], prod0)))
    out.append(_result("sewing_weight_one_vanishes", None, sc[1].is_zero() if eps_order >= 1 else True))
    with_ins = sewing.SewnSpec(left=(((1,), "x1"),), right=(((1,), "y1"),), eps_order=eps_order,
                               cutoff=N, z_order=z_order)
    reference = sewing.sew(with_ins)
    shuffled = {w: list(reversed(voa.weight_basis(w))) for w in range(eps_order + 1)}
    mm = None
    for m, (a, b) in enumerate(zip(reference.coefficients, sewing.sew(with_ins, shuffled).coefficients)):
        diff = first_mismatch(a, b)
        if diff is not None:
            mm = (("eps", m),) + tuple(diff)
            break
    out.append(_result("sewing_basis_invariance", mm))
    return out


def check_foliation(N: int, eps_order: int = 2, z_order: int = 2) -> list[dict]:
    out = []
    for p in (0, 1, 2):
        cfg = foliation.Configuration((((1,), "x1"), ((1,), "x2")), p, eps_order, N, None, z_order)
        report = foliation.verify_foliation(cfg)
        failed = [c for c in report["checks"] if not c["pass"]]
        res = _result(f"foliation_p{p}", None, report["passed"], checks=len(report["checks"]))
        if failed:
            res["first_failure"] = failed[0]
        out.append(res)
    return out


CHECKS: dict[str, Callable[[int], dict | list[dict]]] = {
    "virasoro": check_virasoro,
    "character": check_character,
    "weierstrass": check_weierstrass,
    "zhu": check_zhu_vs_direct,
    "two_point": check_two_point,
    "sewing": check_sewing,
    "foliation": check_foliation,
}


def run_checks(names, N: int) -> list[dict]:
    results = []
    for name in names:
        res = CHECKS[name](N)
        results.extend(res if isinstance(res, list) else [res])
    return results
