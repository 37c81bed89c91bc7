"""The ten acceptance criteria at cutoff 8, q-order 8, eps-order 2.

Each test prints one ``PASS``/``FAIL`` line; the lines are also collected and
repeated in the pytest terminal summary.
"""

from itertools import permutations, product

import pytest

from vce import cli
from vce.foliation import Configuration, verify_foliation
from vce.genus1 import InsertionList, trace_n_point_direct, trace_one_point, zhu_reduce
from vce.modforms import eisenstein, eta_quotient_character, weierstrass_p, weierstrass_p_direct
from vce.qseries import Q, TruncSeries, first_mismatch, nested_constant
from vce.sewing import SewnSpec, epsilon_coefficient, rename_innermost, sew
from vce.voa import HEISENBERG, ModeMatrix, VoaState, virasoro_mode, weight_basis

N = 8
Q_ORDER = 8
EPS_ORDER = 2
Z_ORDER = 4

RESULTS: list[str] = []


def report(number: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    RESULTS.append(line)
    print(line)


def test_criterion_01_virasoro_relations():
    mats = {k: virasoro_mode(k, N) for k in range(-6, 7)}
    c = HEISENBERG.central_charge
    bad, compared = None, 0
    for m, n in product(range(-3, 4), repeat=2):
        for s in range(N + 1):
            if not all(0 <= x <= N for x in (s - n, s - m, s - m - n)):
                continue
            lhs = mats[m][s - n] @ mats[n][s] - mats[n][s - m] @ mats[m][s]
            rhs = mats[m + n][s].scale(Q(m - n))
            if m + n == 0:
                d = len(weight_basis(s))
                central = Q(c) * (m ** 3 - m) / 12
                rhs = rhs + ModeMatrix(s, s, tuple(tuple(central if i == j else Q(0) for j in range(d))
                                                   for i in range(d)))
            compared += 1
            if lhs.entries != rhs.entries and bad is None:
                bad = (m, n, s)
    report(1, bad is None, f"{compared} commutators compared" + ("" if bad is None else f", first failure {bad}"))
    assert bad is None


def partitions_by_enumeration(n: int) -> int:
    def count(rest, largest):
        if rest == 0:
            return 1
        return sum(count(rest - k, k) for k in range(1, min(rest, largest) + 1))
    return count(n, n)


def test_criterion_02_character_identity():
    z = trace_one_point(VoaState(()), Q_ORDER).body
    eta, _ = eta_quotient_character(Q_ORDER)
    expected = [partitions_by_enumeration(n) for n in range(Q_ORDER + 1)]
    ok = expected == [1, 1, 2, 3, 5, 7, 11, 15, 22] and list(z.coeffs) == [Q(p) for p in expected] and z == eta
    report(2, ok, f"coefficients {[int(c) for c in z.coeffs]}")
    assert ok


def insertion_lists():
    states = [p for w in range(5) for p in weight_basis(w)]
    for n in range(1, 4):
        for combo in product(states, repeat=n):
            if sum(map(sum, combo)) <= 4:
                yield combo


@pytest.fixture(scope="module")
def zhu_cases():
    """For every case: the brute-force trace and the recursion at each anchor."""
    out = []
    for combo in insertion_lists():
        ins = InsertionList.build([(s, f"z{i + 1}") for i, s in enumerate(combo)], Q_ORDER, Z_ORDER)
        direct = trace_n_point_direct(ins, N)
        out.append((combo, direct, [zhu_reduce(ins, a, N) for a in range(len(combo))]))
    return out


def test_criterion_03_recursion_matches_trace(zhu_cases):
    failures = [(combo, direct.mismatch(rec[0])) for combo, direct, rec in zhu_cases
                if direct.mismatch(rec[0]) is not None]
    report(3, not failures, f"{len(zhu_cases)} insertion lists" + (f", first failure {failures[0]}" if failures else ""))
    assert not failures


def test_criterion_04_two_point_closed_form():
    ins = InsertionList.build([((1,), "z1"), ((1,), "z2")], Q_ORDER, Z_ORDER)
    direct = trace_n_point_direct(ins, N).body
    z = trace_one_point(VoaState(()), Q_ORDER).body
    e2 = eisenstein(2, Q_ORDER).expansion
    p2 = weierstrass_p_direct(2, Z_ORDER, Q_ORDER)
    # (P_2 + E_2) * Z, with E_2 added to the z^0 coefficient
    coeffs = list(p2.coeffs)
    coeffs[-p2.lowest] = coeffs[-p2.lowest] + e2
    closed = TruncSeries("z1-z2", p2.lowest, [c * z for c in coeffs], p2.order)
    mm = first_mismatch(direct, closed)
    detail = "brute force vs (P2 + E2) * Z"
    if mm is not None:
        detail += f", first mismatch at {mm}: {direct[0][0]} vs {closed[0][0]}"
    report(4, mm is None, detail)
    assert mm is None


def test_criterion_05_anchor_independence(zhu_cases):
    failures = []
    for combo, _, rec in zhu_cases:
        for a, value in enumerate(rec[1:], 1):
            mm = rec[0].mismatch(value)
            if mm is not None:
                failures.append((combo, a, mm))
    anchors = sum(len(rec) for _, _, rec in zhu_cases)
    report(5, not failures, f"{anchors} anchored reductions" + (f", first failure {failures[0]}" if failures else ""))
    assert not failures


def _with_puncture(series: TruncSeries, var: str, nome: str) -> TruncSeries:
    if series.var == nome:
        return nested_constant(series, [var], [Z_ORDER])
    return series.map_coeffs(lambda c: _with_puncture(c, var, nome))


def _genus_one_factor(items, nome, puncture):
    if not items:
        return rename_innermost(trace_one_point(VoaState(()), Q_ORDER).body, "q", nome)
    ins = InsertionList.build(items, Q_ORDER, Z_ORDER)
    body = rename_innermost(trace_n_point_direct(ins, N).body, "q", nome)
    return _with_puncture(body, f"{items[-1][1]}-{puncture}", nome)


def test_criterion_06_sewing_degeneration():
    configurations = [(), ((1,),), ((2,),), ((1,), (1,)), ((1,), (1, 1)), ((2,), (1,))]
    failures, cases = [], 0
    for states in configurations:
        points = [(s, f"w{i + 1}") for i, s in enumerate(states)]
        for p in range(len(points) + 1):
            left, right = points[:p], points[p:]
            spec = SewnSpec(tuple(left), tuple(right), EPS_ORDER, N, Q_ORDER, Z_ORDER)
            expected = _genus_one_factor(left, "q1", "p1").tensor(_genus_one_factor(right[::-1], "q2", "p2"))
            cases += 1
            mm = first_mismatch(epsilon_coefficient(spec, 0), expected)
            if mm is not None:
                failures.append((states, p, mm))
    vacuum = sew(SewnSpec(eps_order=EPS_ORDER, cutoff=N, q_order=Q_ORDER))
    ok = not failures and vacuum[1].is_zero()
    report(6, ok, f"{cases} splits, eps^1 of the vacuum case is zero: {vacuum[1].is_zero()}"
           + (f", first failure {failures[0]}" if failures else ""))
    assert ok


def test_criterion_07_sewing_basis_invariance():
    spec = SewnSpec((((1,), "x1"),), (((1,), "y1"), ((2,), "y2")), EPS_ORDER, N, Q_ORDER, 2)
    reference = sew(spec)
    orderings = product(*(permutations(weight_basis(w)) for w in range(EPS_ORDER + 1)))
    failures, tried = [], 0
    for ordering in orderings:
        basis = {w: list(order) for w, order in enumerate(ordering)}
        other = sew(spec, basis)
        tried += 1
        for m in range(EPS_ORDER + 1):
            mm = first_mismatch(reference[m], other[m])
            if mm is not None:
                failures.append((ordering, m, mm))
    report(7, not failures, f"{tried} basis orderings" + (f", first failure {failures[0]}" if failures else ""))
    assert not failures


def test_criterion_08_foliation_suite():
    summary, failures = [], []
    for p in (0, 1, 2):
        cfg = Configuration((((1,), "x1"), ((1,), "x2")), p, EPS_ORDER, N, Q_ORDER, Z_ORDER)
        rep = verify_foliation(cfg)
        kinds = sorted({c["check"] for c in rep["checks"]})
        summary.append(f"p={p}: {len(rep['checks'])} checks")
        failures += [c for c in rep["checks"] if not c["pass"]]
        assert {"identity", "reconstruction"} <= set(kinds)
    report(8, not failures, "; ".join(summary) + (f", first failure {failures[0]}" if failures else ""))
    assert not failures


def test_criterion_09_weierstrass_and_eisenstein():
    mm = first_mismatch(weierstrass_p(2, Z_ORDER, Q_ORDER).expansion, weierstrass_p_direct(2, Z_ORDER, Q_ORDER))
    e2 = list(eisenstein(2, 3).expansion.coeffs)
    e4 = list(eisenstein(4, 1).expansion.coeffs)
    ok = mm is None and e2 == [Q(-1, 12), 2, 6, 8] and e4 == [Q(1, 720), Q(1, 3)]
    report(9, ok, f"E2 {[str(c) for c in e2]}, E4 {[str(c) for c in e4]}")
    assert ok


def test_criterion_10_determinism(tmp_path, capsys):
    paths = [tmp_path / "first.json", tmp_path / "second.json"]
    codes = [cli.main(["verify", "--all", "--cutoff", str(N), "-o", str(p)]) for p in paths]
    capsys.readouterr()
    same = paths[0].read_bytes() == paths[1].read_bytes()
    ok = same and codes == [0, 0]
    report(10, ok, f"exit codes {codes}, artifacts identical: {same}")
    assert ok
