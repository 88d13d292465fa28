"""Acceptance criteria 1-9.

Each test records one PASS/FAIL line; the lines are printed as they happen
(visible with ``-s``) and repeated in the pytest terminal summary.
"""
import contextlib
import io
import math
import time

import pytest

from spathermo.cli import main
from spathermo.deform import HqMap, IdentityMap
from spathermo.entropy import EntropySpec
from spathermo.errors import HCViolation
from spathermo.maxent import ConstraintKind, solve
from spathermo.thermo import MUTATION_TARGETS, potentials, rspa_forward
from spathermo import verification as V

SEED = 0


@pytest.fixture
def record(request):
    def _record(criterion, ok, text):
        line = f"{'PASS' if ok else 'FAIL'}  criterion {criterion}: {text}"
        print(line)
        request.config._acceptance_lines.append(line)
    return _record


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def test_criterion_1_oracle_equivalence(record):
    insts = V.instance_set(SEED, 100)
    res, secs = _timed(lambda: V.oracle_suite(insts))
    ok = res.passed and res.count == 200 and secs <= 60.0
    record(1, ok, f"closed form vs oracle, {res.count} solves, worst TV {res.worst:.2e} "
                  f"(tol 1e-6), {secs:.1f}s (limit 60s)")
    assert res.count == 200
    assert res.passed, res.detail
    assert secs <= 60.0


def test_criterion_2_diagram_closure(record):
    res, secs = _timed(lambda: V.diagram_suite(V.default_maps(), SEED, 50))
    ok = all(r.passed and r.count == 50 for r in res) and secs <= 120.0
    worst = max(r.worst for r in res)
    record(2, ok, f"three paths agree on 5 maps x 50 instances, worst discrepancy/tolerance "
                  f"{worst:.2e}, {secs:.1f}s (limit 120s)")
    for r in res:
        assert r.count == 50, r.name
        assert r.passed, (r.name, r.detail)
    assert secs <= 120.0


def test_criterion_3_ec_duality(record):
    insts = V.instance_set(SEED, 100)
    res = []
    for hmap in [IdentityMap(), HqMap(0.3), HqMap(0.7), HqMap(1.5)]:
        res += V.duality_suite(insts, hmap)
    ok = all(r.passed and r.count == 100 for r in res)
    worst = max(r.worst for r in res)
    record(3, ok, f"escort at alpha vs linear at 1/alpha on criterion-1 instances, "
                  f"worst discrepancy/tolerance {worst:.2e} (1e-8 rel, 1e-4 for C)")
    for r in res:
        assert r.count == 100, r.name
        assert r.passed, (r.name, r.detail)


def test_criterion_4_legendre_identities(record):
    res = V.legendre_suite([IdentityMap()] + V.default_maps(), SEED, 20)
    ok = all(r.passed and r.count == 20 for r in res)
    worst = max(r.worst for r in res)
    record(4, ok, f"residual ratios on step halving within [3,5] for 6 map families x 20 instances, "
                  f"worst |ratio-4| {worst:.2e}")
    for r in res:
        assert r.count == 20, r.name
        assert r.passed, r.name


def test_criterion_5_reductions(record):
    res = V.reduction_suite(SEED, count=500)
    ok = all(r.passed for r in res)
    worst = max(r.worst for r in res)
    record(5, ok, f"five reduction identities on 500 random distributions, worst {worst:.2e} (tol 1e-12)")
    for r in res:
        assert r.passed, r.name


def test_criterion_6_heat_capacity(record):
    fd = V.heat_capacity_suite(V.default_maps(), SEED, 50)
    special = V.specialized_forms_suite(V.default_maps(), SEED, 50)
    ok = fd.passed and special.passed
    record(6, ok, f"closed vs finite-difference C over {fd.count} points worst {fd.worst:.2e} (tol 1e-4); "
                  f"specialized vs generic worst {special.worst:.2e} (tol 1e-10)")
    assert fd.passed, fd.detail
    assert special.passed


def test_criterion_7_analytic_anchor(record):
    st = potentials(solve([0.0, 1.0], 1.0 / 3.0, 1.0, ConstraintKind.LINEAR), EntropySpec(1.0))
    ln2 = math.log(2.0)
    e_beta = abs(st.beta_renyi - ln2)
    e_lnZ = abs(st.lnZ_renyi - math.log(1.5))
    e_C = abs(st.C_renyi - 2 * ln2 ** 2 / 9) / (2 * ln2 ** 2 / 9)
    ok = e_beta <= 1e-9 and e_lnZ <= 1e-9 and e_C <= 1e-5
    record(7, ok, f"two-level Gibbs: |dbeta| {e_beta:.1e}, |dlnZ| {e_lnZ:.1e} (tol 1e-9), "
                  f"rel dC {e_C:.1e} (tol 1e-5)")
    assert e_beta <= 1e-9
    assert e_lnZ <= 1e-9
    assert e_C <= 1e-5


def test_criterion_8_condition_reporting(record):
    flagged = []
    for kind in ConstraintKind:
        for alpha in V.ALPHAS:
            sol = solve([0.0, 0.4, 2.0], 0.8, alpha, kind)
            rep = potentials(sol, EntropySpec(alpha, HqMap(0.7))).conditions
            flagged.append(sol.degenerate and rep.beta == 0.0 and not rep.lsr_ok)
    errs = []
    for q in (0.3, 0.7, 1.5):
        hmap = HqMap(q)
        for inst in V.map_instances(hmap, SEED, 50):
            for kind in ConstraintKind:
                st = potentials(solve(inst.levels, inst.U, inst.alpha, kind), EntropySpec(inst.alpha, hmap))
                if st.C_renyi is None:
                    continue
                closed = 1.0 - (1.0 - q) * st.C_renyi
                errs.append(abs(st.conditions.hc_margin / hmap.d1(st.R_hat) - closed))
    # a heat capacity sitting exactly on C = 1/(1-q) must be reported as a violation
    with pytest.raises(HCViolation):
        rspa_forward(0.4, 1.0, 0.0, 0.0, 1.0 / (1.0 - 0.7), HqMap(0.7))
    worst = max(errs)
    ok = all(flagged) and worst <= 1e-10
    record(8, ok, f"degenerate point flagged in {sum(flagged)}/{len(flagged)} cases; "
                  f"HC margin vs h'(1-(1-q)C) worst {worst:.2e} over {len(errs)} states (tol 1e-10)")
    assert all(flagged)
    assert worst <= 1e-10


def _verify(*extra):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = main(["verify", *extra])
    return code, buf.getvalue()


def test_criterion_9_cli_contract(record):
    code, out = _verify()
    survivors = []
    for target in MUTATION_TARGETS:
        mcode, _ = _verify("--mutate", target)
        if mcode == 0:
            survivors.append(target)
    ok = code == 0 and not survivors
    record(9, ok, f"verify exits {code} with default seed; {len(MUTATION_TARGETS) - len(survivors)}/"
                  f"{len(MUTATION_TARGETS)} transform mutations (1e-3 rel) detected")
    assert code == 0, out
    assert not survivors
