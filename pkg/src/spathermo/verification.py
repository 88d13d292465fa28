"""Randomized verification suites behind ``spa-thermo verify``.

Every suite returns a :class:`CheckResult` holding the worst discrepancy it saw
and the tolerance it was held to. Instances are drawn from a seeded generator
so reports are reproducible.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .deform import DeformationMap, HqMap, IdentityMap, SupraMap
from .entropy import EntropySpec, renyi, shannon, sharma_mittal, supra_extensive, tsallis
from .errors import DomainError, SpaThermoError
from .maxent import DEFAULT_CONFIG, ConstraintKind, SolverConfig, solve, solve_oracle
from .simplex import EnergySpectrum, total_variation
from .thermo import (BETA_GUARD, direct_spa_quantities, ec_dual, hq_heat_capacity, legendre_convergence,
                     potentials, rel_discrepancy, rspa_forward, rspa_inverse, supra_coldness,
                     supra_heat_capacity, support_stable, verify_diagram)

ALPHAS = (0.5, 0.8, 1.0, 1.5, 2.0, 3.0)
PERCENTILES = (0.3, 0.7)
LEGENDRE_STEP_REL = 2e-3


def default_maps():
    return [HqMap(0.3), HqMap(0.7), HqMap(1.5), SupraMap(2.0, 0.5), SupraMap(0.5, 2.0)]


@dataclass(frozen=True)
class Instance:
    levels: tuple
    U: float
    alpha: float

    @property
    def spectrum(self):
        return EnergySpectrum(self.levels)


def random_instance(rng, alphas=ALPHAS, n_range=(2, 5), level_range=(0.0, 2.0)) -> Instance:
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    levels = rng.uniform(*level_range, n)
    pct = float(rng.choice(PERCENTILES))
    U = float(levels.min() + pct * np.ptp(levels))
    return Instance(tuple(float(x) for x in levels), U, float(rng.choice(alphas)))


def instance_set(seed: int, count: int, **kw) -> list[Instance]:
    rng = np.random.default_rng(seed)
    return [random_instance(rng, **kw) for _ in range(count)]


NEIGHBOURHOOD_REL = 1e-3


def _neighbourhood_in_domain(hmap, sol, cfg, width_rel=NEIGHBOURHOOD_REL):
    """R at U and U +/- width * spread, under both constraints, lies in the map domain.

    This covers every finite-difference stencil the checks evaluate.
    """
    for kind in ConstraintKind:
        for k in (-1, 0, 1):
            U = sol.U + k * width_rel * sol.spectrum.spread
            try:
                R = solve(sol.spectrum, U, sol.alpha, kind, cfg).R_hat
            except SpaThermoError:
                return False
            if not hmap.in_domain(R):
                return False
    return True


def map_instances(hmap: DeformationMap, seed: int, count: int, need_nondegenerate=False,
                  cfg: SolverConfig = DEFAULT_CONFIG, max_draws: int = 5000) -> list[Instance]:
    """Instances usable with ``hmap``: the equilibrium Renyi entropy stays
    inside the map's domain over the finite-difference neighbourhood of U.

    A supra-extensive map fixes its own order, so its instances use it.
    """
    rng = np.random.default_rng(seed)
    alphas = (hmap.alpha,) if isinstance(hmap, SupraMap) else ALPHAS
    out = []
    for _ in range(max_draws):
        if len(out) == count:
            break
        inst = random_instance(rng, alphas=alphas)
        try:
            sol = solve(inst.levels, inst.U, inst.alpha, ConstraintKind.ESCORT, cfg)
        except SpaThermoError:
            continue
        if not _neighbourhood_in_domain(hmap, sol, cfg):
            continue
        if need_nondegenerate and abs(sol.beta_renyi) * sol.spectrum.spread < 1e-3:
            continue
        out.append(inst)
    return out


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst: float
    tol: float
    count: int
    detail: list = field(default_factory=list)

    def to_dict(self):
        d = asdict(self)
        d["worst"] = _finite(self.worst)
        return d

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name}: worst={self.worst:.3e} tol={self.tol:.1e} n={self.count}"


def _finite(x):
    return x if x is None or math.isfinite(x) else None


def _result(name, values, tol, detail=None):
    worst = max(values) if values else 0.0
    failed = [v for v in values if not v <= tol]
    return CheckResult(name, bool(values) and not failed, worst, tol, len(values), detail or [])


# -- suites ------------------------------------------------------------------

def oracle_suite(instances, cfg=DEFAULT_CONFIG, tol=1e-6):
    tvs, notes = [], []
    for inst in instances:
        for kind in ConstraintKind:
            try:
                sol = solve(inst.levels, inst.U, inst.alpha, kind, cfg)
                ref = solve_oracle(inst.levels, inst.U, inst.alpha, kind, cfg)
                tvs.append(total_variation(sol.P_hat, ref))
            except SpaThermoError as exc:
                tvs.append(math.inf)
                notes.append(f"{inst}: {exc}")
    return _result("oracle equivalence (total variation)", tvs, tol, notes)


def diagram_suite(maps, seed, count, cfg=DEFAULT_CONFIG):
    results = []
    for hmap in maps:
        worst = {}
        ok = True
        notes = []
        insts = map_instances(hmap, seed, count, cfg=cfg)
        for inst in insts:
            rep = verify_diagram(inst.levels, inst.U, inst.alpha, hmap, cfg)
            ok &= rep.passed
            if rep.errors:
                notes.append(rep.errors)
            for k, v in rep.discrepancies.items():
                worst[k] = max(worst.get(k, 0.0), v / rep.tolerances[k])
        w = max(worst.values()) if worst else math.inf
        results.append(CheckResult(f"diagram closure {hmap!r} (worst discrepancy / tolerance)",
                                   ok and bool(insts), w, 1.0, len(insts), notes))
    return results


def _state_pair_discrepancies(a, b):
    """Relative discrepancies between two EquilibriumStates of the same corner."""
    return {
        "P": rel_discrepancy(a.solution.P_hat, b.solution.P_hat),
        "R": rel_discrepancy(a.R_hat, b.R_hat),
        "H": rel_discrepancy(a.H_hat, b.H_hat),
        "beta": rel_discrepancy(a.beta_spa, b.beta_spa),
        "lnZ": rel_discrepancy(a.lnZ_spa, b.lnZ_spa),
        "F": rel_discrepancy(a.F_spa, b.F_spa),
        "C": rel_discrepancy(a.C_spa, b.C_spa),
    }


def duality_suite(instances, hmap, cfg=DEFAULT_CONFIG, tol=1e-8, c_tol=1e-4):
    """Escort state at alpha against the linear state at 1/alpha.

    Two comparisons: the independent escort solve against (i) the escort of
    the independent linear solve, and (ii) ec_dual applied to the linear
    state. Values are normalized by the tolerance, so pass means <= 1.
    """
    direct_vals, dual_vals, notes = [], [], []
    for inst in instances:
        try:
            a = inst.alpha
            e_sol = solve(inst.levels, inst.U, a, ConstraintKind.ESCORT, cfg, method="direct")
            l_sol = solve(inst.levels, inst.U, 1.0 / a, ConstraintKind.LINEAR, cfg)
            if e_sol.degenerate or abs(e_sol.beta_renyi) < BETA_GUARD:
                continue
            e_state = potentials(e_sol, EntropySpec(a, hmap), cfg)
            l_state = potentials(l_sol, EntropySpec(1.0 / a, hmap), cfg)
            d = _state_pair_discrepancies(e_state, l_state)
            d["P"] = rel_discrepancy(e_sol.P_hat, np.asarray(_escort(l_sol.P_hat, 1.0 / a)))
            direct_vals.append(max(v / (c_tol if k == "C" else tol) for k, v in d.items()))
            d2 = _state_pair_discrepancies(e_state, ec_dual(l_state))
            dual_vals.append(max(v / (c_tol if k == "C" else tol) for k, v in d2.items()))
        except (SpaThermoError, ValueError) as exc:
            direct_vals.append(math.inf)
            dual_vals.append(math.inf)
            notes.append(f"{inst}: {exc}")
    return [
        _result(f"E-C duality, independent solves {hmap!r} (discrepancy / tolerance)", direct_vals, 1.0, notes),
        _result(f"E-C duality, ec_dual transform {hmap!r} (discrepancy / tolerance)", dual_vals, 1.0, notes),
    ]


def _escort(p, a):
    from .simplex import escort
    return escort(p, a)


def reduction_suite(seed, count=50, tol=1e-12, extra=()):
    """Sharma-Mittal and supra-extensive special cases on random distributions."""
    rng = np.random.default_rng(seed)
    errs = {"SM(q=1) equals Renyi": [], "SM(alpha=q) equals Tsallis": [],
            "SM(alpha=q=1) equals Shannon": [], "SE(r=alpha) equals Renyi": [],
            "SE(r=1) equals Tsallis": []}
    for _ in range(count):
        n = int(rng.integers(2, 8))
        p = rng.dirichlet(np.ones(n))
        a = float(rng.choice([0.3, 0.5, 0.8, 1.5, 2.0, 3.0]))
        errs["SM(q=1) equals Renyi"].append(abs(sharma_mittal(p, a, 1.0) - renyi(p, a)))
        errs["SM(alpha=q) equals Tsallis"].append(abs(sharma_mittal(p, a, a) - tsallis(p, a)))
        errs["SM(alpha=q=1) equals Shannon"].append(abs(sharma_mittal(p, 1.0, 1.0) - shannon(p)))
        errs["SE(r=alpha) equals Renyi"].append(abs(supra_extensive(p, a, a) - renyi(p, a)))
        errs["SE(r=1) equals Tsallis"].append(abs(supra_extensive(p, a, 1.0) - tsallis(p, a)))
        for name, fn, ref in extra:
            errs.setdefault(name, []).append(abs(fn(p) - ref(p)))
    return [_result(f"reduction: {k}", v, tol) for k, v in errs.items()]


def roundtrip_error(orig, back) -> float:
    """Worst component error of a Renyi tuple (R, beta, lnZ, F, C) after a round trip.

    lnZ = R - beta U and F = -lnZ/beta can cancel to zero, so their errors are
    measured against the cancelling terms, |R| and |R/beta|; the others are relative.
    """
    R, beta = orig[0], orig[1]
    scales = (0.0, 0.0, abs(R), abs(R / beta), 0.0)
    worst = 0.0
    for x, y, s in zip(orig, back, scales):
        den = max(abs(x), abs(y), s)
        err = abs(x - y) / den if den > 0 else (0.0 if x == y else math.inf)
        worst = max(worst, err)
    return worst


def roundtrip_suite(seed, maps, count=20, tol=1e-9):
    """rspa_inverse(rspa_forward(x)) == x on random Renyi states."""
    rng = np.random.default_rng(seed)
    vals = []
    for hmap in maps:
        for _ in range(count):
            R = float(rng.uniform(0.05, 0.95))
            if not hmap.in_domain(R):
                continue
            beta = float(rng.uniform(0.2, 3.0) * rng.choice([-1, 1]))
            lnZ = R - beta * float(rng.uniform(0.2, 1.8))
            F = -lnZ / beta
            C = float(rng.uniform(0.05, 2.0))
            try:
                fwd = rspa_forward(R, beta, lnZ, F, C, hmap)
                back = rspa_inverse(*fwd, hmap)
            except SpaThermoError:
                continue
            vals.append(roundtrip_error((R, beta, lnZ, F, C), back))
    return _result("R-SPA forward/inverse round trip", vals, tol)


def heat_capacity_suite(maps, seed, count, cfg=DEFAULT_CONFIG, tol=1e-4, margin_min=1e-6):
    """Transformed SPA heat capacity against finite differences of H(U).

    Runs on the diagram-closure instances under both constraints; points
    with |HC margin| <= ``margin_min`` or no heat capacity are skipped.
    """
    vals, notes = [], []
    for hmap in maps:
        for inst in map_instances(hmap, seed, count, cfg=cfg):
            for kind in ConstraintKind:
                try:
                    sol = solve(inst.levels, inst.U, inst.alpha, kind, cfg)
                    spec = EntropySpec(inst.alpha, hmap)
                    st = potentials(sol, spec, cfg)
                    if st.C_spa is None or abs(st.conditions.hc_margin) <= margin_min:
                        continue
                    direct = direct_spa_quantities(sol, spec, cfg)
                    vals.append(rel_discrepancy(st.C_spa, direct.C))
                except (SpaThermoError, ValueError) as exc:
                    vals.append(math.inf)
                    notes.append(f"{inst} {kind.value}: {exc}")
    return _result("heat-capacity transform vs finite differences", vals, tol, notes)


def specialized_forms_suite(maps, seed, count, cfg=DEFAULT_CONFIG, tol=1e-10):
    """Closed Sharma-Mittal and supra-extensive relations against the generic transform."""
    vals = []
    for hmap in maps:
        if not isinstance(hmap, (HqMap, SupraMap)):
            continue
        for inst in map_instances(hmap, seed, count, cfg=cfg):
            for kind in ConstraintKind:
                sol = solve(inst.levels, inst.U, inst.alpha, kind, cfg)
                st = potentials(sol, EntropySpec(inst.alpha, hmap), cfg)
                R = st.R_hat
                if isinstance(hmap, SupraMap):
                    vals.append(rel_discrepancy(st.beta_spa, supra_coldness(R, st.beta_renyi, hmap.alpha, hmap.r)))
                if st.C_spa is None:
                    continue
                if isinstance(hmap, HqMap):
                    vals.append(rel_discrepancy(st.C_spa, hq_heat_capacity(R, st.C_renyi, hmap.q)))
                else:
                    vals.append(rel_discrepancy(st.C_spa, supra_heat_capacity(R, st.C_renyi, hmap.alpha, hmap.r)))
    return _result("specialized Sharma-Mittal / supra-extensive forms vs generic transform", vals, tol)


def legendre_instances(hmap, seed, count, cfg=DEFAULT_CONFIG, step_rel=LEGENDRE_STEP_REL):
    """Non-degenerate instances: beta clear of 0, fixed support and map domain on the stencil."""
    out = []
    for i, inst in enumerate(map_instances(hmap, seed, 4 * count, need_nondegenerate=True, cfg=cfg)):
        if len(out) == count:
            break
        kind = ConstraintKind.LINEAR if i % 2 else ConstraintKind.ESCORT
        try:
            sol = solve(inst.levels, inst.U, inst.alpha, kind, cfg)
        except SpaThermoError:
            continue
        step = step_rel * sol.spectrum.spread
        if abs(sol.beta_renyi) < BETA_GUARD or not support_stable(sol, 2 * step, cfg):
            continue
        lo = solve(inst.levels, inst.U - step, inst.alpha, kind, cfg)
        hi = solve(inst.levels, inst.U + step, inst.alpha, kind, cfg)
        if not (hmap.in_domain(lo.R_hat) and hmap.in_domain(hi.R_hat)):
            continue
        out.append(sol)
    return out


def legendre_suite(maps, seed, count, cfg=DEFAULT_CONFIG, step_rel=LEGENDRE_STEP_REL, band=(3.0, 5.0)):
    """Residual ratio under step halving must land in ``band``; the value
    reported is the largest distance of any ratio from 4."""
    results = []
    for hmap in maps:
        ratios = []
        sols = legendre_instances(hmap, seed, count, cfg, step_rel)
        for sol in sols:
            try:
                conv = legendre_convergence(sol, hmap, step_rel * sol.spectrum.spread, cfg)
            except (SpaThermoError, ValueError):
                ratios.append(math.inf)
                continue
            ratios.extend(v["ratio"] for v in conv.values())
        ok = bool(ratios) and all(band[0] <= r <= band[1] for r in ratios)
        worst = max((abs(r - 4.0) for r in ratios), default=math.inf)
        results.append(CheckResult(f"Legendre identities second-order convergence {hmap!r} (|ratio-4|)",
                                   ok, worst, 1.0, len(sols)))
    return results


def conditions_suite(cfg=DEFAULT_CONFIG):
    out = []
    sol = solve([0.0, 1.0, 2.0], 1.0, 2.0, ConstraintKind.LINEAR, cfg)
    st = potentials(sol, EntropySpec(2.0, HqMap(0.7)), cfg)
    rep = st.conditions
    out.append(CheckResult("conditions: degenerate point flagged (lsr_ok false, beta 0)",
                           (not rep.lsr_ok) and rep.beta == 0.0 and sol.degenerate,
                           abs(rep.beta), 0.0, 1))
    errs = []
    for q in (0.3, 0.7, 1.5):
        sol = solve([0.0, 0.7, 2.0], 0.6, 1.5, ConstraintKind.LINEAR, cfg)
        st = potentials(sol, EntropySpec(1.5, HqMap(q)), cfg)
        hm = HqMap(q)
        closed = hm.d1(sol.R_hat) * (1.0 - (1.0 - q) * st.C_renyi)
        errs.append(abs(st.conditions.hc_margin - closed))
    out.append(_result("conditions: HC margin of h_q equals h'(R)(1 - (1-q) C)", errs, 1e-10))
    return out


def anchor_suite(cfg=DEFAULT_CONFIG):
    sol = solve([0.0, 1.0], 1.0 / 3.0, 1.0, ConstraintKind.LINEAR, cfg)
    st = potentials(sol, EntropySpec(1.0), cfg)
    ln2 = math.log(2.0)
    return [
        _result("anchor: two-level beta = ln 2", [abs(st.beta_renyi - ln2)], 1e-9),
        _result("anchor: two-level ln Z = ln 3/2", [abs(st.lnZ_renyi - math.log(1.5))], 1e-9),
        _result("anchor: two-level C = 2 (ln 2)^2 / 9", [rel_discrepancy(st.C_renyi, 2 * ln2 ** 2 / 9)], 1e-5),
    ]


def run_all(seed: int = 0, maps=None, alpha=None, size: int = 8, cfg: SolverConfig = DEFAULT_CONFIG,
            extra_reductions=()) -> list[CheckResult]:
    """Everything ``spa-thermo verify`` runs; ``size`` scales instance counts."""
    maps = list(maps) if maps else default_maps()
    alphas = (alpha,) if alpha is not None else ALPHAS
    insts = instance_set(seed, size, alphas=alphas)
    results = [oracle_suite(insts, cfg)]
    results += diagram_suite(maps, seed, size, cfg)
    for hmap in [IdentityMap()] + [m for m in maps if isinstance(m, HqMap)]:
        results += duality_suite(insts, hmap, cfg)
    results += reduction_suite(seed, extra=extra_reductions)
    results.append(roundtrip_suite(seed, [IdentityMap()] + maps))
    results.append(heat_capacity_suite(maps, seed, size, cfg))
    special = [m for m in maps if isinstance(m, (HqMap, SupraMap))]
    if special:
        results.append(specialized_forms_suite(special, seed, size, cfg))
    results += legendre_suite([IdentityMap()] + maps, seed, max(2, size // 2), cfg)
    results += conditions_suite(cfg)
    results += anchor_suite(cfg)
    return results
