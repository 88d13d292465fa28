"""Legendre structure on top of ME solutions, and the dualities between formalisms.

Four formalisms are in play: Renyi or SPA entropy, each with a linear or an
escort energy constraint. The R-SPA transform maps Renyi potentials to those
of H = h(R) at a fixed constraint; the E-C dual maps (order a, escort) to
(order 1/a, linear) and back without changing any scalar potential.

Coldness beta is the Lagrange root returned by the solver. Heat capacity
needs d(beta)/dU, which is taken by central differences with re-solves at
U +/- delta, delta = fd_step_rel * spread; where the support of the ME
distribution changes inside the stencil a one-sided second-order stencil on
the side that keeps the support is used instead.
"""
from __future__ import annotations

import contextlib
import math
from dataclasses import asdict, dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .deform import DeformationMap, IdentityMap
from .entropy import EntropySpec, spa_entropy
from .errors import DegenerateStateError, HCViolation, SpaThermoError
from .maxent import (DEFAULT_CONFIG, ConstraintKind, MaxEntSolution, SolverConfig, solve,
                     solve_linear_renyi, solve_spa)
from .simplex import as_spectrum, escort

BETA_GUARD = 1e-6
HC_REL_TOL = 1e-10

# -- mutation hook -----------------------------------------------------------
# Multiplies one transform output by (1 + rel). Used to prove that the
# verification suites notice a corrupted formula; never active in normal use.

MUTATION_TARGETS = (
    "rspa.H", "rspa.beta", "rspa.lnZ", "rspa.F", "rspa.C",
    "rspa_inv.R", "rspa_inv.beta", "rspa_inv.lnZ", "rspa_inv.F", "rspa_inv.C",
    "ec.P", "ec.R", "ec.H", "ec.beta", "ec.lnZ", "ec.F", "ec.C",
)
_active_mutations: dict[str, float] = {}


@contextlib.contextmanager
def mutation(name: str, rel: float = 1e-3):
    if name not in MUTATION_TARGETS:
        raise ValueError(f"unknown mutation target {name!r}")
    _active_mutations[name] = rel
    try:
        yield
    finally:
        _active_mutations.pop(name, None)


def _mut(name, value):
    rel = _active_mutations.get(name)
    if rel is None or value is None:
        return value
    return value * (1.0 + rel)


# -- records -----------------------------------------------------------------

class ThermoQuantities(NamedTuple):
    """Equilibrium entropy and its Legendre partners in one formalism."""

    entropy: float
    beta: float
    lnZ: float
    F: float | None
    C: float | None


@dataclass(frozen=True)
class ConditionReport:
    beta: float
    dbeta_dU: float | None
    lsr_ok: bool
    hc_margin: float | None
    hc_ok: bool
    lsh_implied: bool
    beta_spa: float
    dbeta_spa_dU: float | None
    lsh_ok: bool

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class EquilibriumState:
    solution: MaxEntSolution
    spec: EntropySpec
    R_hat: float
    beta_renyi: float
    lnZ_renyi: float
    F_renyi: float | None
    C_renyi: float | None
    H_hat: float
    beta_spa: float
    lnZ_spa: float
    F_spa: float | None
    C_spa: float | None
    beta_fd: float | None = None
    dbeta_dU: float | None = None
    conditions: ConditionReport | None = None

    @property
    def degenerate(self) -> bool:
        return self.solution.degenerate or abs(self.beta_renyi) < BETA_GUARD

    @property
    def lsr_ok(self):
        return self.conditions.lsr_ok if self.conditions else None

    @property
    def lsh_ok(self):
        return self.conditions.lsh_ok if self.conditions else None

    @property
    def hc_ok(self):
        return self.conditions.hc_ok if self.conditions else None

    @property
    def renyi(self) -> ThermoQuantities:
        return ThermoQuantities(self.R_hat, self.beta_renyi, self.lnZ_renyi, self.F_renyi, self.C_renyi)

    @property
    def spa(self) -> ThermoQuantities:
        return ThermoQuantities(self.H_hat, self.beta_spa, self.lnZ_spa, self.F_spa, self.C_spa)


# -- R-SPA transforms --------------------------------------------------------

def hc_margin(hmap: DeformationMap, R_hat: float, C: float) -> float:
    """h'(R) - h''(R) C; the C transform is singular where this vanishes."""
    return hmap.d1(R_hat) - hmap.d2(R_hat) * C


def _hc_violated(margin, d1):
    return abs(margin) <= HC_REL_TOL * max(1.0, abs(d1))


def rspa_forward(R_hat, beta, lnZ, F, C, hmap: DeformationMap) -> ThermoQuantities:
    """Renyi potentials -> potentials of H = h(R) at the same constraint.

    ``F`` and ``C`` may be None (unavailable); they stay None.
    """
    h = hmap.eval(R_hat)
    d1 = hmap.d1(R_hat)
    beta_bar = d1 * beta
    lnZ_bar = h - d1 * (R_hat - lnZ)
    F_bar = None
    if F is not None:
        if beta == 0:
            raise DegenerateStateError("free energy transform needs beta != 0")
        F_bar = -(h / d1) / beta + R_hat / beta + F
    C_bar = None
    if C is not None:
        margin = d1 - hmap.d2(R_hat) * C
        if _hc_violated(margin, d1):
            raise HCViolation(f"HC condition violated: h'(R) - h''(R) C = {margin!r}", margin)
        C_bar = d1 * d1 * C / margin
    return ThermoQuantities(_mut("rspa.H", h), _mut("rspa.beta", beta_bar), _mut("rspa.lnZ", lnZ_bar),
                            _mut("rspa.F", F_bar), _mut("rspa.C", C_bar))


def rspa_inverse(H_hat, beta_spa, lnZ_spa, F_spa, C_spa, hmap: DeformationMap) -> ThermoQuantities:
    """Potentials of H = h(R) -> Renyi potentials, using g = h^-1."""
    R = hmap.inverse(H_hat)
    d1 = hmap.d1(R)
    g1 = 1.0 / d1
    g2 = -hmap.d2(R) / d1 ** 3
    beta = g1 * beta_spa
    lnZ = R - g1 * (H_hat - lnZ_spa)
    F = None
    if F_spa is not None:
        if beta_spa == 0:
            raise DegenerateStateError("free energy transform needs beta != 0")
        F = -(R / g1) / beta_spa + H_hat / beta_spa + F_spa
    C = None
    if C_spa is not None:
        margin = g1 - g2 * C_spa
        if _hc_violated(margin, g1):
            raise HCViolation(f"HC condition violated on the inverse side: {margin!r}", margin)
        C = g1 * g1 * C_spa / margin
    return ThermoQuantities(_mut("rspa_inv.R", R), _mut("rspa_inv.beta", beta), _mut("rspa_inv.lnZ", lnZ),
                            _mut("rspa_inv.F", F), _mut("rspa_inv.C", C))


def hq_heat_capacity(R_hat: float, C: float, q: float) -> float:
    """C for Sharma-Mittal entropy from (C_a)^-1 = (1-q) + e^{(1-q)R} (C_{a,q})^-1."""
    k = 1.0 - q
    return math.exp(k * R_hat) / (1.0 / C - k)


def supra_coldness(R_hat: float, beta: float, alpha: float, r: float) -> float:
    """beta_{a,r} = (1 + (1-r) R)^((1-a)/(1-r) - 1) beta_a; r != 1."""
    t = (1.0 - alpha) / (1.0 - r)
    return (1.0 + (1.0 - r) * R_hat) ** (t - 1.0) * beta


def supra_heat_capacity(R_hat: float, C: float, alpha: float, r: float) -> float:
    """C for supra-extensive entropy from (C_a)^-1 = (r-a)/b + b^(t-1) (C_{a,r})^-1,
    with b = 1 + (1-r) R and t = (1-a)/(1-r)."""
    t = (1.0 - alpha) / (1.0 - r)
    b = 1.0 + (1.0 - r) * R_hat
    return b ** (t - 1.0) / (1.0 / C - (r - alpha) / b)


# -- local sweeps in U -------------------------------------------------------

class _Stencil:
    """Re-solves at U + k*h with caching, and support-aware difference formulas."""

    def __init__(self, sol: MaxEntSolution, h: float, cfg: SolverConfig, spec: EntropySpec | None = None):
        self.sol = sol
        self.h = h
        self.cfg = cfg
        self.spec = spec
        self._cache = {0: sol}

    def at(self, k: int) -> MaxEntSolution | None:
        if k not in self._cache:
            U = self.sol.U + k * self.h
            if not self.sol.spectrum.is_feasible(U):
                self._cache[k] = None
            else:
                self._cache[k] = solve(self.sol.spectrum, U, self.sol.alpha, self.sol.constraint, self.cfg)
        return self._cache[k]

    def _same_support(self, ks):
        sols = [self.at(k) for k in ks]
        if any(s is None for s in sols):
            return False
        base = sols[0].support_mask
        return all(np.array_equal(base, s.support_mask) for s in sols[1:])

    def scheme(self, width=1):
        if self._same_support(range(-width, width + 1)):
            return "central"
        if self._same_support(range(0, 2 * width + 2)):
            return "forward"
        if self._same_support(range(-2 * width - 1, 1)):
            return "backward"
        return "central"

    def d1(self, fn, scheme=None):
        scheme = scheme or self.scheme()
        f = lambda k: fn(self.at(k))
        h = self.h
        if scheme == "central":
            return (f(1) - f(-1)) / (2 * h)
        if scheme == "forward":
            return (-3 * f(0) + 4 * f(1) - f(2)) / (2 * h)
        return (3 * f(0) - 4 * f(-1) + f(-2)) / (2 * h)

    def d2(self, fn, scheme=None):
        scheme = scheme or self.scheme()
        f = lambda k: fn(self.at(k))
        h2 = self.h * self.h
        if scheme == "central":
            return (f(1) - 2 * f(0) + f(-1)) / h2
        s = 1 if scheme == "forward" else -1
        return (2 * f(0) - 5 * f(s) + 4 * f(2 * s) - f(3 * s)) / h2

    # fourth-order five-point formulas where the support allows, else second order

    def d1_fine(self, fn):
        if self.scheme(width=2) != "central":
            return self.d1(fn)
        f = lambda k: fn(self.at(k))
        return (8 * (f(1) - f(-1)) - (f(2) - f(-2))) / (12 * self.h)

    def d2_fine(self, fn):
        if self.scheme(width=2) != "central":
            return self.d2(fn)
        f = lambda k: fn(self.at(k))
        return (16 * (f(1) + f(-1)) - 30 * f(0) - (f(2) + f(-2))) / (12 * self.h * self.h)


def _default_spec(sol, spec):
    spec = spec or sol.spec or EntropySpec(sol.alpha)
    if abs(spec.alpha - sol.alpha) > 1e-15 * max(1.0, sol.alpha):
        raise ValueError(f"entropy order {spec.alpha} does not match solution order {sol.alpha}")
    return spec


def potentials(sol: MaxEntSolution, spec: EntropySpec | None = None,
               cfg: SolverConfig = DEFAULT_CONFIG) -> EquilibriumState:
    """Full Renyi and SPA Legendre structure at one ME solution.

    F and C are None when |beta| < 1e-6; the SPA heat capacity is None when
    the HC condition fails (the report carries the margin).
    """
    spec = _default_spec(sol, spec)
    hmap = spec.map
    U = sol.U
    beta = sol.beta_renyi
    R = sol.R_hat
    st = _Stencil(sol, cfg.fd_step_rel * sol.spectrum.spread, cfg)
    scheme = st.scheme()
    beta_fd = st.d1(lambda s: s.R_hat, scheme)
    dbeta_dU = st.d1(lambda s: s.beta_renyi, scheme)
    lnZ = R - beta * U
    degenerate = sol.degenerate or abs(beta) < BETA_GUARD
    F = C = None
    if not degenerate:
        F = -lnZ / beta
        C = -beta * beta / dbeta_dU
    fwd = rspa_forward(R, beta, lnZ, F, None, hmap)
    C_bar = None
    margin = None
    hc_ok = False
    if C is not None:
        margin = hc_margin(hmap, R, C)
        hc_ok = not _hc_violated(margin, hmap.d1(R))
        if hc_ok:
            C_bar = rspa_forward(R, beta, lnZ, None, C, hmap).C

    dbeta_spa_dU = st.d1(lambda s: hmap.d1(s.R_hat) * s.beta_renyi, scheme)
    lsr_ok = (not degenerate) and abs(dbeta_dU) > 0
    lsh_ok = abs(fwd.beta) >= BETA_GUARD and abs(dbeta_spa_dU) > 0
    report = ConditionReport(
        beta=beta, dbeta_dU=dbeta_dU, lsr_ok=lsr_ok, hc_margin=margin, hc_ok=hc_ok,
        lsh_implied=lsr_ok and hc_ok, beta_spa=fwd.beta, dbeta_spa_dU=dbeta_spa_dU, lsh_ok=lsh_ok)
    return EquilibriumState(
        solution=replace(sol, spec=spec), spec=spec,
        R_hat=R, beta_renyi=beta, lnZ_renyi=lnZ, F_renyi=F, C_renyi=C,
        H_hat=fwd.entropy, beta_spa=fwd.beta, lnZ_spa=fwd.lnZ, F_spa=fwd.F, C_spa=C_bar,
        beta_fd=beta_fd, dbeta_dU=dbeta_dU, conditions=report)


def check_conditions(state: EquilibriumState, cfg: SolverConfig = DEFAULT_CONFIG) -> ConditionReport:
    """LSR, HC and LSH diagnostics; recomputed if the state carries none."""
    if state.conditions is not None:
        return state.conditions
    return potentials(state.solution, state.spec, cfg).conditions


def direct_spa_quantities(sol: MaxEntSolution, spec: EntropySpec, cfg: SolverConfig = DEFAULT_CONFIG,
                          curvature_step_rel: float = 1e-4) -> ThermoQuantities:
    """SPA potentials from H(U) alone, without the R-SPA transform.

    H is evaluated on the ME distribution itself; coldness is the derivative
    of H over U and heat capacity is -beta^2 / H''(U), with H'' taken at the
    coarser ``curvature_step_rel``. Five-point stencils are used when the
    support is stable, which keeps the error small near singular points of h.
    """
    spec = _default_spec(sol, spec)
    H = lambda s: spa_entropy(s.P_hat, spec)
    H0 = H(sol)
    fine = _Stencil(sol, cfg.fd_step_rel * sol.spectrum.spread, cfg)
    beta = fine.d1_fine(H)
    lnZ = H0 - beta * sol.U
    if abs(beta) < BETA_GUARD:
        return ThermoQuantities(H0, beta, lnZ, None, None)
    coarse = _Stencil(sol, curvature_step_rel * sol.spectrum.spread, cfg)
    curv = coarse.d2_fine(H)
    return ThermoQuantities(H0, beta, lnZ, -lnZ / beta, -beta * beta / curv)


# -- E-C duality -------------------------------------------------------------

def ec_dual(state: EquilibriumState) -> EquilibriumState:
    """(order a, kind K) -> (order 1/a, other kind); scalars carry over unchanged.

    The distribution becomes its escort of order a, the current order, in
    both directions.
    """
    sol = state.solution
    a = sol.alpha
    P = _mut("ec.P", escort(sol.P_hat, a))
    new_spec = state.spec.with_alpha(1.0 / a)
    new_sol = replace(sol, P_hat=P, alpha=1.0 / a, constraint=sol.constraint.other,
                      R_hat=_mut("ec.R", sol.R_hat), support_mask=P > 0, spec=new_spec)
    return replace(
        state, solution=new_sol, spec=new_spec,
        R_hat=new_sol.R_hat,
        H_hat=_mut("ec.H", state.H_hat),
        beta_renyi=state.beta_renyi, beta_spa=_mut("ec.beta", state.beta_spa),
        lnZ_renyi=state.lnZ_renyi, lnZ_spa=_mut("ec.lnZ", state.lnZ_spa),
        F_renyi=state.F_renyi, F_spa=_mut("ec.F", state.F_spa),
        C_renyi=state.C_renyi, C_spa=_mut("ec.C", state.C_spa))


# -- commutative diagram -----------------------------------------------------

CORNER_FIELDS = ("P", "H", "beta", "lnZ", "F", "C")
DIAGRAM_TOL = {"P": 1e-6, "H": 1e-6, "beta": 1e-6, "lnZ": 1e-6, "F": 1e-6, "C": 1e-4}


def rel_discrepancy(a, b) -> float:
    """|a - b| / max(|a|, |b|); arrays use max-norms. 0 when both vanish."""
    if a is None or b is None:
        return math.inf
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    if a.shape != b.shape:
        return math.inf
    num = float(np.max(np.abs(a - b)))
    den = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))))
    if num == 0.0:
        return 0.0
    return num / den if den > 0 else math.inf


@dataclass
class DiagramReport:
    alpha: float
    U: float
    map: dict
    corners: dict = field(default_factory=dict)
    discrepancies: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=lambda: dict(DIAGRAM_TOL))

    @property
    def passed(self) -> bool:
        if self.errors or len(self.corners) < 2:
            return False
        return all(self.discrepancies[k] <= self.tolerances[k] for k in CORNER_FIELDS)

    def to_dict(self):
        return {
            "alpha": self.alpha, "U": self.U, "map": self.map, "passed": self.passed,
            "discrepancies": self.discrepancies, "tolerances": self.tolerances,
            "errors": self.errors,
            "corners": {k: {f: (list(map(float, v[f])) if f == "P" else v[f]) for f in CORNER_FIELDS}
                        for k, v in self.corners.items()},
        }


def _corner(P, q: ThermoQuantities):
    return {"P": np.asarray(P, float), "H": q.entropy, "beta": q.beta, "lnZ": q.lnZ, "F": q.F, "C": q.C}


def verify_diagram(eps, U: float, alpha: float, hmap: DeformationMap | None = None,
                   cfg: SolverConfig = DEFAULT_CONFIG) -> DiagramReport:
    """Compute the (SPA, escort) corner along three routes and compare them.

    * ``direct``: escort closed form root-found at order alpha, potentials
      from finite differences of H(U);
    * ``via_renyi_escort``: Renyi linear at 1/alpha -> E-C dual -> R-SPA;
    * ``via_spa_linear``: Renyi linear at 1/alpha -> R-SPA -> E-C dual.
    """
    eps = as_spectrum(eps)
    hmap = hmap or IdentityMap()
    spec = EntropySpec(alpha, hmap)
    report = DiagramReport(alpha=float(alpha), U=float(U), map=hmap.to_config())

    def run(name, fn):
        try:
            report.corners[name] = fn()
        except SpaThermoError as exc:
            report.errors[name] = f"{type(exc).__name__}: {exc}"
        except (ValueError, ArithmeticError) as exc:
            report.errors[name] = f"{type(exc).__name__}: {exc}"

    def direct():
        sol = solve_spa(eps, U, spec, ConstraintKind.ESCORT, cfg, method="direct")
        return _corner(sol.P_hat, direct_spa_quantities(sol, spec, cfg))

    lin_state = {}

    def renyi_linear():
        if "s" not in lin_state:
            lin = solve_linear_renyi(eps, U, 1.0 / alpha, cfg)
            lin_state["s"] = potentials(lin, EntropySpec(1.0 / alpha, IdentityMap()), cfg)
        return lin_state["s"]

    def via_renyi_escort():
        dual = ec_dual(renyi_linear())
        q = rspa_forward(dual.R_hat, dual.beta_renyi, dual.lnZ_renyi, dual.F_renyi, dual.C_renyi, hmap)
        return _corner(dual.solution.P_hat, q)

    def via_spa_linear():
        base = renyi_linear()
        q = rspa_forward(base.R_hat, base.beta_renyi, base.lnZ_renyi, base.F_renyi, base.C_renyi, hmap)
        spa_lin = replace(base, spec=EntropySpec(base.spec.alpha, hmap), H_hat=q.entropy,
                          beta_spa=q.beta, lnZ_spa=q.lnZ, F_spa=q.F, C_spa=q.C)
        dual = ec_dual(spa_lin)
        return _corner(dual.solution.P_hat, dual.spa)

    run("direct", direct)
    run("via_renyi_escort", via_renyi_escort)
    run("via_spa_linear", via_spa_linear)

    names = list(report.corners)
    for f in CORNER_FIELDS:
        worst = 0.0
        for i in range(len(names)):
            for j in range(i + 1, len(names)):
                worst = max(worst, rel_discrepancy(report.corners[names[i]][f], report.corners[names[j]][f]))
        report.discrepancies[f] = worst
    return report


# -- Legendre identities -----------------------------------------------------

def _spa_point(sol: MaxEntSolution, hmap: DeformationMap):
    R, b = sol.R_hat, sol.beta_renyi
    H = hmap.eval(R)
    bb = hmap.d1(R) * b
    lnZ = H - bb * sol.U
    return H, bb, lnZ, -lnZ / bb


def legendre_residuals(sol: MaxEntSolution, hmap: DeformationMap, step: float,
                       cfg: SolverConfig = DEFAULT_CONFIG) -> dict:
    """Residuals of the three Legendre identities from a centred U-sweep of half-width ``step``.

    Each derivative with respect to the SPA coldness is a ratio of central
    differences over U; the exact values at the centre come from the solver.
    """
    st = _Stencil(sol, step, cfg)
    lo, hi = st.at(-1), st.at(1)
    if lo is None or hi is None:
        raise ValueError("Legendre stencil leaves the feasible interval")
    H0, b0, _, _ = _spa_point(sol, hmap)
    Hm, bm, Zm, Fm = _spa_point(lo, hmap)
    Hp, bp, Zp, Fp = _spa_point(hi, hmap)
    db = bp - bm
    dU = hi.U - lo.U
    return {
        "dH_dbeta": (Hp - Hm) / db - b0 * dU / db,
        "U_from_lnZ": -(Zp - Zm) / db - sol.U,
        "H_from_F": b0 * b0 * (Fp - Fm) / db - H0,
    }


def legendre_convergence(sol: MaxEntSolution, hmap: DeformationMap, step: float,
                         cfg: SolverConfig = DEFAULT_CONFIG) -> dict:
    """Residual ratios r(step) / r(step/2) per identity; ~4 for a second-order scheme."""
    r1 = legendre_residuals(sol, hmap, step, cfg)
    r2 = legendre_residuals(sol, hmap, step / 2, cfg)
    out = {}
    for k in r1:
        out[k] = {"residual": r1[k], "residual_half": r2[k],
                  "ratio": abs(r1[k]) / abs(r2[k]) if r2[k] != 0 else math.inf}
    return out


def support_stable(sol: MaxEntSolution, width: float, cfg: SolverConfig = DEFAULT_CONFIG) -> bool:
    """True if the ME support is unchanged on [U - width, U + width]."""
    st = _Stencil(sol, width, cfg)
    return st.scheme() == "central" and st._same_support((-1, 0, 1))
