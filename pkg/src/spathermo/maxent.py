"""Maximum-entropy distributions under linear and escort energy constraints.

Linear constraint, order a (a != 1)::

    p_i = exp(-R) [1 - (a-1)/a * beta * (e_i - U)]_+ ^ (1/(a-1))

with beta the root of sum_i w_i (e_i - U) = 0, w_i the bracket power, and
exp(R) = sum_i w_i. At a = 1 this is the Gibbs form p_i ~ exp(-beta e_i).

The escort problem of order a is solved by the linear problem of order 1/a
followed by an escort of order 1/a; the escort closed form
``p_i ~ [1 - (1-a) beta (e_i - U)]_+ ^ (1/(1-a))`` is used as a cross-check
and, with ``method="direct"``, as an independent root-finding route.

:func:`solve_oracle` maximizes Renyi entropy numerically with SLSQP and knows
nothing about the closed forms; it exists to check them.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq, minimize
from scipy.special import logsumexp

from .entropy import EntropySpec, renyi
from .errors import ConsistencyError, DomainError, InfeasibleEnergyError, SolverFailure
from .simplex import EnergySpectrum, as_spectrum, escort, escort_mean, uniform


class ConstraintKind(str, enum.Enum):
    LINEAR = "linear"
    ESCORT = "escort"

    @property
    def other(self) -> "ConstraintKind":
        return ConstraintKind.ESCORT if self is ConstraintKind.LINEAR else ConstraintKind.LINEAR


@dataclass(frozen=True)
class SolverConfig:
    beta_bracket_limit: float = 1e6
    root_tol: float = 1e-12
    max_iter: int = 200
    fd_step_rel: float = 1e-5
    limit_eps: float = 1e-8

    def __post_init__(self):
        for name in ("beta_bracket_limit", "root_tol", "max_iter", "fd_step_rel", "limit_eps"):
            if not getattr(self, name) > 0:
                raise ValueError(f"SolverConfig.{name} must be positive")


DEFAULT_CONFIG = SolverConfig()


@dataclass(frozen=True)
class MaxEntSolution:
    P_hat: np.ndarray
    U: float
    alpha: float
    constraint: ConstraintKind
    R_hat: float
    beta_renyi: float
    support_mask: np.ndarray
    degenerate: bool
    spectrum: EnergySpectrum
    spec: EntropySpec | None = None

    @property
    def n(self) -> int:
        return self.P_hat.size

    def mean(self) -> float:
        """Energy mean under this solution's own constraint kind."""
        if self.constraint is ConstraintKind.LINEAR:
            return float(self.P_hat @ self.spectrum.array)
        return escort_mean(self.P_hat, self.spectrum, self.alpha)


# -- closed forms ------------------------------------------------------------

def _is_one(alpha, cfg):
    return abs(alpha - 1.0) < cfg.limit_eps


def _bracket_log_weights(dE, beta, c, expo):
    """log of [1 - c beta dE]_+ ^ expo; -inf where cut, None if a cut state would blow up."""
    x = -c * beta * dE
    with np.errstate(divide="ignore", invalid="ignore"):
        lb = np.log1p(x)
    cut = ~(x > -1.0)
    if expo > 0:
        lw = np.where(cut, -np.inf, expo * lb)
    else:
        if np.any(cut):
            return None
        lw = expo * lb
    return lw


def linear_log_weights(dE, beta, alpha, cfg=DEFAULT_CONFIG):
    """log w_i for the linear-constraint ME form at coldness ``beta``."""
    if _is_one(alpha, cfg):
        return -beta * dE
    return _bracket_log_weights(dE, beta, (alpha - 1.0) / alpha, 1.0 / (alpha - 1.0))


def escort_log_weights(dE, beta, alpha, cfg=DEFAULT_CONFIG):
    """log of [1 - (1-a) beta dE]_+ ^ (1/(1-a)), the escort-constraint ME form."""
    if _is_one(alpha, cfg):
        return -beta * dE
    return _bracket_log_weights(dE, beta, 1.0 - alpha, 1.0 / (1.0 - alpha))


def _normalize(lw):
    lse = logsumexp(lw)
    return np.exp(lw - lse), float(lse)


def _beta_window(dE, c, expo, cfg):
    """Open interval of admissible beta for the bracket form.

    With a negative exponent every bracket must stay positive, which bounds
    beta on both sides; otherwise the cutoff absorbs any beta.
    """
    lim = cfg.beta_bracket_limit
    if expo > 0:
        return -lim, lim
    # 1 - c beta dE > 0 for all i
    lo, hi = -lim, lim
    for d in dE:
        k = c * d
        if k > 0:
            hi = min(hi, 1.0 / k)
        elif k < 0:
            lo = max(lo, 1.0 / k)
    return lo, hi


def _find_root(resid, lo_lim, hi_lim, scale, cfg, what):
    """Root of the energy residual inside the open window (lo_lim, hi_lim).

    At beta = 0 all weights are equal, so the sign of resid(0) (uniform mean
    minus U) tells on which side the root lies. The bracket grows
    geometrically from 1/scale on that side; a finite window edge is then
    approached from inside.
    """
    f0 = resid(0.0)
    if f0 == 0.0:
        return 0.0
    side = 1.0 if f0 > 0 else -1.0
    edge = hi_lim if side > 0 else lo_lim
    a, b = 0.0, 1.0 / scale
    bracket = None
    while b < abs(edge):
        fb = resid(side * b)
        if (fb > 0) != (f0 > 0):
            bracket = (a, side * b)
            break
        a, b = side * b, 2.0 * b
    if bracket is None and abs(edge) < cfg.beta_bracket_limit:
        for k in range(1, 60):
            x = edge * (1.0 - 10.0 ** (-k / 2.0))
            if abs(x) <= abs(a):
                continue
            fx = resid(x)
            if (fx > 0) != (f0 > 0):
                bracket = (a, x)
                break
            a = x
    if bracket is None:
        raise SolverFailure(
            f"{what}: no sign change of the energy residual within |beta| <= {min(abs(edge), cfg.beta_bracket_limit):g}")
    lo, hi = sorted(bracket)
    return brentq(resid, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                  maxiter=max(cfg.max_iter, 100))


def _check_feasible(eps: EnergySpectrum, U: float, alpha: float):
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if not eps.is_feasible(U):
        raise InfeasibleEnergyError(
            f"U={U!r} outside the open feasible interval ({min(eps.levels)}, {max(eps.levels)})")


def _degenerate(eps, U, alpha, kind, cfg):
    if abs(U - eps.uniform_mean) <= cfg.root_tol * eps.spread:
        n = eps.n
        return MaxEntSolution(uniform(n), float(U), float(alpha), kind, math.log(n), 0.0,
                              np.ones(n, bool), True, eps)
    return None


def _post_check(sol: MaxEntSolution, cfg):
    R = renyi(sol.P_hat, sol.alpha)
    if abs(R - sol.R_hat) > 1e-9 * max(1.0, abs(R)):
        raise ConsistencyError(f"self-consistency failed: ln sum w = {sol.R_hat!r}, R(P) = {R!r}")
    resid = abs(sol.mean() - sol.U)
    if resid > cfg.root_tol * sol.spectrum.spread:
        raise ConsistencyError(f"energy constraint residual {resid:.3e} too large")


def solve_linear_renyi(eps, U: float, alpha: float, cfg: SolverConfig = DEFAULT_CONFIG) -> MaxEntSolution:
    """Maximize R_alpha subject to sum p_i e_i = U."""
    eps = as_spectrum(eps)
    _check_feasible(eps, U, alpha)
    deg = _degenerate(eps, U, alpha, ConstraintKind.LINEAR, cfg)
    if deg is not None:
        return deg
    dE = eps.array - U

    def resid(beta):
        lw = linear_log_weights(dE, beta, alpha, cfg)
        p, _ = _normalize(lw)
        return float(p @ dE)

    if _is_one(alpha, cfg):
        lo_lim, hi_lim = -cfg.beta_bracket_limit, cfg.beta_bracket_limit
    else:
        lo_lim, hi_lim = _beta_window(dE, (alpha - 1.0) / alpha, 1.0 / (alpha - 1.0), cfg)
    beta = _find_root(resid, lo_lim, hi_lim, eps.spread, cfg, "linear solve")
    p, lse = _normalize(linear_log_weights(dE, beta, alpha, cfg))
    sol = MaxEntSolution(p, float(U), float(alpha), ConstraintKind.LINEAR, lse, float(beta),
                         p > 0, False, eps)
    _post_check(sol, cfg)
    return sol


def _escort_closed_form(dE, beta, alpha, cfg):
    lw = escort_log_weights(dE, beta, alpha, cfg)
    if lw is None:
        return None
    return _normalize(lw)


def solve_escort_renyi(eps, U: float, alpha: float, cfg: SolverConfig = DEFAULT_CONFIG,
                       method: str = "duality") -> MaxEntSolution:
    """Maximize R_alpha subject to sum P^(alpha)_i e_i = U.

    ``method="duality"`` solves the linear problem of order 1/alpha and takes
    its escort of order 1/alpha, then checks the result against the direct
    escort closed form. ``method="direct"`` root-finds the escort closed form
    on its own.
    """
    eps = as_spectrum(eps)
    _check_feasible(eps, U, alpha)
    deg = _degenerate(eps, U, alpha, ConstraintKind.ESCORT, cfg)
    if deg is not None:
        return deg
    dE = eps.array - U
    if method == "duality":
        lin = solve_linear_renyi(eps, U, 1.0 / alpha, cfg)
        p = escort(lin.P_hat, 1.0 / alpha)
        beta, R = lin.beta_renyi, lin.R_hat
        direct = _escort_closed_form(dE, beta, alpha, cfg)
        if direct is None or np.max(np.abs(direct[0] - p)) > 1e-8 or abs(direct[1] - R) > 1e-8 * max(1, abs(R)):
            raise ConsistencyError("escort closed form disagrees with the dual linear solution")
    elif method == "direct":
        def resid(beta):
            lw = escort_log_weights(dE, beta, alpha, cfg)
            if _is_one(alpha, cfg):
                pe, _ = _normalize(lw)
            else:
                # escort of order alpha of the closed form, taken in log space
                pe, _ = _normalize(alpha * lw)
            return float(pe @ dE)

        if _is_one(alpha, cfg):
            lo_lim, hi_lim = -cfg.beta_bracket_limit, cfg.beta_bracket_limit
        else:
            lo_lim, hi_lim = _beta_window(dE, 1.0 - alpha, 1.0 / (1.0 - alpha), cfg)
        beta = _find_root(resid, lo_lim, hi_lim, eps.spread, cfg, "escort solve")
        p, R = _escort_closed_form(dE, beta, alpha, cfg)
    else:
        raise ValueError(f"unknown escort method {method!r}")
    sol = MaxEntSolution(p, float(U), float(alpha), ConstraintKind.ESCORT, float(R), float(beta),
                         p > 0, False, eps)
    _post_check(sol, cfg)
    return sol


def solve(eps, U: float, alpha: float, kind, cfg: SolverConfig = DEFAULT_CONFIG, **kw) -> MaxEntSolution:
    kind = ConstraintKind(kind)
    if kind is ConstraintKind.LINEAR:
        return solve_linear_renyi(eps, U, alpha, cfg)
    return solve_escort_renyi(eps, U, alpha, cfg, **kw)


def solve_spa(eps, U: float, spec: EntropySpec, kind, cfg: SolverConfig = DEFAULT_CONFIG,
              **kw) -> MaxEntSolution:
    """ME solution for H = h(R_alpha); h is increasing so the optimizer is Renyi's."""
    sol = solve(eps, U, spec.alpha, kind, cfg, **kw)
    if not spec.map.in_domain(sol.R_hat):
        raise DomainError(
            f"equilibrium Renyi entropy {sol.R_hat!r} outside domain {spec.map.domain} of {spec.map!r}",
            sol.R_hat, spec.map.domain)
    return replace(sol, spec=spec)


# -- numerical oracle --------------------------------------------------------

def _feasible_start(e, U, rng):
    """Random point of {p >= 0, sum p = 1, sum p e = U} via a two-point mixture."""
    n = e.size
    lo_idx = np.flatnonzero(e < U)
    hi_idx = np.flatnonzero(e > U)
    a = rng.dirichlet(np.ones(lo_idx.size))
    b = rng.dirichlet(np.ones(hi_idx.size))
    ea, eb = a @ e[lo_idx], b @ e[hi_idx]
    t = (U - ea) / (eb - ea)
    p = np.zeros(n)
    p[lo_idx] += (1 - t) * a
    p[hi_idx] += t * b
    # pull toward the interior without leaving the constraint set
    mid = np.zeros(n)
    s_lo, s_hi = np.full(lo_idx.size, 1 / lo_idx.size), np.full(hi_idx.size, 1 / hi_idx.size)
    tm = (U - s_lo @ e[lo_idx]) / (s_hi @ e[hi_idx] - s_lo @ e[lo_idx])
    mid[lo_idx] += (1 - tm) * s_lo
    mid[hi_idx] += tm * s_hi
    eq = e == U
    if eq.any():
        w = rng.uniform(0.05, 0.3)
        p = (1 - w) * p
        mid = (1 - w) * mid
        p[eq] += w / eq.sum()
        mid[eq] += w / eq.sum()
    return 0.7 * p + 0.3 * mid


def _power_objective(alpha, limit_eps):
    """A strictly concave-or-convex surrogate ranking distributions like R_alpha."""
    if abs(alpha - 1.0) < limit_eps:
        def f(p):
            q = np.clip(p, 1e-300, None)
            return float(np.sum(q * np.log(q)))

        def g(p):
            q = np.clip(p, 1e-300, None)
            return np.log(q) + 1.0
        return f, g
    sign = 1.0 if alpha > 1 else -1.0

    def f(p):
        q = np.clip(p, 0, None)
        return sign * float(np.sum(q ** alpha))

    def g(p):
        q = np.clip(p, 1e-300, None)
        return sign * alpha * q ** (alpha - 1.0)
    return f, g


def _slsqp_search(objective, e, U, starts, rng, jac=None):
    """Multi-start SLSQP over {q >= 0, sum q = 1, sum q e = U}; best point by ``objective``."""
    cons = [
        {"type": "eq", "fun": lambda q: np.sum(q) - 1.0, "jac": lambda q: np.ones_like(q)},
        {"type": "eq", "fun": lambda q: q @ e - U, "jac": lambda q: e},
    ]
    bounds = [(0.0, 1.0)] * e.size
    best = None
    for _ in range(starts):
        q0 = _feasible_start(e, U, rng)
        res = minimize(objective, q0, jac=jac, method="SLSQP", bounds=bounds, constraints=cons,
                       options={"ftol": 1e-16, "maxiter": 2000})
        q = np.clip(res.x, 0, None)
        q = q / q.sum()
        if abs(q @ e - U) > 1e-7 * (e.max() - e.min()):
            continue
        val = objective(q)
        if best is None or val < best[0]:
            best = (val, q)
    if best is None:
        raise SolverFailure("oracle found no feasible point")
    return best[1]


def _newton_polish(p, dE, alpha, constraint_power, cfg):
    """Newton iteration on the stationarity system restricted to the support of ``p``.

    Solves grad f(x) = l0 + l1 * d/dx sum phi(x) dE together with sum x = 1
    and sum phi(x) dE = 0, where f is the power surrogate of R_alpha and
    phi(x) = x**constraint_power. Returns ``p`` unchanged if Newton fails.
    """
    idx = np.flatnonzero(p > 1e-9)
    if idx.size < 2:
        return p
    d = dE[idx]
    x = p[idx].copy()
    m = idx.size
    one = abs(alpha - 1.0) < cfg.limit_eps
    sign = 1.0 if (one or alpha > 1) else -1.0
    k = constraint_power

    def parts(x):
        if one:
            g, h = np.log(x) + 1.0, 1.0 / x
        else:
            g = sign * alpha * x ** (alpha - 1.0)
            h = sign * alpha * (alpha - 1.0) * x ** (alpha - 2.0)
        c1 = k * x ** (k - 1.0) * d
        c2 = k * (k - 1.0) * x ** (k - 2.0) * d
        return g, h, c1, c2

    g, h, c1, c2 = parts(x)
    A = np.column_stack([np.ones(m), c1])
    lam = np.linalg.lstsq(A, g, rcond=None)[0]
    for _ in range(60):
        g, h, c1, c2 = parts(x)
        F = np.concatenate([g - lam[0] - lam[1] * c1, [x.sum() - 1.0, np.sum(x ** k * d)]])
        if np.max(np.abs(F)) < 1e-14:
            break
        J = np.zeros((m + 2, m + 2))
        J[:m, :m] = np.diag(h - lam[1] * c2)
        J[:m, m] = -1.0
        J[:m, m + 1] = -c1
        J[m, :m] = 1.0
        J[m + 1, :m] = c1
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            return p
        t = 1.0
        while np.any(x + t * step[:m] <= 0) and t > 1e-8:
            t *= 0.5
        x = x + t * step[:m]
        lam = lam + t * step[m:]
        if np.any(x <= 0) or not np.all(np.isfinite(x)):
            return p
    if np.max(np.abs(F)) > 1e-10:
        return p
    out = np.zeros_like(p)
    out[idx] = x
    return out / out.sum()


def solve_oracle(eps, U: float, alpha: float, kind, cfg: SolverConfig = DEFAULT_CONFIG,
                 starts: int = 6, seed: int = 0) -> np.ndarray:
    """Brute-force maximizer of R_alpha over the feasible set (intended for n <= 6).

    The search ranks candidates with a power-sum surrogate that orders
    distributions exactly like R_alpha. For the linear constraint SLSQP runs
    over P directly; for the escort constraint it runs over Q = P^(alpha),
    in which the constraint is linear, scoring each Q through the distribution
    whose escort it is. Both are finished by a Newton polish in P-space with
    the constraint in its original form.
    """
    eps = as_spectrum(eps)
    _check_feasible(eps, U, alpha)
    kind = ConstraintKind(kind)
    e = eps.array
    dE = e - U
    rng = np.random.default_rng(seed)
    f, g = _power_objective(alpha, cfg.limit_eps)
    if kind is ConstraintKind.LINEAR:
        p = _slsqp_search(f, e, U, starts, rng, jac=g)
        return _newton_polish(p, dE, alpha, 1.0, cfg)

    def objective(q):
        q = np.clip(q, 0, None)
        return f(escort(q / q.sum(), 1.0 / alpha))

    q = _slsqp_search(objective, e, U, starts, rng)
    p = escort(q, 1.0 / alpha)
    return _newton_polish(p, dE, alpha, alpha, cfg)
