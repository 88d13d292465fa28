"""Deformation maps h and the algebra they induce.

A deformation map is an increasing function with h(0) = 0. It defines the
generalized logarithm Log(u) = h(ln u), its inverse Exp(v) = exp(h^-1(v)) and
the pseudo-addition a (+) b = h(h^-1(a) + h^-1(b)).

Three concrete families are provided (identity, the q-map of Sharma-Mittal
entropy and the two-parameter supra-extensive map) plus :class:`CustomMap` for
user-supplied functions with numerically estimated derivatives.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod

from scipy.optimize import brentq

from .errors import DomainError

LIMIT_EPS = 1e-8
_INF = math.inf


class DeformationMap(ABC):
    """Increasing map h with h(0) = 0, its inverse and first two derivatives.

    ``domain`` and ``range`` are open intervals ``(lo, hi)``; the endpoints may
    be infinite. Methods raise :class:`DomainError` for arguments outside them.
    """

    family = "abstract"

    @property
    @abstractmethod
    def domain(self) -> tuple[float, float]: ...

    @property
    @abstractmethod
    def range(self) -> tuple[float, float]: ...

    @property
    def params(self) -> dict:
        return {}

    @abstractmethod
    def _eval(self, x: float) -> float: ...

    @abstractmethod
    def _inverse(self, y: float) -> float: ...

    @abstractmethod
    def _d1(self, x: float) -> float: ...

    @abstractmethod
    def _d2(self, x: float) -> float: ...

    def in_domain(self, x: float) -> bool:
        lo, hi = self.domain
        return lo < x < hi

    def in_range(self, y: float) -> bool:
        lo, hi = self.range
        return lo < y < hi

    def _check_x(self, x):
        if not self.in_domain(x):
            raise DomainError(f"{x!r} outside domain {self.domain} of {self!r}", x, self.domain)

    def _check_y(self, y):
        if not self.in_range(y):
            raise DomainError(f"{y!r} outside range {self.range} of {self!r}", y, self.range)

    def eval(self, x: float) -> float:
        self._check_x(x)
        return self._eval(float(x))

    def inverse(self, y: float) -> float:
        self._check_y(y)
        return self._inverse(float(y))

    def d1(self, x: float) -> float:
        self._check_x(x)
        return self._d1(float(x))

    def d2(self, x: float) -> float:
        self._check_x(x)
        return self._d2(float(x))

    def to_config(self) -> dict:
        return {"family": self.family, "params": self.params}

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"{type(self).__name__}({args})"

    def __eq__(self, other):
        return type(self) is type(other) and self.params == other.params

    def __hash__(self):
        return hash((type(self).__name__, tuple(sorted(self.params.items()))))


class IdentityMap(DeformationMap):
    """h(x) = x; the SPA entropy is Renyi entropy itself."""

    family = "identity"
    domain = (-_INF, _INF)
    range = (-_INF, _INF)

    def _eval(self, x):
        return x

    def _inverse(self, y):
        return y

    def _d1(self, x):
        return 1.0

    def _d2(self, x):
        return 0.0


class HqMap(DeformationMap):
    """h_q(x) = (exp((1-q) x) - 1)/(1-q); identity at q = 1.

    Gives Sharma-Mittal entropy when applied to Renyi entropy. For q < 1 the
    range is bounded below by -1/(1-q), for q > 1 bounded above by 1/(q-1).
    """

    family = "hq"

    def __init__(self, q: float):
        if not q > 0:
            raise ValueError(f"q must be positive, got {q}")
        self.q = float(q)
        self._k = 1.0 - self.q
        self._lim = abs(self._k) < LIMIT_EPS

    @property
    def params(self):
        return {"q": self.q}

    @property
    def domain(self):
        return (-_INF, _INF)

    @property
    def range(self):
        if self._lim:
            return (-_INF, _INF)
        if self._k > 0:
            return (-1.0 / self._k, _INF)
        return (-_INF, -1.0 / self._k)

    def _eval(self, x):
        if self._lim:
            return x
        return math.expm1(self._k * x) / self._k

    def _inverse(self, y):
        if self._lim:
            return y
        return math.log1p(self._k * y) / self._k

    def _d1(self, x):
        if self._lim:
            return 1.0
        return math.exp(self._k * x)

    def _d2(self, x):
        if self._lim:
            return 0.0
        return self._k * math.exp(self._k * x)


class SupraMap(DeformationMap):
    """s_{a,r}(x) = ((1 + (1-r) x)^((1-a)/(1-r)) - 1)/(1-a).

    Equals h_a o h_r^-1; collapses to the identity when r == a and to h_a
    when r == 1. Defined where 1 + (1-r) x > 0.
    """

    family = "supra"

    def __init__(self, alpha: float, r: float):
        if not (alpha > 0 and r > 0):
            raise ValueError(f"alpha and r must be positive, got {alpha}, {r}")
        self.alpha = float(alpha)
        self.r = float(r)
        self._ka = 1.0 - self.alpha
        self._kr = 1.0 - self.r
        self._a1 = abs(self._ka) < LIMIT_EPS
        self._r1 = abs(self._kr) < LIMIT_EPS
        # r == a: the power is 1 and the map is x itself on the whole line
        self._id = abs(self.alpha - self.r) < LIMIT_EPS

    @property
    def params(self):
        return {"alpha": self.alpha, "r": self.r}

    @property
    def domain(self):
        if self._r1 or self._id:
            return (-_INF, _INF)
        if self._kr > 0:
            return (-1.0 / self._kr, _INF)
        return (-_INF, -1.0 / self._kr)

    @property
    def range(self):
        if self._id:
            return (-_INF, _INF)
        if self._r1:
            return HqMap(self.alpha).range
        # image of base = 1 + (1-r) x over (0, inf)
        if self._a1:
            at_zero, at_inf = -math.copysign(_INF, self._kr), math.copysign(_INF, self._kr)
        elif self._ka / self._kr > 0:
            at_zero, at_inf = -1.0 / self._ka, math.copysign(_INF, self._ka)
        else:
            at_zero, at_inf = math.copysign(_INF, self._ka), -1.0 / self._ka
        return (min(at_zero, at_inf), max(at_zero, at_inf))

    def _log_base(self, x):
        return math.log1p(self._kr * x)

    def _eval(self, x):
        if self._id:
            return x
        if self._r1:
            return HqMap(self.alpha)._eval(x)
        lb = self._log_base(x)
        if self._a1:
            return lb / self._kr
        return math.expm1(self._ka / self._kr * lb) / self._ka

    def _inverse(self, y):
        if self._id:
            return y
        if self._r1:
            return HqMap(self.alpha)._inverse(y)
        if self._a1:
            lb = self._kr * y
        else:
            lb = math.log1p(self._ka * y) * self._kr / self._ka
        return math.expm1(lb) / self._kr

    def _d1(self, x):
        if self._id:
            return 1.0
        if self._r1:
            return math.exp(self._ka * x)
        t = self._ka / self._kr
        return math.exp((t - 1.0) * self._log_base(x))

    def _d2(self, x):
        if self._id:
            return 0.0
        if self._r1:
            return self._ka * math.exp(self._ka * x)
        t = self._ka / self._kr
        return (self.r - self.alpha) * math.exp((t - 2.0) * self._log_base(x))


class CustomMap(DeformationMap):
    """User-supplied h. Missing inverse/derivatives are computed numerically.

    Derivatives use central differences with step 1e-6 * max(1, |x|); the
    inverse uses Brent's method on ``domain``, expanding finite brackets
    outward from 0 when the domain is unbounded.
    """

    family = "custom"

    def __init__(self, func, inverse=None, d1=None, d2=None,
                 domain=(-_INF, _INF), range=None, params=None):
        self._f = func
        self._finv = inverse
        self._fd1 = d1
        self._fd2 = d2
        self._domain = tuple(float(v) for v in domain)
        self._range = tuple(float(v) for v in range) if range is not None else None
        self._params = dict(params or {})
        if self._f(0.0) != 0.0:
            raise ValueError("custom map must satisfy h(0) = 0")

    @property
    def params(self):
        return self._params

    @property
    def domain(self):
        return self._domain

    @property
    def range(self):
        if self._range is not None:
            return self._range
        lo, hi = self._domain
        return (self._limit(lo, -1), self._limit(hi, +1))

    def _limit(self, x, sign):
        if math.isinf(x):
            return sign * _INF
        # f is increasing; approach the open endpoint from inside
        return float(self._f(x - sign * 1e-12 * max(1.0, abs(x))))

    def _step(self, x):
        return 1e-6 * max(1.0, abs(x))

    def _eval(self, x):
        return float(self._f(x))

    def _d1(self, x):
        if self._fd1 is not None:
            return float(self._fd1(x))
        h = self._step(x)
        return (self._f(x + h) - self._f(x - h)) / (2 * h)

    def _d2(self, x):
        if self._fd2 is not None:
            return float(self._fd2(x))
        h = 1e-4 * max(1.0, abs(x))
        return (self._f(x + h) - 2 * self._f(x) + self._f(x - h)) / (h * h)

    def _inverse(self, y):
        if self._finv is not None:
            return float(self._finv(y))
        lo, hi = self._domain
        inner = lambda v, s: v - s * 1e-15 * max(1.0, abs(v))
        for k in range(1000):
            a = inner(lo, -1) if not math.isinf(lo) else -(2.0 ** k)
            b = inner(hi, +1) if not math.isinf(hi) else 2.0 ** k
            if self._f(a) <= y <= self._f(b):
                return brentq(lambda x: self._f(x) - y, a, b, xtol=1e-15, rtol=1e-15, maxiter=500)
            if not (math.isinf(lo) or math.isinf(hi)):
                break
        raise DomainError(f"could not invert custom map at {y!r}", y, self.range)


def make_map(config) -> DeformationMap:
    """Build a map from ``{"family": ..., "params": {...}}``.

    Custom maps need callables and cannot come from a plain config record;
    pass a :class:`CustomMap` instance instead.
    """
    if isinstance(config, DeformationMap):
        return config
    family = config.get("family", "identity")
    params = config.get("params", {}) or {}
    if family == "identity":
        return IdentityMap()
    if family == "hq":
        return HqMap(params["q"])
    if family == "supra":
        return SupraMap(params["alpha"], params["r"])
    if family == "custom":
        raise ValueError("custom maps must be constructed with CustomMap(...)")
    raise ValueError(f"unknown map family {family!r}")


def generalized_log(hmap: DeformationMap, u: float) -> float:
    """Log_h(u) = h(ln u) for u > 0."""
    if not u > 0:
        raise DomainError(f"generalized log needs u > 0, got {u!r}", u, (0.0, _INF))
    return hmap.eval(math.log(u))


def generalized_exp(hmap: DeformationMap, v: float) -> float:
    """Exp_h(v) = exp(h^-1(v)), inverse of :func:`generalized_log`."""
    return math.exp(hmap.inverse(v))


def pseudo_add(hmap: DeformationMap, a: float, b: float) -> float:
    """a (+) b = h(h^-1(a) + h^-1(b))."""
    s = hmap.inverse(a) + hmap.inverse(b)
    return hmap.eval(s)
