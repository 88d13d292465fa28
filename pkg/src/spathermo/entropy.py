"""Renyi entropy and its strongly pseudo-additive (SPA) transforms, in nats."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .deform import LIMIT_EPS, DeformationMap, HqMap, IdentityMap, SupraMap
from .errors import DomainError
from .simplex import as_distribution


@dataclass(frozen=True)
class EntropySpec:
    """An SPA entropy H = h(R_alpha): Renyi order plus deformation map."""

    alpha: float
    map: DeformationMap = field(default_factory=IdentityMap)

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")

    def with_alpha(self, alpha: float) -> "EntropySpec":
        return EntropySpec(alpha, self.map)

    def to_config(self) -> dict:
        return {"alpha": self.alpha, "map": self.map.to_config()}


def _log_power_sum(p: np.ndarray, alpha: float) -> float:
    """ln sum_k p_k^alpha over the positive entries."""
    pos = p[p > 0]
    return float(logsumexp(alpha * np.log(pos)))


def shannon(P) -> float:
    p = as_distribution(P)
    pos = p[p > 0]
    return float(-(pos * np.log(pos)).sum())


def renyi(P, alpha: float) -> float:
    """R_alpha(P) = ln(sum p^alpha)/(1 - alpha); Shannon entropy at alpha = 1."""
    if not alpha > 0:
        raise ValueError(f"Renyi order must be positive, got {alpha}")
    if abs(alpha - 1.0) < LIMIT_EPS:
        return shannon(P)
    p = as_distribution(P)
    return _log_power_sum(p, alpha) / (1.0 - alpha)


def tsallis(P, q: float) -> float:
    """(1 - sum p^q)/(q - 1), evaluated directly from the power sum."""
    p = as_distribution(P)
    if abs(q - 1.0) < LIMIT_EPS:
        return shannon(p)
    pos = p[p > 0]
    return float((1.0 - np.sum(pos ** q)) / (q - 1.0))


def spa_entropy(P, spec: EntropySpec) -> float:
    """H_alpha(P) = h(R_alpha(P))."""
    R = renyi(P, spec.alpha)
    if not spec.map.in_domain(R):
        raise DomainError(
            f"Renyi entropy {R!r} outside domain {spec.map.domain} of {spec.map!r}",
            R, spec.map.domain)
    return spec.map.eval(R)


def sharma_mittal(P, alpha: float, q: float) -> float:
    return spa_entropy(P, EntropySpec(alpha, HqMap(q)))


def supra_extensive(P, alpha: float, r: float) -> float:
    return spa_entropy(P, EntropySpec(alpha, SupraMap(alpha, r)))
