"""Probability-simplex primitives: spectra, distributions, moments and escorts.

Distributions are plain 1-d float arrays; :func:`as_distribution` validates
them. Energy spectra get a small immutable wrapper because every solver needs
the same derived numbers (spread, uniform mean, feasible interval).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SUM_ATOL = 1e-12


@dataclass(frozen=True)
class EnergySpectrum:
    """Energy levels of an n-state system, n >= 2 with at least two distinct values."""

    levels: tuple

    def __init__(self, levels):
        arr = np.asarray(levels, dtype=float).ravel()
        if arr.size < 2:
            raise ValueError(f"spectrum needs at least 2 levels, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("spectrum levels must be finite")
        if np.ptp(arr) == 0.0:
            raise ValueError("spectrum needs at least two distinct levels")
        object.__setattr__(self, "levels", tuple(float(x) for x in arr))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.levels)

    @property
    def n(self) -> int:
        return len(self.levels)

    @property
    def spread(self) -> float:
        return max(self.levels) - min(self.levels)

    @property
    def uniform_mean(self) -> float:
        return float(np.mean(self.levels))

    def is_feasible(self, U: float) -> bool:
        return min(self.levels) < U < max(self.levels)

    def __len__(self):
        return len(self.levels)


def as_spectrum(eps) -> EnergySpectrum:
    return eps if isinstance(eps, EnergySpectrum) else EnergySpectrum(eps)


def as_distribution(p, atol: float = SUM_ATOL) -> np.ndarray:
    """Return ``p`` as a float array after checking it lies on the simplex."""
    arr = np.asarray(p, dtype=float).ravel()
    if arr.size < 1:
        raise ValueError("empty distribution")
    if np.any(~np.isfinite(arr)) or np.any(arr < 0):
        raise ValueError("distribution entries must be finite and nonnegative")
    if abs(arr.sum() - 1.0) > atol:
        raise ValueError(f"distribution sums to {arr.sum()!r}, not 1")
    return arr


def uniform(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def _check_lengths(p, e):
    if p.shape != e.shape:
        raise ValueError(f"length mismatch: distribution {p.size}, spectrum {e.size}")


def linear_mean(P, eps) -> float:
    """Linear (first-choice) expectation sum_i p_i e_i."""
    p = as_distribution(P)
    e = as_spectrum(eps).array
    _check_lengths(p, e)
    return float(p @ e)


def escort(P, alpha: float) -> np.ndarray:
    """alpha-escort distribution p_i^alpha / sum_j p_j^alpha.

    Zero entries stay zero for every alpha > 0. Powers are taken in log space
    and the result is renormalized so it sums to 1 to machine precision.
    """
    if not alpha > 0:
        raise ValueError(f"escort order must be positive, got {alpha}")
    p = as_distribution(P)
    out = np.zeros_like(p)
    pos = p > 0
    lw = alpha * np.log(p[pos])
    w = np.exp(lw - lw.max())
    out[pos] = w / w.sum()
    return out / out.sum()


def escort_inverse(P, alpha: float) -> np.ndarray:
    """Distribution whose alpha-escort is ``P``."""
    if not alpha > 0:
        raise ValueError(f"escort order must be positive, got {alpha}")
    return escort(P, 1.0 / alpha)


def escort_mean(P, eps, alpha: float) -> float:
    """Escort (third-choice) expectation sum_i P^(alpha)_i e_i."""
    e = as_spectrum(eps).array
    pa = escort(P, alpha)
    _check_lengths(pa, e)
    return float(pa @ e)


def total_variation(P, Q) -> float:
    return 0.5 * float(np.abs(np.asarray(P, float) - np.asarray(Q, float)).sum())
