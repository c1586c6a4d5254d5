"""Closed-form floating-point operation counts for the solvers.

Counts are exact rationals (:class:`fractions.Fraction`) so that ratios
between solvers can be compared without rounding.  Symbols: ``q`` added
columns, ``k`` existing columns, ``l`` training rows, ``c`` outputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

__all__ = [
    "FlopModel",
    "ALGORITHMS",
    "flops_per_update",
    "flops_init",
    "dominant_flops",
    "dominant_ratio_genchol_chol",
]

ALGORITHMS = ("gen-inv", "ridge-inv", "gen-chol", "chol", "chol-plain", "standard")

_TWO_THIRDS = Fraction(2, 3)


@dataclass(frozen=True)
class FlopModel:
    """Problem sizes for one update of ``q`` columns onto ``k`` existing ones."""

    q: int
    k: int
    l: int
    c: int

    def __post_init__(self):
        for name in ("q", "k", "l", "c"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")


def _check(algorithm: str) -> None:
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")


def flops_per_update(model: FlopModel, algorithm: str) -> Fraction:
    """Flops for one incremental update.

    ``chol`` (stable inner matrix) costs the factorized baseline plus the
    ``q^2 k`` of ``lam D^T D`` and minus the ``2cqk`` saved by forming
    ``C^T Y`` instead of ``H^T A W``.  ``standard`` is a full re-solve with
    ``k + q`` columns.
    """
    _check(algorithm)
    q, k, l, c = (Fraction(v) for v in (model.q, model.k, model.l, model.c))
    if algorithm == "gen-inv":
        return (6 * q * k + 3 * q**2 + 2 * c * q) * l + 2 * c * q * k + q**3
    if algorithm == "ridge-inv":
        return flops_per_update(model, "gen-inv") + q**2 * k
    if algorithm == "gen-chol":
        return ((4 * q * k + q**2 + 2 * c * q) * l + 2 * q * k**2
                + (q**2 + 4 * c * q) * k + _TWO_THIRDS * q**3 + 2 * c * q**2)
    if algorithm == "chol":
        return flops_per_update(model, "gen-chol") + q**2 * k - 2 * c * q * k
    if algorithm == "chol-plain":
        return ((2 * q * k + q**2 + 2 * c * q) * l + 2 * q * k**2
                + (2 * q**2 + 4 * c * q) * k + _TWO_THIRDS * q**3 + 2 * c * q**2)
    kk = k + q
    return kk**2 * l + kk**3 / 3 + 2 * kk * l * c + 2 * kk**2 * c


def flops_init(model: FlopModel, algorithm: str) -> Fraction:
    """Flops to initialize from ``k`` columns (``q`` is ignored)."""
    _check(algorithm)
    k, l, c = (Fraction(v) for v in (model.k, model.l, model.c))
    if algorithm in ("gen-inv", "ridge-inv"):
        return 3 * k**2 * l + k**3 + 2 * k * l * c
    return k**2 * l + _TWO_THIRDS * k**3 + 2 * k * l * c + 2 * k**2 * c


def dominant_flops(model: FlopModel, algorithm: str) -> Fraction:
    """Leading term in ``l`` when ``c`` and ``q`` are small next to ``k`` and ``l``."""
    _check(algorithm)
    q, k, l = Fraction(model.q), Fraction(model.k), Fraction(model.l)
    if algorithm in ("gen-inv", "ridge-inv"):
        return (6 * q * k + 3 * q**2) * l
    if algorithm in ("gen-chol", "chol"):
        return (4 * q * k + q**2) * l
    if algorithm == "chol-plain":
        return (2 * q * k + q**2) * l
    kk = k + q
    return kk**2 * l


def dominant_ratio_genchol_chol(k: int, q: int) -> Fraction:
    """``2 - 1 / (1 + 2k/q)``, the factorized-baseline to plain-update dominant ratio."""
    return 2 - 1 / (1 + 2 * Fraction(k) / Fraction(q))
