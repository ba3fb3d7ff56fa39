"""Mixture functions xi(x) = sum_p gamma_p^2 x^p with finite support.

The mixture encodes the covariance of the random Hamiltonian on the
sphere, E H(s1) H(s2) = N xi(R(s1, s2)).  Besides evaluation and exact
term-by-term derivatives, this module classifies the curvature of
s -> xi''(s)^(-1/2) on (0, 1], which decides which solver branch applies
(at most two atoms under convexity, full RSB under concavity).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

__all__ = [
    "MixtureSpec",
    "CurvatureResult",
    "parse_mixture",
    "xi_eval",
    "xi_derivative",
    "curvature_class",
]

# Second differences below _CURVATURE_ZERO_TOL * max|f| count as zero.
_CURVATURE_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class MixtureSpec:
    """Finite coefficient table for xi(x) = sum_p gamma_p^2 x^p.

    ``coeffs`` is a sorted tuple of (degree p, gamma_p) pairs.  Entries
    with gamma_p == 0 are dropped on construction.  At least one degree
    p >= 2 with a nonzero coefficient is required; degrees must be
    distinct positive integers.
    """

    coeffs: tuple[tuple[int, float], ...]
    even_only: bool = field(init=False)
    gamma1_zero: bool = field(init=False)

    def __init__(self, coeffs: Mapping[int, float] | Iterable[tuple[int, float]]):
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        table: dict[int, float] = {}
        for p, g in items:
            if int(p) != p or p < 1:
                raise ValueError(f"degree must be an integer >= 1, got {p!r}")
            p = int(p)
            if p in table:
                raise ValueError(f"duplicate degree {p}")
            g = float(g)
            if g != 0.0:
                table[p] = g
        if not any(p >= 2 for p in table):
            raise ValueError("mixture needs at least one nonzero coefficient with p >= 2")
        object.__setattr__(self, "coeffs", tuple(sorted(table.items())))
        object.__setattr__(self, "even_only", all(p % 2 == 0 for p in table))
        object.__setattr__(self, "gamma1_zero", 1 not in table)

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.coeffs)

    @property
    def pure_degree(self) -> int | None:
        """The single degree if the mixture is pure, else None."""
        return self.coeffs[0][0] if len(self.coeffs) == 1 else None

    def gamma(self, p: int) -> float:
        for q, g in self.coeffs:
            if q == p:
                return g
        return 0.0

    def to_json_dict(self) -> dict:
        return {"coeffs": {str(p): g for p, g in self.coeffs}}

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "MixtureSpec":
        return cls({int(p): float(g) for p, g in data["coeffs"].items()})

    def as_text(self) -> str:
        return ",".join(f"{p}:{g:.17g}" for p, g in self.coeffs)


def parse_mixture(text: str) -> MixtureSpec:
    """Parse ``"p1:g1,p2:g2,..."`` into a MixtureSpec (g are gamma_p, not squared)."""
    table: dict[int, float] = {}
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            p_str, g_str = chunk.split(":")
            p, g = int(p_str), float(g_str)
        except ValueError as exc:
            raise ValueError(f"cannot parse mixture term {chunk!r}; expected 'p:gamma'") from exc
        if p in table:
            raise ValueError(f"duplicate degree {p} in {text!r}")
        table[p] = g
    return MixtureSpec(table)


def xi_eval(spec: MixtureSpec, x):
    """Evaluate xi(x) = sum gamma_p^2 x^p for |x| <= 1 (scalar or array)."""
    xs = np.asarray(x, dtype=float)
    if np.any(np.abs(xs) > 1.0):
        raise ValueError("xi is defined on [-1, 1]")
    out = np.zeros_like(xs)
    for p, g in spec.coeffs:
        out += g * g * xs**p
    return float(out) if np.isscalar(x) or xs.ndim == 0 else out


def xi_derivative(spec: MixtureSpec, x, order: int):
    """Term-by-term derivative of xi at x in [0, 1], order in {1, 2, 3}.

    Uses the 0**0 = 1 convention, so e.g. xi''(0) = 2 gamma_2^2.
    """
    if order not in (1, 2, 3):
        raise ValueError(f"derivative order must be 1, 2 or 3, got {order}")
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 0.0) or np.any(xs > 1.0):
        raise ValueError("xi derivatives are evaluated on [0, 1]")
    out = np.zeros_like(xs)
    for p, g in spec.coeffs:
        if p < order:
            continue  # falling factorial vanishes; skip to avoid 0 * x**negative
        fac = 1.0
        for j in range(order):
            fac *= p - j
        out += g * g * fac * xs ** (p - order)
    return float(out) if np.isscalar(x) or xs.ndim == 0 else out


@dataclass(frozen=True)
class CurvatureResult:
    """Curvature verdict for s -> xi''(s)^(-1/2) on (0, 1]."""

    label: str  # "convex" | "concave" | "neither"
    note: str = ""

    @property
    def is_constant(self) -> bool:
        return self.note == "constant"


def curvature_class(spec: MixtureSpec, grid_size: int = 2048) -> CurvatureResult:
    """Classify s -> xi''(s)^(-1/2) on (0, 1].

    Pure mixtures are resolved exactly (power-law curvature); otherwise a
    second-difference sign test on a uniform grid is used, with second
    differences below 1e-12 * max|f| counted as zero.  A constant function
    is reported convex with a "constant" note.
    """
    if grid_size < 3:
        raise ValueError("grid_size must be >= 3")
    p = spec.pure_degree
    if p is not None:
        if p == 2:
            return CurvatureResult("convex", "constant")
        # xi''(s)^(-1/2) ~ s^(-(p-2)/2), a convex power for p >= 3
        return CurvatureResult("convex", f"power law s^(-{p - 2}/2)")
    s = np.linspace(0.0, 1.0, grid_size + 1)[1:]
    xi2 = xi_derivative(spec, s, 2)
    if np.any(xi2 <= 0.0):
        raise ValueError("xi''(s) vanishes on (0, 1]; curvature undefined")
    f = xi2 ** (-0.5)
    d2 = f[2:] - 2.0 * f[1:-1] + f[:-2]
    tol = _CURVATURE_ZERO_TOL * float(np.max(np.abs(f)))
    has_pos = bool(np.any(d2 > tol))
    has_neg = bool(np.any(d2 < -tol))
    if has_pos and has_neg:
        return CurvatureResult("neither")
    if has_pos:
        return CurvatureResult("convex")
    if has_neg:
        return CurvatureResult("concave")
    return CurvatureResult("convex", "constant")
