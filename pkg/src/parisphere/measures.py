"""Probability measures on [0, 1] used as RSB ansatz and solver output.

Two representations:

* ``StepCDF`` -- a finite-atomic c.d.f. (the k-step RSB ansatz) stored as
  ordered jumps (q_i, m_i), right-continuous, with exact piecewise-linear
  tail integrals.
* ``FrsbClosedForm`` -- the closed-form full-RSB c.d.f.
  alpha(t) = xi'''(t) / (2 beta xi''(t)^(3/2)) on [0, q), 1 on [q, 1],
  kept symbolic, with an on-demand discretizer to StepCDF.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Union

import numpy as np
from scipy.integrate import quad

from parisphere.mixture import MixtureSpec, xi_derivative

__all__ = [
    "StepCDF",
    "FrsbClosedForm",
    "ParisiMeasure",
    "measure_from_json",
    "blend_step_cdfs",
    "l1_distance",
]

_VALUE_TOL = 1e-12  # absolute tolerance for invariant checks on real values


@dataclass(frozen=True)
class StepCDF:
    """Finite-atomic c.d.f.: alpha(s) = 0 for s < q_1 and m_i on [q_i, q_{i+1}).

    ``jumps`` is an ordered tuple of (q_i, m_i) with
    0 <= q_1 < ... < q_k < 1 and 0 < m_1 < ... < m_k = 1 (q_{k+1} := 1).
    """

    jumps: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.jumps:
            raise ValueError("StepCDF needs at least one jump")
        jumps = tuple((float(q), float(m)) for q, m in self.jumps)
        qs = [q for q, _ in jumps]
        ms = [m for _, m in jumps]
        if qs[0] < 0.0 or qs[-1] >= 1.0:
            raise ValueError("jump locations must satisfy 0 <= q_1 and q_k < 1")
        if any(b - a <= 0.0 for a, b in zip(qs, qs[1:])):
            raise ValueError("jump locations must be strictly increasing")
        if ms[0] <= 0.0 or any(b - a <= 0.0 for a, b in zip(ms, ms[1:])):
            raise ValueError("cumulative values must be strictly increasing and positive")
        if abs(ms[-1] - 1.0) > _VALUE_TOL:
            raise ValueError("last cumulative value must equal 1")
        if ms[-1] != 1.0:
            jumps = jumps[:-1] + ((jumps[-1][0], 1.0),)
        object.__setattr__(self, "jumps", jumps)

    @cached_property
    def locations(self) -> np.ndarray:
        return np.array([q for q, _ in self.jumps])

    @cached_property
    def values(self) -> np.ndarray:
        return np.array([m for _, m in self.jumps])

    @cached_property
    def _tails(self) -> np.ndarray:
        # tail integral at each breakpoint, plus 0 at s = 1
        locs = np.append(self.locations, 1.0)
        seg = self.values * np.diff(locs)
        return np.append(np.cumsum(seg[::-1])[::-1], 0.0)

    @property
    def k(self) -> int:
        return len(self.jumps)

    def cdf_at(self, s: float) -> float:
        """Right-continuous evaluation alpha(s)."""
        if not 0.0 <= s <= 1.0:
            raise ValueError("s must lie in [0, 1]")
        i = int(np.searchsorted(self.locations, s, side="right")) - 1
        return 0.0 if i < 0 else float(self.values[i])

    def cdf_left(self, s: float) -> float:
        """Left limit alpha(s-); equals the measure of [0, s)."""
        if not 0.0 <= s <= 1.0:
            raise ValueError("s must lie in [0, 1]")
        i = int(np.searchsorted(self.locations, s, side="left")) - 1
        return 0.0 if i < 0 else float(self.values[i])

    def tail_integral(self, s: float) -> float:
        """Exact piecewise-linear tail integral int_s^1 alpha(r) dr."""
        if not 0.0 <= s <= 1.0:
            raise ValueError("s must lie in [0, 1]")
        locs = self.locations
        i = int(np.searchsorted(locs, s, side="right")) - 1
        if i < 0:
            return float(self._tails[0])
        return float(self._tails[i] - self.values[i] * (s - locs[i]))

    def support_min(self) -> float:
        """Smallest atom location carrying positive mass."""
        prev = 0.0
        for q, m in self.jumps:
            if m - prev > 0.0:
                return q
            prev = m
        return self.jumps[-1][0]

    def mass_of_zero(self) -> float:
        """Mass of the atom at 0 (m_1 when q_1 == 0, else 0)."""
        q1, m1 = self.jumps[0]
        return m1 if q1 == 0.0 else 0.0

    def total_integral(self) -> float:
        return float(self._tails[0])

    def to_json_dict(self) -> dict:
        return {"type": "atomic", "jumps": [[q, m] for q, m in self.jumps]}

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "StepCDF":
        return cls(tuple((float(q), float(m)) for q, m in data["jumps"]))

    @classmethod
    def delta_zero(cls) -> "StepCDF":
        return cls(((0.0, 1.0),))


@dataclass(frozen=True)
class FrsbClosedForm:
    """Closed-form full-RSB c.d.f. with density part on [0, q) and a jump at q.

    alpha(t) = xi'''(t) / (2 beta xi''(t)^(3/2)) for t in [0, q), 1 on [q, 1].
    Requires q in (0, 1) and alpha(q-) <= 1 so the jump at q is non-negative.
    """

    mixture: MixtureSpec
    beta: float
    q: float

    def __post_init__(self):
        if not 0.0 < self.q < 1.0:
            raise ValueError("q must lie in (0, 1)")
        if self.beta <= 0.0:
            raise ValueError("beta must be positive")
        if self._density_cdf(self.q) > 1.0 + _VALUE_TOL:
            raise ValueError("alpha(q-) exceeds 1; not a valid c.d.f.")

    def _density_cdf(self, t: float) -> float:
        xi2 = xi_derivative(self.mixture, t, 2)
        xi3 = xi_derivative(self.mixture, t, 3)
        return xi3 / (2.0 * self.beta * xi2**1.5)

    @property
    def has_density(self) -> bool:
        """True when xi''' > 0 on (0, q), i.e. some degree p >= 3 is present."""
        return any(p >= 3 for p in self.mixture.degrees)

    def cdf_at(self, s: float) -> float:
        if not 0.0 <= s <= 1.0:
            raise ValueError("s must lie in [0, 1]")
        return self._density_cdf(s) if s < self.q else 1.0

    def cdf_left(self, s: float) -> float:
        if not 0.0 <= s <= 1.0:
            raise ValueError("s must lie in [0, 1]")
        return self._density_cdf(s) if s <= self.q else 1.0

    def tail_integral(self, s: float) -> float:
        """Tail integral via adaptive quadrature of the density part plus the jump."""
        if not 0.0 <= s <= 1.0:
            raise ValueError("s must lie in [0, 1]")
        if s >= self.q:
            return 1.0 - s
        part, _ = quad(self._density_cdf, s, self.q, epsabs=1e-12, limit=200)
        return part + (1.0 - self.q)

    def support_min(self) -> float:
        return 0.0 if self.has_density else self.q

    def mass_of_zero(self) -> float:
        return self.cdf_at(0.0)

    def discretize(self, resolution: int = 1000) -> StepCDF:
        """Step approximation: midpoint-sampled c.d.f. on [0, q), jump to 1 at q."""
        if resolution < 1:
            raise ValueError("resolution must be >= 1")
        jumps: list[tuple[float, float]] = []
        edges = np.linspace(0.0, self.q, resolution + 1)
        prev = 0.0
        for left, right in zip(edges[:-1], edges[1:]):
            val = self._density_cdf(0.5 * (left + right))
            if val > prev and val < 1.0:
                jumps.append((float(left), float(val)))
                prev = val
        jumps.append((self.q, 1.0))
        return StepCDF(tuple(jumps))

    def to_json_dict(self) -> dict:
        return {
            "type": "frsb",
            "q": self.q,
            "beta": self.beta,
            "mixture": self.mixture.to_json_dict(),
        }

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "FrsbClosedForm":
        return cls(
            mixture=MixtureSpec.from_json_dict(data["mixture"]),
            beta=float(data["beta"]),
            q=float(data["q"]),
        )


ParisiMeasure = Union[StepCDF, FrsbClosedForm]


def measure_from_json(data: Mapping) -> ParisiMeasure:
    kind = data.get("type")
    if kind == "atomic":
        return StepCDF.from_json_dict(data)
    if kind == "frsb":
        return FrsbClosedForm.from_json_dict(data)
    raise ValueError(f"unknown measure type {kind!r}")


def blend_step_cdfs(a: StepCDF, b: StepCDF, lam: float) -> StepCDF:
    """The c.d.f. (1 - lam) a + lam b as a StepCDF (lam in [0, 1])."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lam must lie in [0, 1]")
    locs = sorted(set(a.locations.tolist()) | set(b.locations.tolist()))
    jumps: list[tuple[float, float]] = []
    prev = 0.0
    for q in locs:
        v = (1.0 - lam) * a.cdf_at(q) + lam * b.cdf_at(q)
        if v > prev:
            jumps.append((q, v))
            prev = v
    return StepCDF(tuple(jumps))


def l1_distance(a: StepCDF, b: StepCDF) -> float:
    """L1 distance int_0^1 |alpha_a - alpha_b| (exact for step c.d.f.s)."""
    locs = sorted(set(a.locations.tolist()) | set(b.locations.tolist()) | {1.0})
    total = 0.0
    prev = locs[0]
    for q in locs[1:]:
        total += abs(a.cdf_at(prev) - b.cdf_at(prev)) * (q - prev)
        prev = q
    return total
