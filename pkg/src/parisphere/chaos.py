"""Temperature-chaos condition checks for pairs of temperatures.

Given Parisi measures at two inverse temperatures, decides the
"uncoupled" condition q0(beta1, beta2) <= max(c1, c2) where c_j is the
smallest support point and q0 is the first point where the scaled
measures beta_j mu_j assign different mass to [0, t); evaluates the two
equivalent reformulations; and packages hypothesis checks for the two
chaos statements (perturbed pure even-p model, generic mixed model)
plus the full-RSB demonstration where the uncoupled condition fails.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from parisphere.measures import StepCDF
from parisphere.mixture import MixtureSpec, xi_derivative
from parisphere.solver import (
    ParisiSolution,
    PreconditionFailed,
    SolveOptions,
    frsb_solve,
    parisi_solve,
    rs_check,
)

__all__ = [
    "NotApplicable",
    "ChaosReport",
    "q_zero",
    "theorem1_check",
    "theorem2_check",
    "cross_overlap_prediction",
    "frsb_coupling_demo",
]

_MASS_TOL = 1e-9  # tolerance for "equal scaled mass" and "c = 0" tests


class NotApplicable(RuntimeError):
    """A prediction was requested outside the regime where it is defined."""


@dataclass(frozen=True)
class ChaosReport:
    beta1: float
    beta2: float
    c1: float | None = None
    c2: float | None = None
    q0: float | None = None
    uncoupled: bool | None = None
    thm2_applicable: bool | None = None
    thm2_reason: str = ""
    thm1_applicable: bool | None = None
    thm1_reason: str = ""
    predicted_cross_support: tuple[float, ...] | None = None
    witnesses: dict = field(default_factory=dict)
    equivalence_ok: bool | None = None
    generic_asserted: bool | None = None
    notes: tuple[str, ...] = ()

    def to_json_dict(self) -> dict:
        out = {
            "beta1": self.beta1,
            "beta2": self.beta2,
            "c1": self.c1,
            "c2": self.c2,
            "q0": self.q0,
            "uncoupled": self.uncoupled,
            "thm2_applicable": self.thm2_applicable,
            "thm2_reason": self.thm2_reason,
            "thm1_applicable": self.thm1_applicable,
            "thm1_reason": self.thm1_reason,
            "predicted_cross_support": (
                list(self.predicted_cross_support) if self.predicted_cross_support is not None else None
            ),
            "witnesses": self.witnesses,
            "equivalence_ok": self.equivalence_ok,
            "generic_asserted": self.generic_asserted,
            "notes": list(self.notes),
        }
        return out


def _scaled_mass_below(sol: ParisiSolution, beta: float, t: float) -> float:
    """beta * mu([0, t)) = beta * alpha(t-)."""
    return beta * sol.measure.cdf_left(t)


def q_zero(
    sol1: ParisiSolution,
    beta1: float,
    sol2: ParisiSolution,
    beta2: float,
    tol: float = _MASS_TOL,
    grid: int = 2000,
) -> float:
    """Smallest t where beta1 mu1([0,t)) and beta2 mu2([0,t)) differ by more than tol.

    Exact from atom locations for a pair of step c.d.f.s; for closed-form
    full-RSB inputs the first differing point on a refinement grid of the
    breakpoints is bisected down to ~1e-12.  Returns 1 when the scaled
    measures agree on all of [0, 1).
    """
    m1, m2 = sol1.measure, sol2.measure
    if isinstance(m1, StepCDF) and isinstance(m2, StepCDF):
        points = sorted(set(m1.locations.tolist()) | set(m2.locations.tolist()))
        for a in points:
            if abs(beta1 * m1.cdf_at(a) - beta2 * m2.cdf_at(a)) > tol:
                return a
        return 1.0

    def diff_at(t: float) -> float:
        return abs(_scaled_mass_below(sol1, beta1, t) - _scaled_mass_below(sol2, beta2, t))

    breakpoints = {0.0, 1.0}
    for m in (m1, m2):
        if isinstance(m, StepCDF):
            breakpoints.update(m.locations.tolist())
        else:
            breakpoints.add(m.q)
    ts = np.unique(np.concatenate((np.linspace(0.0, 1.0, grid, endpoint=False), sorted(breakpoints))))
    ts = ts[ts < 1.0]
    last_equal = 0.0
    first_diff = None
    for t in ts[1:]:
        if diff_at(float(t)) > tol:
            first_diff = float(t)
            break
        last_equal = float(t)
    if first_diff is None:
        return 1.0
    lo, hi = last_equal, first_diff
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if diff_at(mid) > tol:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-12:
            break
    return hi


def _atoms_of(sol: ParisiSolution) -> tuple[float, ...]:
    if isinstance(sol.measure, StepCDF):
        return tuple(sol.measure.locations.tolist())
    return ()


def _uncoupled_report(sol1, beta1, sol2, beta2) -> dict:
    c1 = sol1.measure.support_min()
    c2 = sol2.measure.support_min()
    q0 = q_zero(sol1, beta1, sol2, beta2)
    uncoupled = q0 <= max(c1, c2) + _MASS_TOL
    min_zero = min(c1, c2) <= _MASS_TOL
    mass1 = beta1 * sol1.measure.mass_of_zero()
    mass2 = beta2 * sol2.measure.mass_of_zero()
    bullet1 = min_zero and max(c1, c2) > _MASS_TOL
    bullet2 = abs(mass1 - mass2) > _MASS_TOL
    return {
        "c1": c1,
        "c2": c2,
        "q0": q0,
        "uncoupled": uncoupled,
        "min_zero": min_zero,
        "direct": uncoupled and min_zero,
        "bullets": bullet1 or bullet2,
        "bullet1": bullet1,
        "bullet2": bullet2,
        "scaled_mass_at_zero": (mass1, mass2),
    }


def theorem2_check(
    spec: MixtureSpec,
    beta1: float,
    beta2: float,
    assert_generic: bool = False,
    options: SolveOptions | None = None,
) -> ChaosReport:
    """Decide the chaos conditions for a generic even mixture at two temperatures.

    Solves both temperatures, evaluates c_1, c_2, q0 and the uncoupled
    condition, plus the two equivalent reformulations (min c = 0 < max c,
    or differing scaled masses at 0), and audits that both routes agree.
    Genericity cannot hold literally for a finite mixture, so the caller
    must assert it explicitly; the report records the assertion.
    """
    if beta1 == beta2:
        raise ValueError("the two inverse temperatures must differ")
    if not spec.even_only:
        raise ValueError("chaos conditions are stated for even mixtures only")
    sol1 = parisi_solve(spec, beta1, options)
    sol2 = parisi_solve(spec, beta2, options)
    rep = _uncoupled_report(sol1, beta1, sol2, beta2)

    applicable = rep["direct"] and assert_generic
    if not assert_generic:
        reason = "genericity not asserted (finite mixtures are never literally generic)"
    elif not rep["uncoupled"]:
        reason = f"uncoupled condition fails: q0 = {rep['q0']:.6g} > max(c1, c2) = {max(rep['c1'], rep['c2']):.6g}"
    elif not rep["min_zero"]:
        reason = f"min(c1, c2) = {min(rep['c1'], rep['c2']):.6g} is not 0"
    else:
        route = "via differing scaled masses at 0" if rep["bullet2"] else "via min c = 0 < max c"
        reason = f"uncoupled and min(c)=0 hold ({route})"

    predicted = None
    try:
        predicted = cross_overlap_prediction(sol1, sol2)
    except NotApplicable:
        pass

    return ChaosReport(
        beta1=beta1,
        beta2=beta2,
        c1=rep["c1"],
        c2=rep["c2"],
        q0=rep["q0"],
        uncoupled=rep["uncoupled"],
        thm2_applicable=applicable,
        thm2_reason=reason,
        predicted_cross_support=predicted,
        witnesses={
            "regimes": (sol1.regime, sol2.regime),
            "atoms": (_atoms_of(sol1), _atoms_of(sol2)),
            "scaled_mass_at_zero": rep["scaled_mass_at_zero"],
        },
        equivalence_ok=rep["bullets"] == rep["direct"],
        generic_asserted=assert_generic,
    )


def theorem1_check(p0: int, p: int, a: float, beta1: float, beta2: float) -> ChaosReport:
    """Hypothesis check for chaos in the perturbed pure even-p0 model.

    Verifies p0 >= 4 even; p even with p != p0; 0 < a < 1/4; beta1 != beta2.
    When both temperatures are outside the replica-symmetric regime of the
    pure p0 model, the two-atom witnesses (m_j, q_j) and the predicted
    cross-overlap support {0, sqrt(q1 q2)} are emitted; otherwise chaos
    holds trivially and the report says so.
    """
    reasons = []
    if p0 < 4 or p0 % 2 != 0:
        reasons.append("p0 must be even >= 4")
    if p % 2 != 0:
        reasons.append("p must be even")
    if p == p0:
        reasons.append("p must differ from p0")
    if not 0.0 < a < 0.25:
        reasons.append("a must satisfy 0<a<1/4")
    if beta1 == beta2:
        reasons.append("beta1 must differ from beta2")
    notes = (
        "chaos holds for some perturbation amplitude sequence in [1, 2], possibly varying "
        "with N; a fixed amplitude of 1 (as the simulator uses) is illustrative only",
    )
    if reasons:
        return ChaosReport(
            beta1=beta1,
            beta2=beta2,
            thm1_applicable=False,
            thm1_reason="; ".join(reasons),
            notes=notes,
        )

    spec = MixtureSpec({p0: 1.0})
    witnesses: dict = {}
    if rs_check(spec, beta1).is_rs or rs_check(spec, beta2).is_rs:
        predicted: tuple[float, ...] = (0.0,)
        note = "at least one temperature is replica-symmetric: chaos holds trivially (cross overlap concentrates at 0)"
        sols = None
    else:
        sol1 = parisi_solve(spec, beta1)
        sol2 = parisi_solve(spec, beta2)
        predicted = cross_overlap_prediction(sol1, sol2)
        sols = (sol1, sol2)
        note = ""
        for j, (b, sol) in enumerate(((beta1, sol1), (beta2, sol2)), start=1):
            witnesses[f"m{j}"] = sol.diagnostics.get("m")
            witnesses[f"q{j}"] = sol.diagnostics.get("q")
            witnesses[f"beta{j}_mass0"] = b * sol.measure.mass_of_zero()
    report = ChaosReport(
        beta1=beta1,
        beta2=beta2,
        thm1_applicable=True,
        thm1_reason="all hypotheses hold" + (f" ({note})" if note else ""),
        predicted_cross_support=predicted,
        witnesses=witnesses,
        notes=notes,
    )
    if sols is not None:
        rep = _uncoupled_report(sols[0], beta1, sols[1], beta2)
        report = dataclasses.replace(
            report,
            c1=rep["c1"],
            c2=rep["c2"],
            q0=rep["q0"],
            uncoupled=rep["uncoupled"],
            equivalence_ok=rep["bullets"] == rep["direct"],
        )
    return report


def cross_overlap_prediction(sol1: ParisiSolution, sol2: ParisiSolution) -> tuple[float, ...]:
    """Predicted support of the absolute cross-overlap for RS/two-atom solutions.

    {0} when either measure is a single atom at 0; {0, sqrt(q1 q2)} when
    both are two-atom measures with nonzero atoms q1, q2.
    """
    qs = []
    for sol in (sol1, sol2):
        if not isinstance(sol.measure, StepCDF) or sol.measure.k > 2:
            raise NotApplicable(f"no two-point prediction for regime {sol.regime}")
        if sol.measure.k == 1:
            return (0.0,)
        qs.append(sol.measure.locations[-1])
    return (0.0, math.sqrt(qs[0] * qs[1]))


def frsb_coupling_demo(c: float, p: int, beta1: float, beta2: float) -> ChaosReport:
    """Full-RSB pair (1-c) x^2 + c x^p where the uncoupled condition fails.

    Requires c/(1-c) <= 4(p-3)/((p-1) p^2), p even >= 4, and
    xi''(0)^(-1/2) < beta1 < beta2.  Both temperatures then have
    closed-form full-RSB measures whose scaled c.d.f.s agree on [0, q1)
    but split at q1 > 0 = c1 = c2, so q0 = q1 > max(c1, c2).
    """
    if p < 4 or p % 2 != 0:
        raise PreconditionFailed("p must be even >= 4")
    if not 0.0 < c < 1.0:
        raise PreconditionFailed("c must lie in (0, 1)")
    bound = 4.0 * (p - 3) / ((p - 1) * p * p)
    if c / (1.0 - c) > bound:
        raise PreconditionFailed(
            f"c/(1-c) = {c / (1 - c):.6g} exceeds the concavity bound {bound:.6g}"
        )
    spec = MixtureSpec({2: math.sqrt(1.0 - c), p: math.sqrt(c)})
    thresh = 1.0 / math.sqrt(xi_derivative(spec, 0.0, 2))
    if not thresh < beta1 < beta2:
        raise PreconditionFailed(
            f"need xi''(0)^(-1/2) = {thresh:.6g} < beta1 < beta2, got beta1={beta1}, beta2={beta2}"
        )
    sol1 = frsb_solve(spec, beta1)
    sol2 = frsb_solve(spec, beta2)
    q1, q2 = sol1.measure.q, sol2.measure.q
    if not 0.0 < q1 < q2:
        raise RuntimeError(f"expected 0 < q1 < q2, got q1={q1}, q2={q2}")

    ts = np.linspace(0.0, q1, 512, endpoint=False)
    gap = max(
        abs(beta1 * sol1.measure.cdf_at(float(t)) - beta2 * sol2.measure.cdf_at(float(t)))
        for t in ts
    )
    at_q1 = (beta1 * sol1.measure.cdf_at(q1), beta2 * sol2.measure.cdf_at(q1))
    if not at_q1[0] > at_q1[1]:
        raise RuntimeError("expected a strict scaled-c.d.f. gap at q1")
    rep = _uncoupled_report(sol1, beta1, sol2, beta2)
    return ChaosReport(
        beta1=beta1,
        beta2=beta2,
        c1=rep["c1"],
        c2=rep["c2"],
        q0=rep["q0"],
        uncoupled=rep["uncoupled"],
        thm2_applicable=False,
        thm2_reason="uncoupled condition violated (q0 = q1 > 0 = max(c1, c2))",
        witnesses={
            "q1": q1,
            "q2": q2,
            "scaled_cdf_max_gap_below_q1": gap,
            "scaled_cdf_at_q1": at_q1,
        },
        equivalence_ok=rep["bullets"] == rep["direct"],
        notes=(
            "whether chaos fails here is an open conjecture; this report only "
            "certifies that the uncoupled condition is violated",
        ),
    )
