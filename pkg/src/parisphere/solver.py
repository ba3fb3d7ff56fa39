"""Regime-aware computation of the Parisi measure.

Dispatch, in order: the replica-symmetric test (sup of beta^2 xi(s)
+ log(1-s) + s over (0,1)); a single-atom closed form for pure 2-spin;
the two-atom stationarity system under convex xi''^(-1/2); the
closed-form full-RSB measure under concave xi''^(-1/2) when
beta xi''(0)^(1/2) > 1; and a generic k-step RSB fallback otherwise.
Every returned solution carries an optimality certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import bisect, brentq, minimize_scalar

from parisphere.functional import Certificate, certify, cs_value, krsb_search
from parisphere.measures import FrsbClosedForm, ParisiMeasure, StepCDF
from parisphere.mixture import MixtureSpec, curvature_class, xi_derivative, xi_eval

__all__ = [
    "NoInteriorSolution",
    "PreconditionFailed",
    "RsCheck",
    "OneRsbSolution",
    "SolveOptions",
    "ParisiSolution",
    "rs_check",
    "onersb_ratio_x",
    "onersb_solve",
    "frsb_solve",
    "parisi_solve",
]

_NEAR_CRITICAL_WINDOW = 1e-10


class NoInteriorSolution(RuntimeError):
    """The two-atom stationarity system has no admissible interior solution."""


class PreconditionFailed(RuntimeError):
    """A closed-form branch was invoked outside its hypotheses."""


@dataclass(frozen=True)
class RsCheck:
    is_rs: bool
    sup_value: float
    argmax: float


def rs_check(spec: MixtureSpec, beta: float, grid: int = 10_000) -> RsCheck:
    """Test sup_{0<s<1} (beta^2 xi(s) + log(1-s) + s) <= 0.

    Grid scan avoiding the endpoints plus bounded golden-section
    refinement around the best grid point.  The value tends to 0 as
    s -> 0+, so in the replica-symmetric regime the reported sup is a
    tiny negative number attained near the left edge.
    """
    b2 = beta * beta

    def g(s):
        return b2 * xi_eval(spec, s) + np.log1p(-s) + s

    s = np.linspace(0.0, 1.0, grid + 2)[1:-1]
    vals = g(s)
    i = int(np.argmax(vals))
    lo = s[i - 1] if i > 0 else s[0]
    hi = s[i + 1] if i + 1 < len(s) else s[-1]
    res = minimize_scalar(lambda t: -g(t), bounds=(lo, hi), method="bounded", options={"xatol": 1e-14})
    sup, arg = float(vals[i]), float(s[i])
    refined = float(-res.fun)
    if refined > sup:
        sup, arg = refined, float(res.x)
    return RsCheck(is_rs=sup <= 0.0, sup_value=sup, argmax=arg)


def onersb_ratio_x(p: int) -> float:
    """Unique x > 0 with (1+x)/x^2 log(1+x) - 1/x = 1/p, by bisection.

    The left side decreases from 1/2 to 0, so a root exists iff p >= 3;
    x relates to the two-atom parameters via x = m q / (1 - q).
    """
    if p <= 2:
        raise ValueError("the ratio equation has a positive root only for p >= 3")

    def h(x):
        return ((1.0 + x) * math.log1p(x) - x) / (x * x) - 1.0 / p

    lo, hi = 1e-9, 1.0
    while h(hi) > 0.0:
        hi *= 2.0
        if hi > 1e12:
            raise RuntimeError("failed to bracket the ratio equation")
    return float(bisect(h, lo, hi, xtol=1e-13))


def _optimq_residuals(spec: MixtureSpec, beta: float, m: float, q: float) -> tuple[float, float]:
    """Residuals of the two stationarity equations for alpha = m on [0,q), 1 on [q,1]."""
    b2 = beta * beta
    d = 1.0 - q + m * q
    r1 = b2 * xi_derivative(spec, q, 1) - (1.0 / m) * (1.0 / (1.0 - q) - 1.0 / d)
    r2 = b2 * xi_eval(spec, q) - (math.log(d / (1.0 - q)) / (m * m) - (q / m) / d)
    return r1, r2


@dataclass(frozen=True)
class OneRsbSolution:
    m: float
    q: float
    residuals: tuple[float, float]

    @property
    def measure(self) -> StepCDF:
        return StepCDF(((0.0, self.m), (self.q, 1.0)))


def _newton_polish(spec, beta, m, q, max_iter=60):
    """Damped 2-D Newton on the stationarity system with a numeric Jacobian."""

    def res_vec(v):
        return np.array(_optimq_residuals(spec, beta, float(v[0]), float(v[1])))

    v = np.array([m, q], float)
    r = res_vec(v)
    for _ in range(max_iter):
        if np.max(np.abs(r)) < 1e-12:
            break
        jac = np.empty((2, 2))
        for j in range(2):
            step = 1e-7 * max(abs(v[j]), 1e-3)
            vp, vm = v.copy(), v.copy()
            vp[j] += step
            vm[j] -= step
            jac[:, j] = (res_vec(vp) - res_vec(vm)) / (2.0 * step)
        try:
            delta = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            break
        lam = 1.0
        improved = False
        for _ in range(30):
            cand = np.clip(v + lam * delta, 1e-12, 1.0 - 1e-12)
            rc = res_vec(cand)
            if np.linalg.norm(rc) < np.linalg.norm(r):
                v, r = cand, rc
                improved = True
                break
            lam *= 0.5
        if not improved:
            break
    return float(v[0]), float(v[1]), (float(r[0]), float(r[1]))


def _onersb_pure(spec: MixtureSpec, beta: float) -> list[tuple[float, float]]:
    """Candidate (m, q) pairs for a pure p-spin mixture via the x-substitution."""
    p = spec.pure_degree
    g2 = spec.coeffs[0][1] ** 2
    x = onersb_ratio_x(p)
    scale = beta * beta * g2 * p * (1.0 + x)

    def eq(q):
        return scale * q ** (p - 2) * (1.0 - q) ** 2 - 1.0

    qs_grid = np.linspace(1e-9, 1.0 - 1e-9, 4097)
    vals = eq(qs_grid)
    candidates = []
    for a, b, fa, fb in zip(qs_grid[:-1], qs_grid[1:], vals[:-1], vals[1:]):
        if fa == 0.0:
            candidates.append(float(a))
        elif fa * fb < 0.0:
            candidates.append(float(brentq(eq, a, b, xtol=1e-15, rtol=8.9e-16)))
    out = []
    for q in candidates:
        m = x * (1.0 - q) / q
        if 0.0 < m < 1.0:
            out.append((m, q))
    return out


def _grid_seeds(spec: MixtureSpec, beta: float, n: int = 100, keep: int = 10) -> list[tuple[float, float]]:
    """Local minima of the stationarity residual norm on an n x n grid.

    The residual vector vanishes identically along the degenerate edges
    (q -> 0 and m -> 1 describe the same single-atom measure), so the
    global argmin alone is an unreliable seed; every interior local
    minimum is kept instead and Newton adjudicates.
    """
    from scipy.ndimage import minimum_filter

    mg = np.linspace(0.005, 0.995, n)
    qg = np.linspace(0.005, 0.995, n)
    mm, qq = np.meshgrid(mg, qg, indexing="ij")
    b2 = beta * beta
    d = 1.0 - qq + mm * qq
    r1 = b2 * xi_derivative(spec, qq.ravel(), 1).reshape(qq.shape) - (1.0 / mm) * (
        1.0 / (1.0 - qq) - 1.0 / d
    )
    r2 = b2 * xi_eval(spec, qq.ravel()).reshape(qq.shape) - (
        np.log(d / (1.0 - qq)) / mm**2 - (qq / mm) / d
    )
    norm = r1**2 + r2**2
    local_min = norm <= minimum_filter(norm, size=3)
    order = np.argsort(norm[local_min])
    ms = mm[local_min][order][:keep]
    qs = qq[local_min][order][:keep]
    return [(float(m), float(q)) for m, q in zip(ms, qs)]


def onersb_solve(spec: MixtureSpec, beta: float, method: str = "auto") -> OneRsbSolution:
    """Solve the two-atom stationarity system for measures m delta_0 + (1-m) delta_q.

    Pure mixtures (p >= 3) go through the x-substitution: x from
    ``onersb_ratio_x``, q from beta^2 p gamma^2 q^(p-2) (1-q)^2 (1+x) = 1
    (root scan over (0,1)), m = x (1-q)/q; candidates are filtered to
    m in (0,1), ranked by functional value, and certified.  The general
    path seeds a damped Newton iteration from a 100x100 grid and falls
    back to a 2-jump RSB search on failure.
    """
    if method not in ("auto", "xpath", "newton"):
        raise ValueError(f"unknown method {method!r}")
    if spec.pure_degree == 2:
        raise ValueError("pure 2-spin has a single-atom measure; no two-atom system")
    if rs_check(spec, beta).is_rs:
        raise NoInteriorSolution("replica-symmetric regime: the system has no interior solution")

    candidates: list[tuple[float, float]] = []
    if spec.pure_degree is not None and method in ("auto", "xpath"):
        candidates = _onersb_pure(spec, beta)
    if not candidates:
        candidates = _grid_seeds(spec, beta)

    polished = []
    for m0, q0 in candidates:
        m, q, res = _newton_polish(spec, beta, m0, q0)
        if 0.0 < m < 1.0 and 0.0 < q < 1.0 and max(abs(res[0]), abs(res[1])) <= 1e-8:
            polished.append((m, q, res))
    if not polished:
        alpha, _ = _krsb_two_atom_fallback(spec, beta)
        if alpha is not None:
            m, q, res = _newton_polish(spec, beta, alpha[0], alpha[1])
            if 0.0 < m < 1.0 and max(abs(res[0]), abs(res[1])) <= 1e-8:
                polished.append((m, q, res))
    if not polished:
        raise NoInteriorSolution("no stationary point with m in (0, 1) at the required residual")

    polished.sort(key=lambda t: cs_value(spec, beta, StepCDF(((0.0, t[0]), (t[1], 1.0)))))
    m, q, res = polished[0]
    sol = OneRsbSolution(m=m, q=q, residuals=res)
    cert = certify(spec, beta, sol.measure)
    if not cert.verdict:
        raise NoInteriorSolution(
            f"stationary point failed certification (sup f = {cert.sup_f:.3e})"
        )
    return sol


def _krsb_two_atom_fallback(spec, beta):
    res = krsb_search(spec, beta, k=2, restarts=8, seed=0)
    jumps = res.alpha.jumps
    if len(jumps) == 2 and jumps[0][0] < 1e-6:
        return (jumps[0][1], jumps[1][0]), res.value
    return None, res.value


# ----------------------------------------------------------------------
# Solutions
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class SolveOptions:
    seed: int = 0
    restarts: int = 8
    k_schedule: tuple[int, ...] = (1, 2, 5, 10, 20)
    certify_grid: int = 2000
    tol_sup: float = 1e-6
    tol_supp: float = 1e-6
    krsb_tol: float = 1e-5
    rs_grid: int = 10_000


@dataclass(frozen=True)
class ParisiSolution:
    measure: ParisiMeasure
    regime: str  # "RS" | "1RSB" | "KRSB(n)" | "FRSB"
    cs_val: float
    certificate: Certificate
    diagnostics: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return bool(self.diagnostics.get("converged", self.certificate.verdict))

    def to_json_dict(self) -> dict:
        return {
            "regime": self.regime,
            "measure": self.measure.to_json_dict(),
            "cs_value": self.cs_val,
            "certificate": self.certificate.to_json_dict(),
            "diagnostics": self.diagnostics,
        }


def regime_label(measure: ParisiMeasure) -> str:
    if isinstance(measure, FrsbClosedForm):
        return "FRSB" if measure.has_density else "RS"
    n = measure.k
    if n == 1:
        return "RS"
    if n == 2:
        return "1RSB"
    return f"KRSB({n})"


def _frsb_cs_value(measure: FrsbClosedForm) -> float:
    """Functional value of the closed-form full-RSB solution by quadrature.

    Assumes q solves 1/(beta sqrt(xi''(q))) = 1 - q, so that the tail
    integral equals 1/(beta sqrt(xi'')) below q.
    """
    spec, beta, q = measure.mixture, measure.beta, measure.q
    t1_dens, _ = quad(
        lambda s: xi_derivative(spec, s, 1) * measure.cdf_at(s), 0.0, q, epsabs=1e-12, limit=200
    )
    t1 = t1_dens + (xi_eval(spec, 1.0) - xi_eval(spec, q))
    t2, _ = quad(
        lambda s: beta * math.sqrt(xi_derivative(spec, s, 2)), 0.0, q, epsabs=1e-12, limit=200
    )
    return 0.5 * (beta * beta * t1 + t2 + math.log1p(-q))


def frsb_solve(spec: MixtureSpec, beta: float, options: SolveOptions | None = None) -> ParisiSolution:
    """Closed-form full-RSB solution under concave xi''^(-1/2).

    Preconditions: gamma_1 = 0; xi''(s)^(-1/2) concave on (0, 1] (a
    constant counts as weakly concave); beta xi''(0)^(1/2) > 1.  The top
    of the support solves 1/(beta xi''(q)^(1/2)) = 1 - q by bisection.
    """
    opts = options or SolveOptions()
    if not spec.gamma1_zero:
        raise PreconditionFailed("gamma_1 must vanish")
    curv = curvature_class(spec)
    if not (curv.label == "concave" or curv.is_constant):
        raise PreconditionFailed(f"xi''^(-1/2) must be concave on (0, 1], got {curv.label}")
    xi2_0 = xi_derivative(spec, 0.0, 2)
    if beta * math.sqrt(xi2_0) <= 1.0:
        raise PreconditionFailed(
            f"beta xi''(0)^(1/2) = {beta * math.sqrt(xi2_0):.6f} must exceed 1"
        )

    def h(t):
        return 1.0 / (beta * math.sqrt(xi_derivative(spec, t, 2))) - (1.0 - t)

    q = float(brentq(h, 0.0, 1.0, xtol=1e-15, rtol=8.9e-16))
    measure = FrsbClosedForm(mixture=spec, beta=beta, q=q)
    cert = certify(spec, beta, measure, grid=opts.certify_grid, tol_sup=opts.tol_sup, tol_supp=opts.tol_supp)
    return ParisiSolution(
        measure=measure,
        regime=regime_label(measure),
        cs_val=_frsb_cs_value(measure),
        certificate=cert,
        diagnostics={
            "branch": "frsb",
            "stationarity_residual": h(q),
            "converged": cert.verdict,
        },
    )


def _solve_rs(spec, beta, opts, rs) -> ParisiSolution:
    measure = StepCDF.delta_zero()
    cert = certify(spec, beta, measure, grid=opts.certify_grid, tol_sup=opts.tol_sup, tol_supp=opts.tol_supp)
    return ParisiSolution(
        measure=measure,
        regime="RS",
        cs_val=cs_value(spec, beta, measure),
        certificate=cert,
        diagnostics={"branch": "rs", "rs_sup": rs.sup_value, "converged": cert.verdict},
    )


def _solve_pure2(spec, beta, opts) -> ParisiSolution:
    xi2 = xi_derivative(spec, 0.0, 2)  # constant for pure 2-spin
    q = 1.0 - 1.0 / (beta * math.sqrt(xi2))
    if not 0.0 < q < 1.0:
        raise PreconditionFailed("pure 2-spin single-atom branch needs beta xi''^(1/2) > 1")
    measure = StepCDF(((q, 1.0),))
    cert = certify(spec, beta, measure, grid=opts.certify_grid, tol_sup=opts.tol_sup, tol_supp=opts.tol_supp)
    return ParisiSolution(
        measure=measure,
        regime="RS",
        cs_val=cs_value(spec, beta, measure),
        certificate=cert,
        diagnostics={"branch": "pure2", "atom": q, "converged": cert.verdict},
    )


def _solve_onersb(spec, beta, opts) -> ParisiSolution:
    sol = onersb_solve(spec, beta)
    measure = sol.measure
    cert = certify(spec, beta, measure, grid=opts.certify_grid, tol_sup=opts.tol_sup, tol_supp=opts.tol_supp)
    return ParisiSolution(
        measure=measure,
        regime="1RSB",
        cs_val=cs_value(spec, beta, measure),
        certificate=cert,
        diagnostics={
            "branch": "onersb",
            "m": sol.m,
            "q": sol.q,
            "residuals": list(sol.residuals),
            "converged": cert.verdict and max(map(abs, sol.residuals)) <= 1e-8,
        },
    )


def _solve_krsb(spec, beta, opts) -> ParisiSolution:
    values = []
    best = None
    for k in opts.k_schedule:
        res = krsb_search(spec, beta, k, restarts=opts.restarts, seed=opts.seed, tol=opts.krsb_tol)
        values.append(res.value)
        if best is None or res.value <= best.value:
            best = res
        if len(values) >= 2 and abs(values[-1] - values[-2]) < 1e-8:
            break
    measure = best.alpha
    cert = certify(spec, beta, measure, grid=opts.certify_grid, tol_sup=opts.tol_sup, tol_supp=opts.tol_supp)
    return ParisiSolution(
        measure=measure,
        regime=regime_label(measure),
        cs_val=best.value,
        certificate=cert,
        diagnostics={
            "branch": "krsb",
            "k_values": values,
            "grad_norm": best.grad_norm,
            "converged": cert.verdict and best.converged,
            "note": (
                "finite-k approximation; the true measure may not be finitely atomic"
                if not cert.verdict
                else ""
            ),
        },
    )


def parisi_solve(spec: MixtureSpec, beta: float, options: SolveOptions | None = None) -> ParisiSolution:
    """Compute the Parisi measure for (spec, beta) with branch dispatch.

    Near the replica-symmetric boundary (|sup| below 1e-10 at an interior
    argmax) both branches are computed and the lower value is returned
    with a "near-critical" diagnostic.
    """
    if beta <= 0.0:
        raise ValueError("beta must be positive")
    opts = options or SolveOptions()
    rs = rs_check(spec, beta, grid=opts.rs_grid)
    near_critical = abs(rs.sup_value) < _NEAR_CRITICAL_WINDOW and rs.argmax > 0.01

    def non_rs_branch() -> ParisiSolution:
        if spec.pure_degree == 2:
            return _solve_pure2(spec, beta, opts)
        curv = curvature_class(spec)
        if curv.label == "convex" and not curv.is_constant:
            return _solve_onersb(spec, beta, opts)
        xi2_0 = xi_derivative(spec, 0.0, 2)
        if spec.gamma1_zero and (curv.label == "concave" or curv.is_constant) and beta * math.sqrt(xi2_0) > 1.0:
            return frsb_solve(spec, beta, opts)
        return _solve_krsb(spec, beta, opts)

    if near_critical:
        rs_sol = _solve_rs(spec, beta, opts, rs)
        try:
            other = non_rs_branch()
        except (NoInteriorSolution, PreconditionFailed):
            other = None
        chosen = rs_sol if other is None or rs_sol.cs_val <= other.cs_val else other
        diag = dict(chosen.diagnostics)
        diag["near_critical"] = True
        diag["rs_sup"] = rs.sup_value
        if other is not None:
            diag["branch_value_gap"] = abs(rs_sol.cs_val - other.cs_val)
        return ParisiSolution(chosen.measure, chosen.regime, chosen.cs_val, chosen.certificate, diag)

    if rs.is_rs:
        return _solve_rs(spec, beta, opts, rs)
    try:
        return non_rs_branch()
    except (NoInteriorSolution, PreconditionFailed) as exc:
        raise type(exc)(f"{exc} [branch dispatch for beta={beta}]") from exc
