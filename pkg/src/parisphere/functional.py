"""The Crisanti-Sommers functional and its first-order machinery.

For a step c.d.f. alpha the tail integral ahat(s) = int_s^1 alpha is
piecewise linear, so every integral needed here reduces to per-piece
logarithmic/rational closed forms evaluated to machine precision:

* the functional  Q(alpha) = (1/2) [ beta^2 int_0^1 xi' alpha
                                     + int_0^shat ds / ahat(s) + log(1 - shat) ]
* the first-variation kernel  G(t) = beta^2 xi'(t) - int_0^t ds / ahat(s)^2
* its cumulative  f(t) = int_0^t G

A measure is optimal exactly when sup f = 0 and f vanishes on its
support, which is what ``certify`` checks on a grid.  ``krsb_minimize``
minimizes Q over step c.d.f.s with at most k jumps by box-constrained
multi-start descent on an increment parameterization; quadrature only
ever appears for closed-form full-RSB measures.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import minimize

from parisphere.measures import FrsbClosedForm, ParisiMeasure, StepCDF
from parisphere.mixture import MixtureSpec, xi_derivative, xi_eval

__all__ = [
    "Certificate",
    "NonConvergenceWarning",
    "cs_value",
    "g_function",
    "f_function",
    "directional_derivative",
    "certify",
    "krsb_minimize",
    "KrsbResult",
    "krsb_search",
]

_SHAT_MARGIN = 1e-12  # shat < 1 enforced with this margin
_QMAX = 1.0 - 1e-9  # top jump location cap in the k-RSB parameterization
_MERGE_TOL = 1e-9  # atom merge / mass drop threshold after optimization
_MAXFUN = 10_000  # function-evaluation cap per restart
_STAGE_STRIDE = 104729  # seed strides: deterministic restart splitting
_RESTART_STRIDE = 7919
_LADDER = (1, 2, 5, 10, 20, 50, 100, 200, 500)


class NonConvergenceWarning(UserWarning):
    """Raised as a warning when the k-RSB descent hits its evaluation cap."""


# ----------------------------------------------------------------------
# Per-piece primitives.  On a piece where ahat(s) = A - c*(s - a) (A > 0,
# c >= 0), the three integrals below have closed forms; the small-u series
# avoids cancellation as c -> 0.  u = c*tau/A <= 1.
# ----------------------------------------------------------------------


def _int_inv(A, c, tau):
    """int_0^tau ds / (A - c s)."""
    A = np.asarray(A, float)
    c = np.asarray(c, float)
    tau = np.asarray(tau, float)
    u = np.where(A > 0.0, c * tau / np.where(A > 0.0, A, 1.0), np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        exact = -np.log1p(-u) / c
    series = (tau / A) * (1.0 + u * (0.5 + u * (1.0 / 3.0 + 0.25 * u)))
    return np.where(np.abs(u) < 1e-4, series, exact)


def _int_inv2(A, c, tau):
    """int_0^tau ds / (A - c s)^2 = tau / (A (A - c tau)), any c >= 0."""
    A = np.asarray(A, float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.asarray(tau, float) / (A * (A - np.asarray(c, float) * tau))


def _int_i_partial(A, c, tau):
    """int_0^tau s / (A (A - c s)) ds (the within-piece part of int I)."""
    A = np.asarray(A, float)
    c = np.asarray(c, float)
    tau = np.asarray(tau, float)
    u = np.where(A > 0.0, c * tau / np.where(A > 0.0, A, 1.0), np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        exact = -np.log1p(-u) / (c * c) - tau / (A * c)
    series = (tau * tau / (A * A)) * (0.5 + u * (1.0 / 3.0 + u * (0.25 + 0.2 * u)))
    return np.where(np.abs(u) < 1e-4, series, exact)


class _PiecewiseAlpha:
    """Piecewise-constant alpha given by raw jump arrays (ties allowed).

    Precomputes, at every breakpoint a_j:
      ahat[j] = int_{a_j}^1 alpha
      I[j]    = int_0^{a_j} ds / ahat^2
      Lg[j]   = int_0^{a_j} ds / ahat
      K[j]    = int_0^{a_j} I(s) ds
    The final entries may be +inf (ahat(1) = 0); lookups at t < 1 never
    touch them.
    """

    def __init__(self, qs: np.ndarray, ms: np.ndarray):
        qs = np.asarray(qs, float)
        ms = np.asarray(ms, float)
        if qs[0] > 0.0:
            a = np.concatenate(([0.0], qs, [1.0]))
            c = np.concatenate(([0.0], ms))
        else:
            a = np.concatenate((qs, [1.0]))
            c = ms.astype(float)
        h = np.diff(a)
        seg = c * h
        ahat = np.concatenate((np.cumsum(seg[::-1])[::-1], [0.0]))
        self.a, self.c, self.h, self.ahat = a, c, h, ahat
        A0 = ahat[:-1]
        self.I = np.concatenate(([0.0], np.cumsum(_int_inv2(A0, c, h))))
        self.Lg = np.concatenate(([0.0], np.cumsum(_int_inv(A0, c, h))))
        dK = self.I[:-1] * h + _int_i_partial(A0, c, h)
        self.K = np.concatenate(([0.0], np.cumsum(dK)))

    def _piece(self, t):
        return np.clip(np.searchsorted(self.a, t, side="right") - 1, 0, len(self.c) - 1)

    def term_linear(self, spec: MixtureSpec, power: int = 1) -> float:
        """int_0^1 xi' alpha as sum_j c_j (xi(a_{j+1}) - xi(a_j))."""
        return float(np.dot(self.c, np.diff(xi_eval(spec, self.a))))

    def inv_integral_to(self, shat: float) -> float:
        """int_0^shat ds / ahat(s)."""
        j = int(self._piece(shat))
        tau = shat - self.a[j]
        return float(self.Lg[j] + _int_inv(self.ahat[j], self.c[j], tau))

    def ahat_at(self, t):
        j = self._piece(t)
        return self.ahat[j] - self.c[j] * (np.asarray(t, float) - self.a[j])

    def i_at(self, t):
        j = self._piece(t)
        tau = np.asarray(t, float) - self.a[j]
        return self.I[j] + _int_inv2(self.ahat[j], self.c[j], tau)

    def k_at(self, t):
        j = self._piece(t)
        tau = np.asarray(t, float) - self.a[j]
        return self.K[j] + self.I[j] * tau + _int_i_partial(self.ahat[j], self.c[j], tau)


def _pieces(alpha: StepCDF) -> _PiecewiseAlpha:
    return _PiecewiseAlpha(alpha.locations, alpha.values)


def _cs_from_pieces(spec: MixtureSpec, beta: float, pw: _PiecewiseAlpha, shat: float) -> float:
    t1 = pw.term_linear(spec)
    t2 = pw.inv_integral_to(shat)
    return 0.5 * (beta * beta * t1 + t2 + math.log1p(-shat))


def cs_value(spec: MixtureSpec, beta: float, alpha: StepCDF, shat: float | None = None) -> float:
    """Value of the functional at a step c.d.f., exact per-piece integration.

    ``shat`` defaults to the last jump location; any shat with
    alpha(shat) = 1 and shat < 1 gives the same value.
    """
    top = alpha.locations[-1]
    if shat is None:
        shat = float(top)
    if shat >= 1.0 - _SHAT_MARGIN:
        raise ValueError("shat must be < 1")
    if shat < top:
        raise ValueError("alpha(shat) must equal 1, i.e. shat >= the last jump location")
    return _cs_from_pieces(spec, beta, _pieces(alpha), shat)


def g_function(spec: MixtureSpec, beta: float, alpha: StepCDF, t):
    """First-variation kernel G(t) = beta^2 xi'(t) - int_0^t ds / ahat(s)^2."""
    ts = np.asarray(t, float)
    if np.any(ts < 0.0) or np.any(ts > 1.0):
        raise ValueError("t must lie in [0, 1]")
    out = beta * beta * xi_derivative(spec, ts, 1) - _pieces(alpha).i_at(ts)
    return float(out) if np.isscalar(t) or ts.ndim == 0 else out


def f_function(spec: MixtureSpec, beta: float, alpha: StepCDF, t):
    """Cumulative kernel f(t) = int_0^t G(s) ds, closed form per piece."""
    ts = np.asarray(t, float)
    if np.any(ts < 0.0) or np.any(ts > 1.0):
        raise ValueError("t must lie in [0, 1]")
    out = beta * beta * xi_eval(spec, ts) - _pieces(alpha).k_at(ts)
    return float(out) if np.isscalar(t) or ts.ndim == 0 else out


def directional_derivative(
    spec: MixtureSpec, beta: float, alpha_from: StepCDF, alpha_to: StepCDF
) -> float:
    """Derivative of Q along the linear path from alpha_from towards alpha_to.

    Equals (1/2) int_0^1 (alpha_to - alpha_from)(s) G(s; alpha_from) ds;
    non-negative in every direction at the minimizer.
    """
    locs = sorted(set(alpha_from.locations.tolist()) | set(alpha_to.locations.tolist()))
    locs.append(1.0)
    pw = _pieces(alpha_from)
    b2 = beta * beta
    total = 0.0
    for u, v in zip(locs[:-1], locs[1:]):
        delta = alpha_to.cdf_at(u) - alpha_from.cdf_at(u)
        if delta == 0.0:
            continue
        f_u = b2 * xi_eval(spec, u) - float(pw.k_at(u))
        f_v = b2 * xi_eval(spec, v) - float(pw.k_at(v))
        total += delta * (f_v - f_u)
    return 0.5 * total


# ----------------------------------------------------------------------
# Optimality certificate
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class Certificate:
    """Grid evaluation of f: optimal iff sup f <= 0 and f = 0 on the support."""

    sup_f: float
    max_abs_f_on_support: float
    grid_size: int
    tol_sup: float
    tol_supp: float
    verdict: bool

    def to_json_dict(self) -> dict:
        return {
            "sup_f": self.sup_f,
            "max_abs_f_on_support": self.max_abs_f_on_support,
            "grid_size": self.grid_size,
            "tol_sup": self.tol_sup,
            "tol_supp": self.tol_supp,
            "verdict": self.verdict,
        }


def _certify_atomic(spec, beta, measure: StepCDF, grid):
    ts = np.unique(np.concatenate((np.linspace(0.0, 1.0, grid, endpoint=False), measure.locations)))
    f = f_function(spec, beta, measure, ts)
    support_mask = np.isin(ts, measure.locations)
    return float(np.max(f)), float(np.max(np.abs(f[support_mask])))


def _certify_frsb(spec, beta, measure: FrsbClosedForm, grid):
    ts = np.unique(np.concatenate((np.linspace(0.0, 1.0, grid, endpoint=False), [measure.q])))
    ahat = np.array([measure.tail_integral(float(t)) for t in ts])
    with np.errstate(divide="ignore"):
        inv2 = 1.0 / ahat**2
    i_vals = cumulative_trapezoid(inv2, ts, initial=0.0)
    g_vals = beta * beta * xi_derivative(spec, ts, 1) - i_vals
    f = cumulative_trapezoid(g_vals, ts, initial=0.0)
    lo, hi = measure.support_min(), measure.q
    support_mask = (ts >= lo - 1e-12) & (ts <= hi + 1e-12)
    return float(np.max(f)), float(np.max(np.abs(f[support_mask])))


def certify(
    spec: MixtureSpec,
    beta: float,
    measure: ParisiMeasure,
    grid: int = 2000,
    tol_sup: float = 1e-6,
    tol_supp: float = 1e-6,
) -> Certificate:
    """Evaluate f on a uniform grid plus all support points and test optimality."""
    if grid < 100:
        raise ValueError("grid must be >= 100")
    if isinstance(measure, StepCDF):
        sup_f, on_supp = _certify_atomic(spec, beta, measure, grid)
    else:
        sup_f, on_supp = _certify_frsb(spec, beta, measure, grid)
    return Certificate(
        sup_f=sup_f,
        max_abs_f_on_support=on_supp,
        grid_size=grid,
        tol_sup=tol_sup,
        tol_supp=tol_supp,
        verdict=(sup_f <= tol_sup) and (on_supp <= tol_supp),
    )


# ----------------------------------------------------------------------
# k-RSB minimization
# ----------------------------------------------------------------------
#
# Parameterization: theta in [0, 1]^(2k-1).  The first k entries place the
# jump locations by repeatedly splitting the remaining interval,
#   q_i = q_{i-1} + theta_i (QMAX - q_{i-1}),
# the next k-1 entries do the same for the cumulative values (m_k = 1).
# The feasible set is exactly the unit box; coincident atoms and zero-mass
# atoms are valid intermediate states and are merged away afterwards.


def _theta_to_jumps(theta: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    qs = np.empty(k)
    ms = np.empty(k)
    prev = 0.0
    for i in range(k):
        prev = prev + theta[i] * (_QMAX - prev)
        qs[i] = prev
    prev = 0.0
    for i in range(k - 1):
        prev = prev + theta[k + i] * (1.0 - prev)
        ms[i] = prev
    ms[k - 1] = 1.0
    return qs, ms


def _jumps_to_theta(qs: np.ndarray, ms: np.ndarray, k: int) -> np.ndarray:
    qs = list(map(float, qs))
    ms = list(map(float, ms))
    while len(qs) < k:
        # split the widest gap below the top atom with a zero-mass atom
        edges = [0.0] + qs
        widths = [b - a for a, b in zip(edges[:-1], edges[1:])]
        i = int(np.argmax(widths))
        qs.insert(i, 0.5 * (edges[i] + edges[i + 1]))
        ms.insert(i, ms[i - 1] if i > 0 else 0.0)
    theta = np.empty(2 * k - 1)
    prev = 0.0
    for i in range(k):
        span = _QMAX - prev
        theta[i] = min(max((qs[i] - prev) / span, 0.0), 1.0) if span > 0 else 0.0
        prev = qs[i]
    prev = 0.0
    for i in range(k - 1):
        span = 1.0 - prev
        theta[k + i] = min(max((ms[i] - prev) / span, 0.0), 1.0) if span > 0 else 0.0
        prev = ms[i]
    return theta


def _cleanup_jumps(qs, ms) -> StepCDF:
    jumps: list[list[float]] = []
    prev_m = 0.0
    for q, m in zip(qs, ms):
        if m - prev_m < _MERGE_TOL:
            continue
        if jumps and q - jumps[-1][0] < _MERGE_TOL:
            jumps[-1][1] = m
        else:
            jumps.append([float(q), float(m)])
        prev_m = m
    if not jumps:
        jumps = [[float(qs[-1]), 1.0]]
    jumps[-1][1] = 1.0
    return StepCDF(tuple((q, m) for q, m in jumps))


@dataclass
class KrsbResult:
    alpha: StepCDF
    value: float
    grad_norm: float
    converged: bool
    nfev: int
    stage_values: tuple[float, ...]


def _stage_schedule(k: int) -> list[int]:
    stages = [s for s in _LADDER if s < k]
    stages.append(k)
    return stages


def _projected_grad_norm(fun, theta, lo=0.0, hi=1.0, step=1e-7):
    g = np.empty_like(theta)
    for i in range(len(theta)):
        up = min(theta[i] + step, hi)
        dn = max(theta[i] - step, lo)
        tp = theta.copy()
        tp[i] = up
        tm = theta.copy()
        tm[i] = dn
        g[i] = (fun(tp) - fun(tm)) / (up - dn) if up > dn else 0.0
    proj = g.copy()
    at_lo = theta <= lo + 1e-12
    at_hi = theta >= hi - 1e-12
    proj[at_lo & (g > 0)] = 0.0
    proj[at_hi & (g < 0)] = 0.0
    return float(np.max(np.abs(proj)))


def krsb_search(
    spec: MixtureSpec,
    beta: float,
    k: int,
    restarts: int = 8,
    seed: int = 0,
    tol: float = 1e-5,
) -> KrsbResult:
    """Full k-RSB search returning diagnostics alongside the best step c.d.f.

    Runs a coarse-to-fine cascade over the stage ladder (1, 2, 5, ...),
    warm-starting each stage from the previous best so the returned value
    is non-increasing in k for a fixed seed and restart count.
    """
    if k < 1 or restarts < 1:
        raise ValueError("k and restarts must be >= 1")
    b2 = beta * beta

    best_theta: np.ndarray | None = None
    best_value = math.inf
    best_stage_k = 0
    nfev_total = 0
    stage_values: list[float] = []

    for stage_k in _stage_schedule(k):
        dim = 2 * stage_k - 1

        def objective(theta, _k=stage_k):
            qs, ms = _theta_to_jumps(theta, _k)
            pw = _PiecewiseAlpha(qs, ms)
            return _cs_from_pieces(spec, beta, pw, float(qs[-1]))

        inits: list[np.ndarray] = []
        if best_theta is not None:
            prev_qs, prev_ms = _theta_to_jumps(best_theta, best_stage_k)
            inits.append(_jumps_to_theta(prev_qs, prev_ms, stage_k))
        inits.append(np.full(dim, 0.5))
        r = 0
        while len(inits) < restarts:
            rng = np.random.default_rng(seed + _STAGE_STRIDE * stage_k + _RESTART_STRIDE * r)
            inits.append(rng.uniform(0.0, 1.0, size=dim))
            r += 1

        stage_best_val = math.inf
        stage_best_theta = None
        for theta0 in inits[:restarts]:
            res = minimize(
                objective,
                theta0,
                method="L-BFGS-B",
                bounds=[(0.0, 1.0)] * dim,
                options={"maxfun": _MAXFUN, "ftol": 1e-15, "gtol": 1e-10},
            )
            nfev_total += res.nfev
            val = float(res.fun)
            if val < stage_best_val:
                stage_best_val = val
                stage_best_theta = np.asarray(res.x, float)
        best_theta = stage_best_theta
        best_value = stage_best_val
        best_stage_k = stage_k
        stage_values.append(stage_best_val)

    def final_objective(theta):
        qs, ms = _theta_to_jumps(theta, k)
        return _cs_from_pieces(spec, beta, _PiecewiseAlpha(qs, ms), float(qs[-1]))

    grad_norm = _projected_grad_norm(final_objective, best_theta)
    qs, ms = _theta_to_jumps(best_theta, k)
    alpha = _cleanup_jumps(qs, ms)
    value = cs_value(spec, beta, alpha)
    return KrsbResult(
        alpha=alpha,
        value=value,
        grad_norm=grad_norm,
        converged=grad_norm <= tol,
        nfev=nfev_total,
        stage_values=tuple(stage_values),
    )


def krsb_minimize(
    spec: MixtureSpec,
    beta: float,
    k: int,
    restarts: int = 8,
    seed: int = 0,
    tol: float = 1e-5,
) -> tuple[StepCDF, float]:
    """Minimize Q over step c.d.f.s with at most k jumps; returns (alpha, value).

    Multi-start box-constrained descent with deterministic seed splitting;
    warns with NonConvergenceWarning if the projected finite-difference
    gradient still exceeds ``tol`` at the evaluation cap.
    """
    res = krsb_search(spec, beta, k, restarts=restarts, seed=seed, tol=tol)
    if not res.converged:
        warnings.warn(
            f"k-RSB minimization stopped with projected gradient {res.grad_norm:.3e} > {tol:.1e}",
            NonConvergenceWarning,
            stacklevel=2,
        )
    return res.alpha, res.value
